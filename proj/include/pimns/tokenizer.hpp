#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pimns {

using TokenId = std::int32_t;

/// Byte-level or vocabulary tokenizer.
///
/// Byte mode: ids 0..255 are raw bytes, 256 is <bos>, 257 is <eos>.
/// Vocab mode: entries are arbitrary strings; "<0xHH>" entries denote single
/// raw bytes, "<bos>"/"<eos>" special tokens. Segmentation is greedy longest
/// match, and all 256 byte entries must exist so segmentation is total.
class Tokenizer {
 public:
  enum class Mode { Byte, Vocab };

  static Tokenizer byte_level();
  /// entries: (token string, id). Throws ConfigError when byte fallbacks or
  /// specials are missing, or ids/strings repeat.
  static Tokenizer from_vocab(std::vector<std::pair<std::string, TokenId>> entries);
  /// UTF-8 lines "id<TAB>token". Throws IoError / ConfigError.
  static Tokenizer load_vocab_file(const std::filesystem::path& path);

  Mode mode() const { return mode_; }
  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  /// Largest id in use + 1.
  std::size_t id_space() const { return id_space_; }
  const std::vector<std::pair<std::string, TokenId>>& entries() const { return entries_; }

  std::vector<TokenId> tokenize(std::string_view text) const;
  /// Specials and ids without an entry render as nothing.
  std::string detokenize(std::span<const TokenId> ids) const;

  friend bool operator==(const Tokenizer& a, const Tokenizer& b) {
    return a.mode_ == b.mode_ && a.entries_ == b.entries_;
  }

 private:
  Mode mode_ = Mode::Byte;
  TokenId bos_ = 256;
  TokenId eos_ = 257;
  std::size_t id_space_ = 258;
  std::vector<std::pair<std::string, TokenId>> entries_;
  // Vocab mode lookup tables.
  std::unordered_map<std::string, TokenId> by_text_;
  std::unordered_map<TokenId, std::string> by_id_;
  std::size_t max_token_bytes_ = 1;
};

nlohmann::json to_json(const Tokenizer& t);
Tokenizer tokenizer_from_json(const nlohmann::json& j);

}  // namespace pimns
