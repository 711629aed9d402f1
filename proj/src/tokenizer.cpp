#include "pimns/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <span>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pimns/errors.hpp"

namespace pimns {

namespace {

constexpr std::string_view kBos = "<bos>";
constexpr std::string_view kEos = "<eos>";

// "<0xHH>" -> byte value, or -1.
int parse_byte_token(std::string_view s) {
  if (s.size() != 6 || s.substr(0, 3) != "<0x" || s[5] != '>') return -1;
  int v = 0;
  for (char c : s.substr(3, 2)) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= c - '0';
    else if (c >= 'A' && c <= 'F') v |= c - 'A' + 10;
    else if (c >= 'a' && c <= 'f') v |= c - 'a' + 10;
    else return -1;
  }
  return v;
}

}  // namespace

Tokenizer Tokenizer::byte_level() { return Tokenizer{}; }

Tokenizer Tokenizer::from_vocab(std::vector<std::pair<std::string, TokenId>> entries) {
  Tokenizer t;
  t.mode_ = Mode::Vocab;
  t.bos_ = t.eos_ = -1;
  t.id_space_ = 0;
  std::vector<bool> have_byte(256, false);
  std::vector<std::pair<std::string, TokenId>> byte_entries;
  for (const auto& [text, id] : entries) {
    if (id < 0) throw ConfigError(fmt::format("vocab: negative id {}", id));
    if (text.empty()) throw ConfigError(fmt::format("vocab: empty token for id {}", id));
    if (!t.by_id_.emplace(id, text).second) throw ConfigError(fmt::format("vocab: duplicate id {}", id));
    t.id_space_ = std::max<std::size_t>(t.id_space_, static_cast<std::size_t>(id) + 1);
    if (text == kBos) {
      t.bos_ = id;
    } else if (text == kEos) {
      t.eos_ = id;
    } else if (int b = parse_byte_token(text); b >= 0) {
      if (have_byte[static_cast<std::size_t>(b)]) throw ConfigError(fmt::format("vocab: duplicate token '{}'", text));
      have_byte[static_cast<std::size_t>(b)] = true;
      t.by_id_[id] = std::string(1, static_cast<char>(b));
      byte_entries.emplace_back(t.by_id_[id], id);
    } else {
      if (!t.by_text_.emplace(text, id).second) throw ConfigError(fmt::format("vocab: duplicate token '{}'", text));
      t.max_token_bytes_ = std::max(t.max_token_bytes_, text.size());
    }
  }
  // A plain single-character entry wins over the byte fallback for the same byte.
  for (auto& [text, id] : byte_entries) t.by_text_.emplace(std::move(text), id);
  if (t.bos_ < 0 || t.eos_ < 0) throw ConfigError("vocab: <bos> and <eos> entries are required");
  for (int b = 0; b < 256; ++b) {
    if (!have_byte[static_cast<std::size_t>(b)]) {
      throw ConfigError(fmt::format("vocab: missing byte fallback <0x{:02X}>", b));
    }
  }
  t.entries_ = std::move(entries);
  return t;
}

Tokenizer Tokenizer::load_vocab_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open vocab file '{}'", path.string()));
  std::vector<std::pair<std::string, TokenId>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError(fmt::format("vocab line {}: expected id<TAB>token", lineno));
    try {
      std::size_t used = 0;
      const long id = std::stol(line.substr(0, tab), &used);
      if (used != tab) throw std::invalid_argument("trailing characters");
      entries.emplace_back(line.substr(tab + 1), static_cast<TokenId>(id));
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("vocab line {}: bad id", lineno));
    }
  }
  return from_vocab(std::move(entries));
}

std::vector<TokenId> Tokenizer::tokenize(std::string_view text) const {
  std::vector<TokenId> ids;
  ids.reserve(text.size());
  if (mode_ == Mode::Byte) {
    for (unsigned char c : text) ids.push_back(static_cast<TokenId>(c));
    return ids;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t longest = std::min(max_token_bytes_, text.size() - pos);
    for (std::size_t len = longest; len >= 1; --len) {
      auto it = by_text_.find(std::string(text.substr(pos, len)));
      if (it != by_text_.end()) {
        ids.push_back(it->second);
        pos += len;
        break;
      }
    }
  }
  return ids;
}

std::string Tokenizer::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id == bos_ || id == eos_) continue;
    if (mode_ == Mode::Byte) {
      if (id >= 0 && id < 256) out.push_back(static_cast<char>(id));
      continue;
    }
    if (auto it = by_id_.find(id); it != by_id_.end()) out += it->second;
  }
  return out;
}

nlohmann::json to_json(const Tokenizer& t) {
  nlohmann::json j;
  j["mode"] = t.mode() == Tokenizer::Mode::Byte ? "byte" : "vocab";
  if (t.mode() == Tokenizer::Mode::Vocab) {
    auto arr = nlohmann::json::array();
    for (const auto& [text, id] : t.entries()) arr.push_back({id, text});
    j["vocab"] = std::move(arr);
  }
  return j;
}

Tokenizer tokenizer_from_json(const nlohmann::json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "byte") return Tokenizer::byte_level();
  if (mode != "vocab") throw ConfigError(fmt::format("unknown tokenizer mode '{}'", mode));
  std::vector<std::pair<std::string, TokenId>> entries;
  for (const auto& e : j.at("vocab")) entries.emplace_back(e.at(1).get<std::string>(), e.at(0).get<TokenId>());
  return Tokenizer::from_vocab(std::move(entries));
}

}  // namespace pimns
