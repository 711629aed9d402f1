#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "pimns/activations.hpp"

namespace pimns {

enum class NormKind { LayerNorm, RmsNorm };
enum class PositionalKind { Rotary, Learned };

std::string_view to_string(NormKind k);
std::string_view to_string(PositionalKind k);
NormKind parse_norm_kind(std::string_view s);
PositionalKind parse_positional_kind(std::string_view s);

struct ModelConfig {
  std::size_t n_layers = 2;
  std::size_t d_model = 32;
  std::size_t d_ffn = 64;
  std::size_t n_heads = 4;
  std::size_t vocab_size = 258;
  std::size_t max_seq = 512;
  ActivationKind activation = ActivationKind::SwiGLU;
  NormKind norm = NormKind::RmsNorm;
  PositionalKind positional = PositionalKind::Rotary;

  std::size_t head_dim() const { return d_model / n_heads; }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// The 2-layer micro configuration used by the CLI when no config is given.
ModelConfig micro_config();

nlohmann::json to_json(const ModelConfig& c);
/// Missing keys keep their micro_config() defaults. Throws ConfigError.
ModelConfig config_from_json(const nlohmann::json& j);

/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ModelConfig& c);

}  // namespace pimns
