#include "pimns/config.hpp"

#include <nlohmann/json.hpp>
#include <fmt/format.h>

#include "pimns/errors.hpp"

namespace pimns {

std::string_view to_string(NormKind k) { return k == NormKind::LayerNorm ? "layernorm" : "rmsnorm"; }
std::string_view to_string(PositionalKind k) { return k == PositionalKind::Rotary ? "rotary" : "learned"; }

NormKind parse_norm_kind(std::string_view s) {
  if (s == "layernorm") return NormKind::LayerNorm;
  if (s == "rmsnorm") return NormKind::RmsNorm;
  throw ConfigError(fmt::format("unknown norm '{}'", s));
}

PositionalKind parse_positional_kind(std::string_view s) {
  if (s == "rotary") return PositionalKind::Rotary;
  if (s == "learned") return PositionalKind::Learned;
  throw ConfigError(fmt::format("unknown positional encoding '{}'", s));
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(fmt::format("{} must be >= 1", name));
  };
  positive(n_layers, "n_layers");
  positive(d_model, "d_model");
  positive(d_ffn, "d_ffn");
  positive(n_heads, "n_heads");
  positive(vocab_size, "vocab_size");
  if (max_seq < 2) throw ConfigError("max_seq must be >= 2");
  if (d_model % n_heads != 0) {
    throw ConfigError(fmt::format("d_model {} is not divisible by n_heads {}", d_model, n_heads));
  }
  if (positional == PositionalKind::Rotary && head_dim() % 2 != 0) {
    throw ConfigError(fmt::format("rotary positions need an even head dim, got {}", head_dim()));
  }
}

ModelConfig micro_config() { return ModelConfig{}; }

nlohmann::json to_json(const ModelConfig& c) {
  return nlohmann::json{{"n_layers", c.n_layers},
                        {"d_model", c.d_model},
                        {"d_ffn", c.d_ffn},
                        {"n_heads", c.n_heads},
                        {"vocab_size", c.vocab_size},
                        {"max_seq", c.max_seq},
                        {"activation", std::string(to_string(c.activation))},
                        {"norm", std::string(to_string(c.norm))},
                        {"positional", std::string(to_string(c.positional))}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c = micro_config();
  auto count = [&](const char* key, std::size_t& dst) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(fmt::format("config '{}' must be a non-negative integer", key));
    }
    dst = v.get<std::size_t>();
  };
  count("n_layers", c.n_layers);
  count("d_model", c.d_model);
  count("d_ffn", c.d_ffn);
  count("n_heads", c.n_heads);
  count("vocab_size", c.vocab_size);
  count("max_seq", c.max_seq);
  try {
    if (j.contains("activation")) c.activation = parse_activation_kind(j.at("activation").get<std::string>());
    if (j.contains("norm")) c.norm = parse_norm_kind(j.at("norm").get<std::string>());
    if (j.contains("positional")) c.positional = parse_positional_kind(j.at("positional").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  for (const auto& [key, _] : j.items()) {
    if (!to_json(c).contains(key)) throw ConfigError(fmt::format("unknown model config key '{}'", key));
  }
  c.validate();
  return c;
}

std::string config_hash(const ModelConfig& c) {
  const std::string canon = to_json(c).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace pimns
