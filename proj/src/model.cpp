#include "pimns/model.hpp"

#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "pimns/errors.hpp"

namespace pimns {

std::vector<TensorSpec> required_tensors(const ModelConfig& c) {
  std::vector<TensorSpec> specs;
  const bool ln = c.norm == NormKind::LayerNorm;
  auto norm = [&](const std::string& prefix) {
    specs.push_back({prefix + ".weight", 1, c.d_model});
    if (ln) specs.push_back({prefix + ".bias", 1, c.d_model});
  };
  specs.push_back({"tok_embeddings", c.vocab_size, c.d_model});
  if (c.positional == PositionalKind::Learned) specs.push_back({"pos_embeddings", c.max_seq, c.d_model});
  for (std::size_t i = 0; i < c.n_layers; ++i) {
    const std::string p = fmt::format("layers.{}.", i);
    norm(p + "attn_norm");
    for (const char* m : {"wq", "wk", "wv", "wo"}) specs.push_back({p + "attn." + m, c.d_model, c.d_model});
    norm(p + "mlp_norm");
    specs.push_back({p + "mlp.w_up", c.d_model, c.d_ffn});
    if (is_gated(c.activation)) specs.push_back({p + "mlp.v_up", c.d_model, c.d_ffn});
    specs.push_back({p + "mlp.w_down", c.d_ffn, c.d_model});
  }
  norm("final_norm");
  specs.push_back({"lm_head", c.d_model, c.vocab_size});
  return specs;
}

void validate_weights(const ModelConfig& c, const WeightStore& w) {
  std::set<std::string> expected;
  for (const auto& s : required_tensors(c)) {
    expected.insert(s.name);
    auto it = w.find(s.name);
    if (it == w.end()) throw CheckpointFormatError(fmt::format("missing tensor '{}'", s.name));
    if (it->second.rows() != s.rows || it->second.cols() != s.cols) {
      throw CheckpointFormatError(fmt::format("tensor '{}' has shape {}x{}, expected {}x{}", s.name,
                                              it->second.rows(), it->second.cols(), s.rows, s.cols));
    }
  }
  for (const auto& [name, _] : w) {
    if (!expected.contains(name)) throw CheckpointFormatError(fmt::format("unexpected tensor '{}'", name));
  }
}

ModelBundle::ModelBundle(ModelConfig config, WeightStore weights, Tokenizer tokenizer)
    : config_(config), weights_(std::move(weights)), tokenizer_(std::move(tokenizer)) {
  config_.validate();
  if (tokenizer_.id_space() > config_.vocab_size) {
    throw ConfigError(fmt::format("tokenizer uses {} ids but vocab_size is {}", tokenizer_.id_space(),
                                  config_.vocab_size));
  }
  validate_weights(config_, weights_);
  for (const auto& [name, t] : weights_) require_finite(t, name);
  mlp_.reserve(config_.n_layers);
  for (std::size_t i = 0; i < config_.n_layers; ++i) {
    const std::string p = fmt::format("layers.{}.mlp.", i);
    MlpWeights m{weights_.at(p + "w_up"), std::nullopt, weights_.at(p + "w_down")};
    if (is_gated(config_.activation)) m.v_up = weights_.at(p + "v_up");
    mlp_.push_back(std::move(m));
  }
}

const Tensor2D& ModelBundle::weight(const std::string& name) const {
  auto it = weights_.find(name);
  if (it == weights_.end()) throw ConfigError(fmt::format("no tensor '{}'", name));
  return it->second;
}

bool operator==(const ModelBundle& a, const ModelBundle& b) {
  if (!(a.config_ == b.config_) || !(a.tokenizer_ == b.tokenizer_) || a.weights_.size() != b.weights_.size()) {
    return false;
  }
  for (const auto& [name, t] : a.weights_) {
    auto it = b.weights_.find(name);
    if (it == b.weights_.end() || !t.bit_equal(it->second)) return false;
  }
  return true;
}

ModelBundle init_random(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  WeightStore w;
  for (const auto& s : required_tensors(config)) {
    Tensor2D t(s.rows, s.cols);
    const bool is_norm = s.name.find("norm.") != std::string::npos;
    if (is_norm) {
      if (s.name.ends_with(".weight")) std::fill(t.data().begin(), t.data().end(), 1.0f);
    } else {
      const double scale = 1.0 / std::sqrt(static_cast<double>(s.rows));
      for (float& v : t.data()) {
        const double u = static_cast<double>(rng() >> 40) * 0x1.0p-24;
        v = static_cast<float>((2.0 * u - 1.0) * scale);
      }
    }
    w.emplace(s.name, std::move(t));
  }
  return ModelBundle(config, std::move(w), Tokenizer::byte_level());
}

}  // namespace pimns
