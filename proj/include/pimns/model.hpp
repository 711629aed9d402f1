#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pimns/activations.hpp"
#include "pimns/config.hpp"
#include "pimns/tensor.hpp"
#include "pimns/tokenizer.hpp"

namespace pimns {

/// Weight naming scheme (shapes as rows x cols):
///
///   tok_embeddings              vocab_size x d_model
///   pos_embeddings              max_seq x d_model        (learned positions only)
///   layers.{i}.attn_norm.weight 1 x d_model
///   layers.{i}.attn_norm.bias   1 x d_model              (layernorm only)
///   layers.{i}.attn.wq|wk|wv|wo d_model x d_model
///   layers.{i}.mlp_norm.weight  1 x d_model
///   layers.{i}.mlp_norm.bias    1 x d_model              (layernorm only)
///   layers.{i}.mlp.w_up         d_model x d_ffn
///   layers.{i}.mlp.v_up         d_model x d_ffn          (gated kinds only)
///   layers.{i}.mlp.w_down       d_ffn x d_model
///   final_norm.weight           1 x d_model
///   final_norm.bias             1 x d_model              (layernorm only)
///   lm_head                     d_model x vocab_size
using WeightStore = std::map<std::string, Tensor2D>;

struct TensorSpec {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

/// Every tensor the config requires, in canonical order.
std::vector<TensorSpec> required_tensors(const ModelConfig& c);

/// Immutable after construction; share it across sessions via const reference.
class ModelBundle {
 public:
  /// Validates the config, the tokenizer against vocab_size, and the weight
  /// names/shapes. Throws ConfigError (or CheckpointFormatError for weights).
  ModelBundle(ModelConfig config, WeightStore weights, Tokenizer tokenizer);

  const ModelConfig& config() const { return config_; }
  const WeightStore& weights() const { return weights_; }
  const Tokenizer& tokenizer() const { return tokenizer_; }
  const Tensor2D& weight(const std::string& name) const;
  const MlpWeights& mlp_weights(std::size_t layer) const { return mlp_[layer]; }

  friend bool operator==(const ModelBundle& a, const ModelBundle& b);

 private:
  ModelConfig config_;
  WeightStore weights_;
  Tokenizer tokenizer_;
  std::vector<MlpWeights> mlp_;
};

/// Checks names and shapes against the config. Throws CheckpointFormatError
/// naming the first missing, extra or mis-shaped tensor.
void validate_weights(const ModelConfig& c, const WeightStore& w);

/// Deterministic random weights. Tensors are filled in canonical order from
/// one mt19937_64 stream seeded with `seed`; each entry is
/// (2u - 1) / sqrt(fan_in) with u = (draw >> 40) * 2^-24 in [0, 1), fan_in the
/// tensor's row count. Norm weights are 1, norm biases 0. Byte tokenizer.
ModelBundle init_random(const ModelConfig& config, std::uint64_t seed);

/// Checkpoint layout: "PIMNS1\n", one line of JSON manifest (config,
/// tokenizer, blob_bytes, tensors[{name, rows, cols, offset}]), "\n", then the
/// blob of little-endian float32 values. Offsets are bytes from blob start.
void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_checkpoint(const std::filesystem::path& path);

inline constexpr std::string_view kCheckpointMagic = "PIMNS1\n";

}  // namespace pimns
