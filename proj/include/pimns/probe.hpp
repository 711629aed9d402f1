#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pimns/runtime.hpp"

namespace pimns {

struct NeuronId {
  std::size_t layer;
  std::size_t neuron;
  friend auto operator<=>(const NeuronId&, const NeuronId&) = default;
};

struct TokenActivationRecord {
  std::size_t layer;
  std::size_t step;
  std::size_t activated;
  std::size_t total;
};

/// Entries strictly greater than zero; +0.0 and -0.0 are not activated.
/// Throws InvalidValueError on NaN or infinite entries.
std::size_t count_activated(std::span<const float> values);

/// Per-neuron activation counts over the generated tokens of one or more runs.
class ActivationAccumulator {
 public:
  ActivationAccumulator() = default;
  ActivationAccumulator(std::size_t n_layers, std::size_t d_ffn);

  std::size_t n_layers() const { return n_layers_; }
  std::size_t d_ffn() const { return d_ffn_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t count(std::size_t layer, std::size_t neuron) const { return counts_[layer * d_ffn_ + neuron]; }
  std::int64_t activated_sum() const { return activated_sum_; }
  std::int64_t record_count() const { return record_count_; }
  std::int64_t generated_tokens() const { return generated_tokens_; }

  /// Prompt-phase vectors are ignored. A Generation-phase vector for layer 0
  /// opens a new token step. Throws ShapeError on a wrong length and
  /// ConfigError for an out-of-range layer.
  std::optional<TokenActivationRecord> ingest(std::size_t layer, std::span<const float> post_sigma, Phase phase);

  /// Elementwise sums. Throws ConfigError when dimensions differ.
  friend ActivationAccumulator merge(const ActivationAccumulator& a, const ActivationAccumulator& b);

  /// Builds an accumulator from raw totals (deserialisation, tests).
  static ActivationAccumulator from_counts(std::size_t n_layers, std::size_t d_ffn, std::vector<std::int64_t> counts,
                                           std::int64_t record_count, std::int64_t generated_tokens);

  friend bool operator==(const ActivationAccumulator&, const ActivationAccumulator&) = default;

 private:
  std::size_t n_layers_ = 0;
  std::size_t d_ffn_ = 0;
  std::vector<std::int64_t> counts_;
  std::int64_t activated_sum_ = 0;
  std::int64_t record_count_ = 0;
  std::int64_t generated_tokens_ = 0;
};

/// Adapts an accumulator to the runtime's sink interface.
class AccumulatorSink : public ProbeSink {
 public:
  explicit AccumulatorSink(ActivationAccumulator& acc) : acc_(acc) {}
  void on_activation(const ActivationEvent& e) override { acc_.ingest(e.layer, e.post_sigma, e.phase); }

 private:
  ActivationAccumulator& acc_;
};

struct RankedNeuron {
  NeuronId id;
  std::int64_t count;
  friend bool operator==(const RankedNeuron&, const RankedNeuron&) = default;
};

struct ActivationSummary {
  std::size_t n_layers = 0;
  std::size_t d_ffn = 0;
  std::int64_t generated_tokens = 0;
  double proportion = 0.0;                  // percent
  std::vector<double> layer_proportions;    // percent, one per layer
  std::vector<std::int64_t> counts;         // n_layers x d_ffn, row-major
  std::vector<RankedNeuron> ranking;        // every neuron, count desc then id asc

  friend bool operator==(const ActivationSummary&, const ActivationSummary&) = default;
};

/// Token-pooled proportion: 100 * activated / (tokens * n_layers * d_ffn).
/// Throws EmptyRunError when no token was generated.
ActivationSummary summarize(const ActivationAccumulator& acc);

/// First ceil(fraction * n_layers * d_ffn) neurons of the ranking.
/// Throws ArgumentError unless 0 < fraction <= 1.
std::vector<RankedNeuron> top_fraction(const ActivationSummary& summary, double fraction);

/// Per-neuron counts as an n_layers x d_ffn matrix.
std::vector<std::vector<std::int64_t>> layer_heatmap(const ActivationAccumulator& acc);

struct PruneStep {
  std::size_t step;
  TokenId token;
  /// max |logits_pruned - logits| at this step.
  double logit_delta;
  /// max over layers of max |mlp_out_pruned - mlp_out| for the same MLP input.
  double mlp_delta;
  /// max over layers of tail * Σ_{clamped j} ||row j of the effective down projection||₂.
  double mlp_bound;
  /// Every layer's MLP delta is within its own bound.
  bool within_bound;
};

struct PruneReport {
  ActivationKind kind;
  double tail_bound;
  std::vector<PruneStep> steps;

  double max_logit_delta() const;
  double max_mlp_delta() const;
  double max_mlp_bound() const;
  bool all_within_bound() const;
};

/// Generates normally, then replays the same tokens with every non-positive
/// post-σ entry clamped to exactly zero before the down projection, and
/// reports per generated step how much that changes the MLP outputs and the
/// logits.
PruneReport prune_and_compare(const ModelBundle& bundle, std::string_view prompt, const GenerationParams& params);

}  // namespace pimns
