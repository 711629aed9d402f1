#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pimns/model.hpp"

namespace pimns {

/// Whether a forward step ingests the prompt or emits a new token.
enum class Phase { Prompt, Generation };

struct ActivationEvent {
  std::size_t layer;
  std::size_t position;
  Phase phase;
  std::span<const float> post_sigma;  // σ(x·W_up), length d_ffn
};

/// Passive observer of MLP activations. Implementations must not assume the
/// span outlives the call.
class ProbeSink {
 public:
  virtual ~ProbeSink() = default;
  virtual void on_activation(const ActivationEvent& event) = 0;
};

/// Replaces the MLP evaluation of every layer. Receives the normalised input
/// rows for positions [first_position, first_position + x.rows()).
class MlpInterceptor {
 public:
  virtual ~MlpInterceptor() = default;
  virtual Tensor2D run(std::size_t layer, std::size_t first_position, const Tensor2D& x, const MlpWeights& w,
                       ActivationKind kind) = 0;
};

struct StepHooks {
  ProbeSink* sink = nullptr;
  /// Positions at or after this index are tagged Phase::Generation.
  std::size_t generation_from = std::numeric_limits<std::size_t>::max();
  MlpInterceptor* interceptor = nullptr;
};

/// One decoding stream over a shared bundle. Owns its KV cache; not
/// thread-safe, but any number of sessions may share one bundle.
class Session {
 public:
  explicit Session(const ModelBundle& bundle);

  /// Appends `ids` at the current position and returns the logits of the last
  /// one. Throws LengthError past max_seq, ArgumentError on empty input or
  /// out-of-vocabulary ids.
  std::vector<float> advance(std::span<const TokenId> ids, const StepHooks& hooks = {});

  std::size_t position() const { return position_; }

 private:
  const ModelBundle& bundle_;
  std::size_t position_ = 0;
  std::vector<std::vector<float>> k_cache_;  // per layer, position-major
  std::vector<std::vector<float>> v_cache_;
};

/// Logits for the final position, recomputed from scratch (no cache reuse).
/// Every MLP row is offered to `sink` tagged with `phase`.
std::vector<float> forward(const ModelBundle& bundle, std::span<const TokenId> ids, ProbeSink* sink = nullptr,
                           Phase phase = Phase::Prompt);

struct GenerationParams {
  std::size_t max_new_tokens = 64;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  std::vector<TokenId> stop_ids;
};

/// Temperatures below this decode greedily.
inline constexpr double kGreedyTemperature = 0.05;

struct GenerationResult {
  std::vector<TokenId> prompt_ids;
  std::vector<TokenId> generated_ids;
  std::string text;
  /// log-softmax (temperature 1) of the chosen token at each step.
  std::vector<double> logprobs;

  friend bool operator==(const GenerationResult&, const GenerationResult&) = default;
};

/// Prompt ids are <bos> followed by the tokenized prompt.
std::vector<TokenId> encode_prompt(const Tokenizer& tok, std::string_view prompt);

/// Decodes up to max_new_tokens. The forward step that emits each new token
/// (the prompt's last position for the first one, then each generated token's
/// position) is tagged Phase::Generation; all earlier prompt positions are
/// Phase::Prompt. A stop id is kept in the output and ends decoding.
/// Generation also ends early when the context is full.
GenerationResult generate(const ModelBundle& bundle, std::string_view prompt, const GenerationParams& params,
                          ProbeSink* sink = nullptr);

/// Same as generate() over pre-tokenized ids, with full hook access.
GenerationResult generate_ids(const ModelBundle& bundle, std::vector<TokenId> prompt_ids,
                              const GenerationParams& params, const StepHooks& hooks,
                              std::vector<std::vector<float>>* step_logits = nullptr);

/// Index of the largest value; ties go to the lowest index.
TokenId argmax(std::span<const float> logits);

}  // namespace pimns
