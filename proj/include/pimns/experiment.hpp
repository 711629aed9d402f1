#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pimns/backend.hpp"
#include "pimns/dataset.hpp"
#include "pimns/probe.hpp"

namespace pimns {

struct PredictionEntry {
  std::string id;
  std::string prompt;
  std::string output;
  double latency_ms = 0.0;
  std::size_t generated_tokens = 0;
  bool failed = false;
  std::string error;

  /// Latency is wall-clock noise and does not take part in equality.
  friend bool operator==(const PredictionEntry& a, const PredictionEntry& b) {
    return a.id == b.id && a.prompt == b.prompt && a.output == b.output && a.generated_tokens == b.generated_tokens &&
           a.failed == b.failed && a.error == b.error;
  }
};

/// One entry per dataset example, in dataset order.
struct Predictions {
  std::string strategy;
  std::vector<PredictionEntry> entries;
  friend bool operator==(const Predictions&, const Predictions&) = default;
};

struct RunOptions {
  Strategy strategy;
  GenerationParams params;
  bool probe = false;
  std::size_t workers = 1;
  bool continue_on_error = false;
  std::optional<std::vector<LanguageScore>> scores;
  std::optional<std::string> template_id;
  const TemplateRegistry* registry = nullptr;  // builtin when null
};

struct ExperimentResult {
  Predictions predictions;
  /// Present when probing ran on an internal backend.
  std::optional<ActivationAccumulator> activations;
};

/// The exact prompt run_experiment sends for dataset[index]. Few-shot
/// demonstrations are the other examples in dataset order.
std::string example_prompt(std::span<const Example> dataset, std::size_t index, const RunOptions& options);

/// Splits the dataset into `workers` contiguous shards, each with its own
/// accumulator, and merges the results in dataset order. Throws
/// ArgumentError on an empty dataset or zero workers, ConfigError when
/// probing is requested from a backend that cannot probe, and ExampleError
/// (carrying the example id and the original exception) when an example
/// fails and continue_on_error is off.
ExperimentResult run_experiment(std::span<const Example> dataset, const Backend& backend, const RunOptions& options);

/// JSONL, one {id, prompt, output, generated_tokens, latency_ms, failed, error?} per line.
void write_predictions(const std::filesystem::path& path, const Predictions& predictions);

}  // namespace pimns
