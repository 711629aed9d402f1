#include "pimns/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pimns/errors.hpp"

namespace pimns {

namespace {

PimSpec spec_of(const Example& ex, const RunOptions& o) {
  PimSpec s = ex.to_spec();
  s.template_id = o.template_id;
  return s;
}

const TemplateRegistry& registry_of(const RunOptions& o) {
  return o.registry ? *o.registry : TemplateRegistry::builtin();
}

struct Shard {
  std::vector<PredictionEntry> entries;
  ActivationAccumulator acc;
  std::exception_ptr error;
  std::size_t error_index = 0;
};

}  // namespace

std::string example_prompt(std::span<const Example> dataset, std::size_t index, const RunOptions& options) {
  const Example& ex = dataset[index];
  const PimSpec spec = spec_of(ex, options);
  if (options.strategy.shots == 0) return build_prompt(spec, options.scores, options.strategy, registry_of(options));
  std::vector<Demonstration> demos;
  for (std::size_t j = 0; j < dataset.size() && demos.size() < options.strategy.shots; ++j) {
    if (j == index) continue;
    demos.push_back({spec_of(dataset[j], options), dataset[j].answer()});
  }
  return build_few_shot_prompt(spec, options.scores, options.strategy, demos, registry_of(options));
}

ExperimentResult run_experiment(std::span<const Example> dataset, const Backend& backend, const RunOptions& options) {
  if (dataset.empty()) throw ArgumentError("dataset is empty");
  if (options.workers == 0) throw ArgumentError("workers must be at least 1");
  if (options.probe && !backend.supports_probe()) {
    throw ConfigError(fmt::format("backend '{}' cannot expose activations", backend.describe()));
  }
  std::size_t n_layers = 0;
  std::size_t d_ffn = 0;
  if (options.probe) {
    const auto& cfg = dynamic_cast<const InternalBackend&>(backend).bundle().config();
    n_layers = cfg.n_layers;
    d_ffn = cfg.d_ffn;
  }

  const std::size_t n = dataset.size();
  const std::size_t workers = std::min(options.workers, n);
  std::vector<Shard> shards(workers);
  std::atomic<bool> abort{false};

  auto run_shard = [&](std::size_t w) {
    Shard& shard = shards[w];
    if (options.probe) shard.acc = ActivationAccumulator(n_layers, d_ffn);
    AccumulatorSink sink(shard.acc);
    const std::size_t begin = w * n / workers;
    const std::size_t end = (w + 1) * n / workers;
    for (std::size_t i = begin; i < end; ++i) {
      if (abort.load()) return;
      PredictionEntry entry;
      entry.id = dataset[i].id;
      try {
        entry.prompt = example_prompt(dataset, i, options);
        const auto t0 = std::chrono::steady_clock::now();
        Completion c = backend.complete(entry.prompt, options.params, options.probe ? &sink : nullptr);
        entry.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        entry.output = std::move(c.text);
        entry.generated_tokens = c.generated_tokens;
      } catch (const std::exception& e) {
        if (!options.continue_on_error) {
          shard.error = std::current_exception();
          shard.error_index = i;
          abort.store(true);
          return;
        }
        entry.failed = true;
        entry.error = e.what();
      }
      shard.entries.push_back(std::move(entry));
    }
  };

  if (workers == 1) {
    run_shard(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run_shard, w);
  }

  for (const Shard& s : shards) {
    if (!s.error) continue;
    const std::string& id = dataset[s.error_index].id;
    try {
      std::rethrow_exception(s.error);
    } catch (const std::exception& e) {
      throw ExampleError(id, e.what(), s.error);
    }
  }

  ExperimentResult result;
  result.predictions.strategy = options.strategy.label();
  result.predictions.entries.reserve(n);
  ActivationAccumulator merged;
  for (Shard& s : shards) {
    for (auto& e : s.entries) result.predictions.entries.push_back(std::move(e));
    if (options.probe) merged = merge(merged, s.acc);
  }
  if (options.probe) result.activations = std::move(merged);
  return result;
}

void write_predictions(const std::filesystem::path& path, const Predictions& predictions) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  for (const auto& e : predictions.entries) {
    nlohmann::ordered_json j{{"id", e.id},
                             {"strategy", predictions.strategy},
                             {"prompt", e.prompt},
                             {"output", e.output},
                             {"generated_tokens", e.generated_tokens},
                             {"failed", e.failed}};
    if (e.failed) j["error"] = e.error;
    // Model output may be arbitrary bytes; invalid UTF-8 becomes U+FFFD.
    out << j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
  }
  if (!out) throw IoError(fmt::format("write failed for '{}'", path.string()));
}

}  // namespace pimns
