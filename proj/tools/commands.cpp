#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pimns/backend.hpp"
#include "pimns/dataset.hpp"
#include "pimns/errors.hpp"
#include "pimns/experiment.hpp"
#include "pimns/metrics.hpp"
#include "pimns/model.hpp"
#include "pimns/report.hpp"

namespace pimns::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path));
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(0, path, e.what());
  }
}

GenerationParams to_params(const DecodeOptions& d) {
  GenerationParams p;
  p.max_new_tokens = d.max_new_tokens;
  p.temperature = d.temperature;
  p.seed = d.seed;
  for (int id : d.stop_ids) {
    if (id < 0) throw ArgumentError(fmt::format("stop id {} is negative", id));
    p.stop_ids.push_back(static_cast<TokenId>(id));
  }
  return p;
}

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

std::optional<std::vector<LanguageScore>> load_scores(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return scores_from_json(read_json(path));
}

}  // namespace

int guarded(const std::function<int()>& command) {
  try {
    return command();
  } catch (const ExampleError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeFailure;
  } catch (const ArgumentError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsageFailure;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsageFailure;
  } catch (const SchemaError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsageFailure;
  } catch (const ParseError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsageFailure;
  } catch (const RenderError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsageFailure;
  } catch (const RegistryError& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsageFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntimeFailure;
  }
}

int cmd_model_init(const ModelInitOptions& o) {
  ModelConfig cfg = o.config_path.empty() ? micro_config() : config_from_json(read_json(o.config_path));
  if (o.activation) cfg.activation = parse_activation_kind(*o.activation);
  if (o.n_layers) cfg.n_layers = *o.n_layers;
  if (o.d_model) cfg.d_model = *o.d_model;
  if (o.d_ffn) cfg.d_ffn = *o.d_ffn;
  if (o.n_heads) cfg.n_heads = *o.n_heads;
  cfg.validate();
  const ModelBundle bundle = init_random(cfg, o.seed);
  save_checkpoint(bundle, o.out);
  fmt::print("{}\n", config_hash(cfg));
  return kOk;
}

int cmd_prompt(const PromptOptions& o) {
  PimSpec spec = pim_spec_from_json(read_json(o.spec_json));
  if (!o.template_id.empty()) spec.template_id = o.template_id;
  const Strategy strategy = Strategy::parse(o.strategy);
  const auto scores = load_scores(o.scores_json);
  std::string prompt;
  if (o.templates_file.empty()) {
    prompt = build_prompt(spec, scores, strategy);
  } else {
    prompt = build_prompt(spec, scores, strategy, TemplateRegistry::with_overrides(o.templates_file));
  }
  std::fwrite(prompt.data(), 1, prompt.size(), stdout);
  std::fflush(stdout);
  return kOk;
}

int cmd_run(const RunOptions& o) {
  const std::string started = utc_now();
  pimns::RunOptions ro;
  ro.strategy = Strategy::parse(o.strategy);
  ro.params = to_params(o.decode);
  ro.probe = o.probe;
  ro.workers = o.workers;
  ro.continue_on_error = o.continue_on_error;
  ro.scores = load_scores(o.scores_json);
  if (!o.template_id.empty()) ro.template_id = o.template_id;
  std::optional<TemplateRegistry> registry;
  if (!o.templates_file.empty()) {
    registry = TemplateRegistry::with_overrides(o.templates_file);
    ro.registry = &*registry;
  }

  std::optional<TaskKind> task;
  if (!o.task.empty()) task = parse_task_kind(o.task);
  const std::vector<Example> dataset = load_dataset(o.dataset, task);
  if (dataset.empty()) throw ArgumentError(fmt::format("dataset '{}' has no examples", o.dataset));

  std::unique_ptr<Backend> backend;
  std::string config_hash_text;
  if (o.backend.rfind("internal:", 0) == 0) {
    auto bundle = std::make_shared<const ModelBundle>(load_checkpoint(o.backend.substr(9)));
    config_hash_text = config_hash(bundle->config());
    backend = std::make_unique<InternalBackend>(std::move(bundle));
  } else if (o.backend.rfind("http:", 0) == 0 || o.backend.rfind("https:", 0) == 0) {
    HttpBackendConfig hc;
    hc.endpoint = o.backend.rfind("http:", 0) == 0 && o.backend.rfind("http://", 0) != 0 ? o.backend.substr(5)
                                                                                          : o.backend;
    hc.model = o.http_model;
    hc.token_env = o.http_token_env;
    hc.timeout = std::chrono::milliseconds(o.http_timeout_ms);
    hc.max_retries = o.http_retries;
    hc.max_in_flight = o.http_max_in_flight;
    backend = std::make_unique<HttpBackend>(std::move(hc));
    if (ro.probe) {
      fmt::print(stderr, "warning: the http backend cannot expose activations; probing disabled\n");
      ro.probe = false;
    }
  } else {
    throw ArgumentError(fmt::format("backend '{}' must be internal:PATH or http:URL", o.backend));
  }

  const ExperimentResult result = run_experiment(dataset, *backend, ro);

  ExperimentReport report;
  report.strategy = result.predictions.strategy;
  std::vector<std::string> gen_hyps, cls_preds, cls_labels;
  std::vector<std::vector<std::string>> gen_refs;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& out = result.predictions.entries[i].output;
    if (is_classification(dataset[i].task)) {
      cls_preds.push_back(out);
      cls_labels.push_back(*dataset[i].label);
    } else {
      gen_hyps.push_back(out);
      gen_refs.push_back(dataset[i].references);
    }
  }
  if (!gen_hyps.empty()) report.metrics.push_back({"bleu", bleu(gen_hyps, gen_refs)});
  if (!cls_preds.empty()) report.metrics.push_back({"accuracy", accuracy(cls_preds, cls_labels)});
  if (result.activations) report.activation = summarize(*result.activations);
  report.metadata.config_hash = config_hash_text;
  report.metadata.seed = ro.params.seed;
  report.metadata.started_at = started;
  report.metadata.finished_at = utc_now();
  report.metadata.dataset_path = o.dataset;
  report.metadata.example_count = dataset.size();
  report.metadata.backend = backend->describe();

  const auto files = write_report(report, o.out_dir);
  write_predictions(fs::path(o.out_dir) / "predictions.jsonl", result.predictions);
  for (const auto& m : report.metrics) fmt::print("{} {} {}\n", report.strategy, m.name, format_number(m.value));
  if (report.activation) fmt::print("{} proportion {}\n", report.strategy, format_number(report.activation->proportion));
  std::size_t failed = 0;
  for (const auto& e : result.predictions.entries) failed += e.failed ? 1 : 0;
  if (failed) fmt::print(stderr, "warning: {} example(s) failed\n", failed);
  return kOk;
}

int cmd_prune_check(const PruneCheckOptions& o) {
  const std::string prompt = read_file(o.prompt_file);
  if (prompt.empty()) throw ArgumentError(fmt::format("prompt file '{}' is empty", o.prompt_file));
  const ModelBundle bundle = load_checkpoint(o.checkpoint);
  const PruneReport r = prune_and_compare(bundle, prompt, to_params(o.decode));

  std::ofstream out(o.out, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write '{}'", o.out));
  out << "step,token,mlp_delta,mlp_bound,logit_delta,within_bound\n";
  for (const auto& s : r.steps) {
    out << fmt::format("{},{},{},{},{},{}\n", s.step, s.token, format_number(s.mlp_delta), format_number(s.mlp_bound),
                       format_number(s.logit_delta), s.within_bound ? "true" : "false");
  }
  out.close();
  if (!out) throw IoError(fmt::format("write failed for '{}'", o.out));

  fmt::print("activation: {}\n", to_string(r.kind));
  fmt::print("tail_bound: {}\n", format_number(r.tail_bound));
  fmt::print("steps: {}\n", r.steps.size());
  fmt::print("max_delta: {}\n", format_number(r.max_mlp_delta()));
  fmt::print("max_bound: {}\n", format_number(r.max_mlp_bound()));
  fmt::print("max_logit_delta: {}\n", format_number(r.max_logit_delta()));
  fmt::print("within_bound: {}\n", r.all_within_bound() ? "true" : "false");
  if (!r.all_within_bound()) {
    fmt::print(stderr, "error: measured delta exceeds the analytic bound\n");
    return kRuntimeFailure;
  }
  return kOk;
}

int cmd_compare(const CompareOptions& o) {
  if (o.candidates.empty()) throw ArgumentError("compare needs a baseline and at least one candidate");
  std::vector<ExperimentReport> reports;
  reports.push_back(read_report(o.baseline));
  for (const auto& c : o.candidates) reports.push_back(read_report(c));
  const ComparisonTable table = compare(reports);
  write_compare_csv(table, o.out);
  for (const auto& row : table.rows) {
    fmt::print("{} {} {} {}\n", row.strategy, format_number(row.proportion), format_number(row.delta),
               to_string(row.label));
  }
  return kOk;
}

}  // namespace pimns::cli
