#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"

using namespace pimns::cli;

namespace {

void add_decode_flags(CLI::App* cmd, DecodeOptions& d) {
  cmd->add_option("--max-new-tokens", d.max_new_tokens, "Tokens to generate per prompt")->capture_default_str();
  cmd->add_option("--temperature", d.temperature, "Sampling temperature; below 0.05 decodes greedily")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", d.seed, "Sampling seed")->capture_default_str();
  cmd->add_option("--stop-id", d.stop_ids, "Token id that ends decoding (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel multilingual prompting and MLP activation profiling"};
  app.require_subcommand(1);
  app.set_config("--config-file", "", "TOML-style file with one [section] per subcommand; flags override it");
  bool verbose = false;
  app.add_flag("--verbose", verbose, "Print the resolved configuration to stderr");

  ModelInitOptions init;
  auto* c_init = app.add_subcommand("model-init", "Write a checkpoint with deterministic random weights");
  c_init->add_option("--config", init.config_path, "Model config JSON; defaults to the 2-layer micro config")
      ->check(CLI::ExistingFile);
  c_init->add_option("--seed", init.seed, "Weight seed")->capture_default_str();
  c_init->add_option("--out", init.out, "Checkpoint path")->required();
  c_init->add_option("--activation", init.activation, "relu, gelu, silu, geglu or swiglu");
  c_init->add_option("--layers", init.n_layers, "Override n_layers");
  c_init->add_option("--d-model", init.d_model, "Override d_model");
  c_init->add_option("--d-ffn", init.d_ffn, "Override d_ffn");
  c_init->add_option("--heads", init.n_heads, "Override n_heads");

  PromptOptions prompt;
  auto* c_prompt = app.add_subcommand("prompt", "Render one prompt to standard output");
  c_prompt->add_option("--spec-json", prompt.spec_json, "Input spec JSON")->required()->check(CLI::ExistingFile);
  c_prompt->add_option("--strategy", prompt.strategy, "direct, pivot:LANG, pim:K, pim_ms, pim_pa, pim_ml[:K], fewshot:N/...")
      ->capture_default_str();
  c_prompt->add_option("--template", prompt.template_id, "Template id, e.g. mt.pim");
  c_prompt->add_option("--templates-file", prompt.templates_file, "Extra or replacement templates")
      ->check(CLI::ExistingFile);
  c_prompt->add_option("--scores-json", prompt.scores_json, "Per-language scores {code: score}")
      ->check(CLI::ExistingFile);

  RunOptions run;
  auto* c_run = app.add_subcommand("run", "Run a strategy over a dataset and write reports");
  c_run->add_option("--dataset", run.dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
  c_run->add_option("--task", run.task, "Require every example to have this task");
  c_run->add_option("--strategy", run.strategy, "Prompting strategy")->capture_default_str();
  c_run->add_option("--backend", run.backend, "internal:CHECKPOINT or http:URL")->required();
  c_run->add_option("--template", run.template_id, "Template id override");
  c_run->add_option("--templates-file", run.templates_file, "Extra or replacement templates")
      ->check(CLI::ExistingFile);
  c_run->add_option("--scores-json", run.scores_json, "Per-language scores {code: score}")->check(CLI::ExistingFile);
  c_run->add_flag("--probe", run.probe, "Record MLP activations (internal backend only)");
  c_run->add_option("--workers", run.workers, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
  c_run->add_flag("--continue-on-error", run.continue_on_error, "Record failing examples instead of aborting");
  c_run->add_option("--out-dir", run.out_dir, "Output directory")->capture_default_str();
  c_run->add_option("--http-model", run.http_model, "Model name sent to the http backend")->capture_default_str();
  c_run->add_option("--http-token-env", run.http_token_env, "Environment variable holding the bearer token");
  c_run->add_option("--http-timeout-ms", run.http_timeout_ms, "Per-request timeout")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_run->add_option("--http-retries", run.http_retries, "Retries after the first attempt")->capture_default_str();
  c_run->add_option("--http-max-in-flight", run.http_max_in_flight, "Concurrent request limit")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_decode_flags(c_run, run.decode);

  PruneCheckOptions prune;
  auto* c_prune = app.add_subcommand("prune-check", "Compare generation with and without negative activations");
  c_prune->add_option("--checkpoint", prune.checkpoint, "Checkpoint path")->required()->check(CLI::ExistingFile);
  c_prune->add_option("--prompt-file", prune.prompt_file, "Prompt text file")->required()->check(CLI::ExistingFile);
  c_prune->add_option("--out", prune.out, "Per-step CSV")->capture_default_str();
  add_decode_flags(c_prune, prune.decode);

  CompareOptions cmp;
  auto* c_cmp = app.add_subcommand("compare", "Label strategies against a baseline report");
  c_cmp->add_option("--baseline", cmp.baseline, "Baseline report.json")->required()->check(CLI::ExistingFile);
  c_cmp->add_option("--candidates", cmp.candidates, "Candidate report.json files")->check(CLI::ExistingFile);
  c_cmp->add_option("--out", cmp.out, "Comparison CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageFailure;
  }
  if (verbose) fmt::print(stderr, "{}", app.config_to_str(true, false));

  if (c_init->parsed()) return guarded([&] { return cmd_model_init(init); });
  if (c_prompt->parsed()) return guarded([&] { return cmd_prompt(prompt); });
  if (c_run->parsed()) return guarded([&] { return cmd_run(run); });
  if (c_prune->parsed()) return guarded([&] { return cmd_prune_check(prune); });
  if (c_cmp->parsed()) return guarded([&] { return cmd_compare(cmp); });
  return kUsageFailure;
}
