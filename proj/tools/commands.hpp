#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pimns::cli {

/// Seed used by every command when --seed is absent.
inline constexpr std::uint64_t kDefaultSeed = 1234;

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageFailure = 2 };

struct DecodeOptions {
  std::size_t max_new_tokens = 64;
  double temperature = 0.0;
  std::uint64_t seed = kDefaultSeed;
  std::vector<int> stop_ids;
};

struct ModelInitOptions {
  std::string config_path;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  std::optional<std::string> activation;
  std::optional<std::size_t> n_layers;
  std::optional<std::size_t> d_model;
  std::optional<std::size_t> d_ffn;
  std::optional<std::size_t> n_heads;
};

struct PromptOptions {
  std::string template_id;
  std::string templates_file;
  std::string strategy = "direct";
  std::string spec_json;
  std::string scores_json;
};

struct RunOptions {
  std::string dataset;
  std::string task;
  std::string strategy = "direct";
  std::string backend;
  std::string template_id;
  std::string templates_file;
  std::string scores_json;
  bool probe = false;
  std::size_t workers = 1;
  bool continue_on_error = false;
  std::string out_dir = "out";
  DecodeOptions decode;
  std::string http_model = "default";
  std::string http_token_env;
  std::size_t http_timeout_ms = 30000;
  std::size_t http_retries = 2;
  std::size_t http_max_in_flight = 4;
};

struct PruneCheckOptions {
  std::string checkpoint;
  std::string prompt_file;
  std::string out = "prune.csv";
  DecodeOptions decode;
};

struct CompareOptions {
  std::string baseline;
  std::vector<std::string> candidates;
  std::string out = "compare.csv";
};

int cmd_model_init(const ModelInitOptions& o);
int cmd_prompt(const PromptOptions& o);
int cmd_run(const RunOptions& o);
int cmd_prune_check(const PruneCheckOptions& o);
int cmd_compare(const CompareOptions& o);

/// Maps library exceptions to exit codes and prints the message to stderr.
int guarded(const std::function<int()>& command);

}  // namespace pimns::cli
