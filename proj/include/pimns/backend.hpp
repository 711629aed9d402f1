#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>

#include "pimns/runtime.hpp"

namespace pimns {

struct Completion {
  std::string text;
  std::size_t generated_tokens = 0;
};

/// A text-completion service. complete() may be called concurrently.
class Backend {
 public:
  virtual ~Backend() = default;
  /// Throws ArgumentError on an empty prompt. `sink` is honoured only when
  /// supports_probe() is true.
  virtual Completion complete(std::string_view prompt, const GenerationParams& params,
                              ProbeSink* sink = nullptr) const = 0;
  virtual bool supports_probe() const = 0;
  virtual std::string describe() const = 0;
};

/// Runs the in-process transformer over a shared immutable bundle.
class InternalBackend final : public Backend {
 public:
  explicit InternalBackend(std::shared_ptr<const ModelBundle> bundle);
  Completion complete(std::string_view prompt, const GenerationParams& params, ProbeSink* sink) const override;
  bool supports_probe() const override { return true; }
  std::string describe() const override;
  const ModelBundle& bundle() const { return *bundle_; }

 private:
  std::shared_ptr<const ModelBundle> bundle_;
};

struct HttpBackendConfig {
  /// scheme://host[:port][/path]; the path defaults to /v1/completions.
  std::string endpoint;
  std::string model = "default";
  /// Name of the environment variable holding the bearer token; empty for none.
  std::string token_env;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_retries = 2;
  std::chrono::milliseconds initial_backoff{200};
  std::size_t max_in_flight = 4;
};

/// Completions-style JSON client. Never exposes activations.
class HttpBackend final : public Backend {
 public:
  /// Throws ConfigError on a malformed endpoint, zero timeout or zero in-flight limit.
  explicit HttpBackend(HttpBackendConfig config);
  ~HttpBackend() override;
  /// Retries transport failures and 5xx responses with doubling backoff.
  /// Throws BackendError once max_retries + 1 attempts failed, ProtocolError on
  /// a non-JSON body or a response without choices[0].text.
  Completion complete(std::string_view prompt, const GenerationParams& params, ProbeSink* sink) const override;
  bool supports_probe() const override { return false; }
  std::string describe() const override;

 private:
  struct Impl;
  HttpBackendConfig config_;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper returning only the text.
std::string complete(const Backend& backend, std::string_view prompt, const GenerationParams& params);

}  // namespace pimns
