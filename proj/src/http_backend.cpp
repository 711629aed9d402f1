#include <cstdlib>
#include <regex>
#include <semaphore>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "pimns/backend.hpp"
#include "pimns/errors.hpp"

namespace pimns {

struct HttpBackend::Impl {
  std::string origin;  // scheme://host[:port]
  std::string path;
  mutable std::counting_semaphore<> in_flight;

  Impl(std::string o, std::string p, std::size_t limit)
      : origin(std::move(o)), path(std::move(p)), in_flight(static_cast<std::ptrdiff_t>(limit)) {}
};

namespace {

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  static const std::regex url(R"(^(https?)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(:([0-9]{1,5}))?(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, url)) {
    throw ConfigError(fmt::format("http endpoint '{}' is not a well-formed URL", config_.endpoint));
  }
  if (m[4].matched && std::stoul(m[4].str()) > 65535) throw ConfigError("http endpoint port out of range");
  if (config_.timeout.count() <= 0) throw ConfigError("http timeout must be positive");
  if (config_.max_in_flight == 0) throw ConfigError("http in-flight limit must be positive");
  if (config_.model.empty()) throw ConfigError("http model name must not be empty");
  std::string path = m[5].matched ? m[5].str() : std::string("/v1/completions");
  impl_ = std::make_unique<Impl>(m[1].str() + "://" + m[2].str() + m[3].str(), std::move(path), config_.max_in_flight);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::describe() const { return "http:" + impl_->origin + impl_->path; }

Completion HttpBackend::complete(std::string_view prompt, const GenerationParams& params, ProbeSink*) const {
  if (prompt.empty()) throw ArgumentError("prompt must not be empty");
  nlohmann::json body{{"model", config_.model},
                      {"prompt", std::string(prompt)},
                      {"temperature", params.temperature},
                      {"max_tokens", params.max_new_tokens}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.token_env.empty()) {
    const char* token = std::getenv(config_.token_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw ConfigError(fmt::format("environment variable '{}' is not set", config_.token_env));
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  SlotGuard slot(impl_->in_flight);
  const auto secs = config_.timeout.count() / 1000;
  const auto usecs = (config_.timeout.count() % 1000) * 1000;
  auto backoff = config_.initial_backoff;
  std::string last_error;
  for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(impl_->origin);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(impl_->path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = fmt::format("server returned HTTP {}", res->status);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError(fmt::format("server returned HTTP {}", res->status));
    }
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError("response body is not JSON");
    }
    if (!reply.is_object() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty() || !reply["choices"][0].is_object() || !reply["choices"][0].contains("text") ||
        !reply["choices"][0]["text"].is_string()) {
      throw ProtocolError("response has no choices[0].text");
    }
    Completion c;
    c.text = reply["choices"][0]["text"].get<std::string>();
    if (reply.contains("usage") && reply["usage"].is_object() && reply["usage"].contains("completion_tokens") &&
        reply["usage"]["completion_tokens"].is_number_unsigned()) {
      c.generated_tokens = reply["usage"]["completion_tokens"].get<std::size_t>();
    }
    return c;
  }
  throw BackendError(fmt::format("giving up after {} attempts: {}", config_.max_retries + 1, last_error));
}

}  // namespace pimns
