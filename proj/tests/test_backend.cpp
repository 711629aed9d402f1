#include <cstdlib>
#include <thread>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "pimns/backend.hpp"
#include "pimns/errors.hpp"
#include "stub_server.hpp"

namespace pimns {
namespace {

using namespace std::chrono_literals;

HttpBackendConfig config_for(const std::string& url) {
  HttpBackendConfig c;
  c.endpoint = url;
  c.model = "stub-model";
  c.timeout = 2000ms;
  c.initial_backoff = 1ms;
  return c;
}

TEST(InternalBackend, DelegatesToGenerate) {
  auto bundle = std::make_shared<const ModelBundle>(init_random(micro_config(), 3));
  const InternalBackend backend(bundle);
  GenerationParams p;
  p.max_new_tokens = 8;
  EXPECT_EQ(complete(backend, "Hallo Welt", p), generate(*bundle, "Hallo Welt", p).text);
  EXPECT_EQ(backend.complete("Hallo Welt", p, nullptr).generated_tokens, 8u);
  EXPECT_TRUE(backend.supports_probe());
  EXPECT_THROW(complete(backend, "", p), ArgumentError);
}

TEST(HttpBackend, ValidatesConfiguration) {
  EXPECT_THROW(HttpBackend(config_for("localhost:80")), ConfigError);
  EXPECT_THROW(HttpBackend(config_for("ftp://host/x")), ConfigError);
  EXPECT_THROW(HttpBackend(config_for("http://host:99999/x")), ConfigError);
  auto c = config_for("http://127.0.0.1:1/x");
  c.timeout = 0ms;
  EXPECT_THROW(HttpBackend{c}, ConfigError);
  EXPECT_NO_THROW(HttpBackend(config_for("https://api.example.com")));
  EXPECT_FALSE(HttpBackend(config_for("http://127.0.0.1:1/x")).supports_probe());
}

TEST(HttpBackend, ReturnsFirstChoiceAndSendsDocumentedBody) {
  test::StubServer stub;
  HttpBackend backend(config_for(stub.url("/ok")));
  GenerationParams p;
  p.max_new_tokens = 12;
  p.temperature = 0.0;
  EXPECT_EQ(complete(backend, "Translate this", p), "fixed text");
  const auto body = nlohmann::json::parse(stub.last_body());
  EXPECT_EQ(body["model"], "stub-model");
  EXPECT_EQ(body["prompt"], "Translate this");
  EXPECT_EQ(body["max_tokens"], 12);
  EXPECT_EQ(body["temperature"], 0.0);
  EXPECT_EQ(stub.last_auth(), "");
}

TEST(HttpBackend, DefaultPathIsCompletions) {
  test::StubServer stub;
  HttpBackend backend(config_for(stub.url("")));
  EXPECT_EQ(complete(backend, "x", {}), "fixed text");
}

TEST(HttpBackend, BearerTokenComesFromNamedEnvironmentVariable) {
  test::StubServer stub;
  auto c = config_for(stub.url("/ok"));
  c.token_env = "PIMNS_TEST_TOKEN_VAR";
  ::unsetenv("PIMNS_TEST_TOKEN_VAR");
  EXPECT_THROW(complete(HttpBackend(c), "x", {}), ConfigError);
  ::setenv("PIMNS_TEST_TOKEN_VAR", "s3cret", 1);
  EXPECT_EQ(complete(HttpBackend(c), "x", {}), "fixed text");
  EXPECT_EQ(stub.last_auth(), "Bearer s3cret");
  ::unsetenv("PIMNS_TEST_TOKEN_VAR");
}

TEST(HttpBackend, ExhaustedRetriesRaiseBackendErrorAfterThreeAttempts) {
  test::StubServer stub;
  auto c = config_for(stub.url("/fail"));
  c.max_retries = 2;
  EXPECT_THROW(complete(HttpBackend(c), "x", {}), BackendError);
  EXPECT_EQ(stub.hits(), 3);
}

TEST(HttpBackend, RecoversFromTransientServerErrors) {
  test::StubServer stub;
  auto c = config_for(stub.url("/flaky"));
  c.max_retries = 2;
  EXPECT_EQ(complete(HttpBackend(c), "x", {}), "fixed text");
  EXPECT_EQ(stub.hits(), 3);
}

TEST(HttpBackend, ClientErrorsAreNotRetried) {
  test::StubServer stub;
  EXPECT_THROW(complete(HttpBackend(config_for(stub.url("/reject"))), "x", {}), BackendError);
  EXPECT_EQ(stub.hits(), 1);
}

TEST(HttpBackend, MalformedResponsesAreProtocolErrors) {
  test::StubServer stub;
  EXPECT_THROW(complete(HttpBackend(config_for(stub.url("/notjson"))), "x", {}), ProtocolError);
  EXPECT_THROW(complete(HttpBackend(config_for(stub.url("/nochoice"))), "x", {}), ProtocolError);
}

TEST(HttpBackend, TransportFailureIsBackendError) {
  int port;
  {
    test::StubServer stub;  // grab a port that is then closed
    port = std::stoi(stub.url("").substr(17));
  }
  auto c = config_for("http://127.0.0.1:" + std::to_string(port) + "/ok");
  c.max_retries = 1;
  EXPECT_THROW(complete(HttpBackend(c), "x", {}), BackendError);
}

TEST(HttpBackend, BoundsRequestsInFlight) {
  test::StubServer stub;
  auto c = config_for(stub.url("/slow"));
  c.max_in_flight = 2;
  const HttpBackend backend(c);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 6; ++i) threads.emplace_back([&] { EXPECT_EQ(complete(backend, "x", {}), "fixed text"); });
  threads.clear();
  EXPECT_LE(stub.peak_concurrency(), 2);
  EXPECT_EQ(stub.hits(), 6);
}

}  // namespace
}  // namespace pimns
