#pragma once

#include <atomic>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

namespace pimns::test {

/// Completions-style HTTP server on a loopback port, for backend tests.
///   /ok        -> {"choices":[{"text": reply}]}
///   /fail      -> 500
///   /flaky     -> 500 twice, then /ok
///   /notjson   -> 200 with a plain-text body
///   /nochoice  -> {"choices": []}
///   /reject    -> 400
///   /slow      -> /ok after 50 ms, tracking peak concurrency
class StubServer {
 public:
  explicit StubServer(std::string reply = "fixed text") : reply_(std::move(reply)) {
    auto ok = [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        last_body_ = req.body;
        last_auth_ = req.get_header_value("Authorization");
      }
      ++hits_;
      res.set_content(R"({"choices":[{"text":")" + reply_ + R"("}],"usage":{"completion_tokens":3}})",
                      "application/json");
    };
    server_.Post("/ok", ok);
    server_.Post("/v1/completions", ok);
    server_.Post("/fail", [this](const httplib::Request&, httplib::Response& res) {
      ++hits_;
      res.status = 500;
    });
    server_.Post("/flaky", [this, ok](const httplib::Request& req, httplib::Response& res) {
      if (flaky_++ < 2) {
        ++hits_;
        res.status = 503;
        return;
      }
      ok(req, res);
    });
    server_.Post("/notjson", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("hello", "text/plain");
    });
    server_.Post("/nochoice", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"choices":[]})", "application/json");
    });
    server_.Post("/reject", [this](const httplib::Request&, httplib::Response& res) {
      ++hits_;
      res.status = 400;
    });
    server_.Post("/slow", [this, ok](const httplib::Request& req, httplib::Response& res) {
      const int now = ++in_flight_;
      int peak = peak_.load();
      while (now > peak && !peak_.compare_exchange_weak(peak, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
      --in_flight_;
      ok(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  int hits() const { return hits_.load(); }
  int peak_concurrency() const { return peak_.load(); }
  std::string last_body() {
    std::lock_guard lock(mu_);
    return last_body_;
  }
  std::string last_auth() {
    std::lock_guard lock(mu_);
    return last_auth_;
  }

 private:
  std::string reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0}, flaky_{0}, in_flight_{0}, peak_{0};
  std::mutex mu_;
  std::string last_body_, last_auth_;
};

}  // namespace pimns::test
