/*
 * Copyright 2026 The pruning-mbr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <atomic>
#include <mutex>
#include <thread>

#include "pmbr/error.hpp"
#include "pmbr/mbr.hpp"
#include "pmbr/utility.hpp"
#include "test_support.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace pmbr;
using nlohmann::json;

namespace {

// In-process stand-in for the scoring bridge, scoring with token F1.
class MockServer {
 public:
  enum class Mode { ok, flaky, malformed, short_reply, bad_request };

  explicit MockServer(Mode mode = Mode::ok) : mode_(mode) {
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok","metric":"token-f1"})", "application/json");
    });
    server_.Post("/v1/score", [this](const httplib::Request& req,
                                     httplib::Response& res) {
      const json body = json::parse(req.body);
      const auto& pairs = body.at("pairs");
      {
        std::lock_guard lock(mu_);
        batch_sizes_.push_back(pairs.size());
        for (const auto& p : pairs) {
          sentences_.push_back(p.at("hypothesis").get<std::string>());
          sentences_.push_back(p.at("reference").get<std::string>());
        }
      }
      const int n = requests_++;
      if (mode_ == Mode::flaky && n < 2) {
        res.status = 503;
        return;
      }
      if (mode_ == Mode::bad_request) {
        res.status = 400;
        res.set_content("bad", "text/plain");
        return;
      }
      if (mode_ == Mode::malformed) {
        res.set_content("{\"scores\": [0.5,", "application/json");
        return;
      }
      json scores = json::array();
      for (const auto& p : pairs)
        scores.push_back(pmbr::testing::token_f1(p.at("hypothesis").get<std::string>(),
                                                 p.at("reference").get<std::string>()));
      if (mode_ == Mode::short_reply && !scores.empty()) scores.erase(scores.end() - 1);
      res.set_content(json{{"scores", scores}, {"metric_name", "token-f1"}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }
  std::vector<std::size_t> batch_sizes() {
    std::lock_guard lock(mu_);
    return batch_sizes_;
  }
  std::vector<std::string> sentences() {
    std::lock_guard lock(mu_);
    return sentences_;
  }

 private:
  Mode mode_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::mutex mu_;
  std::vector<std::size_t> batch_sizes_;
  std::vector<std::string> sentences_;
};

RemoteOptions options_for(const MockServer& server, std::size_t batch = 256) {
  RemoteOptions o;
  o.endpoint = server.url();
  o.batch_size = batch;
  o.timeout_seconds = 5;
  o.retry_backoff_ms = 1;
  return o;
}

}  // namespace

TEST_SUITE("remote") {

TEST_CASE("health reports the server metric") {
  MockServer server;
  CHECK(remote_backend(options_for(server))->health() == "token-f1");
}

TEST_CASE("pairs are split into batches") {
  MockServer server;
  const auto backend = remote_backend(options_for(server, 2));
  const std::vector<ScorePair> pairs = {{"a b", "a", {}}, {"c", "c", {}}, {"d", "e", {}}};
  const auto scores = backend->score_pairs(pairs);
  CHECK(server.batch_sizes() == std::vector<std::size_t>{2, 1});
  REQUIRE(scores.size() == 3);
  CHECK(scores[0] == pmbr::testing::token_f1("a b", "a"));
  CHECK(scores[1] == 1.0);
  CHECK(scores[2] == 0.0);
}

TEST_CASE("empty batches send no request") {
  MockServer server;
  const auto backend = remote_backend(options_for(server));
  CHECK(backend->score_pairs({}).empty());
  CHECK(server.requests() == 0);
}

TEST_CASE("remote scores equal local scores bit for bit") {
  MockServer server;
  const auto backend = remote_backend(options_for(server, 128));
  const auto raw = pmbr::testing::random_instance("bridge", 25, 40, 30, 11);
  std::vector<ScorePair> pairs;
  for (const auto& h : raw.hypotheses)
    for (const auto& r : raw.pool) pairs.push_back({h, r, {}});
  REQUIRE(pairs.size() == 1000);
  const auto remote = backend->score_pairs(pairs);
  pmbr::testing::TokenF1Backend local;
  CHECK(remote == local.score_pairs(pairs));
}

TEST_CASE("decoding through the bridge embeds each unique pair once") {
  MockServer server;
  const auto backend = remote_backend(options_for(server, 64));
  Instance raw{"dup", {}, {}, {"a b", "a b", "b c", "c"},
               {"a", "a", "a b", "b c", "b c", "c", "c", "a b"}};
  const PreparedInstance inst(raw);
  DecodeConfig cfg{Method::standard(), Schedule::parse("8"), 10, 1, 1};
  const auto r = decode(inst, cfg, *backend, 0);
  CHECK(r.total_calls == 3 * 4);
  std::size_t sent = 0;
  for (auto b : server.batch_sizes()) sent += b;
  CHECK(sent == 12);
  pmbr::testing::TokenF1Backend local;
  CHECK(decode(inst, cfg, local, 0).prediction == r.prediction);
}

TEST_CASE("transient failures are retried") {
  MockServer server(MockServer::Mode::flaky);
  const auto backend = remote_backend(options_for(server));
  const std::vector<ScorePair> pairs = {{"x", "x", {}}};
  CHECK(backend->score_pairs(pairs) == std::vector<double>{1.0});
  CHECK(server.requests() == 3);

  MockServer always_flaky(MockServer::Mode::flaky);
  auto o = options_for(always_flaky);
  o.max_retries = 1;
  CHECK_THROWS_AS(remote_backend(o)->score_pairs(pairs), BackendError);
}

TEST_CASE("protocol violations are errors") {
  const std::vector<ScorePair> pairs = {{"x", "x", {}}, {"y", "z", {}}};
  MockServer malformed(MockServer::Mode::malformed);
  CHECK_THROWS_AS(remote_backend(options_for(malformed))->score_pairs(pairs),
                  ProtocolError);
  MockServer short_reply(MockServer::Mode::short_reply);
  CHECK_THROWS_AS(remote_backend(options_for(short_reply))->score_pairs(pairs),
                  ProtocolError);
  MockServer rejecting(MockServer::Mode::bad_request);
  CHECK_THROWS_AS(remote_backend(options_for(rejecting))->score_pairs(pairs),
                  BackendError);
  CHECK(rejecting.requests() == 1);
}

TEST_CASE("unreachable servers and bad endpoints") {
  RemoteOptions o;
  o.endpoint = "http://127.0.0.1:1";
  o.timeout_seconds = 1;
  o.max_retries = 0;
  CHECK_THROWS_AS(remote_backend(o)->health(), BackendError);
  o.endpoint = "localhost";
  CHECK_THROWS_AS(remote_backend(o), ValidationError);
  o.endpoint = "http://127.0.0.1:1";
  o.batch_size = 0;
  CHECK_THROWS_AS(remote_backend(o), ValidationError);
}

}  // TEST_SUITE
