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

#include <chrono>
#include <cmath>
#include <thread>

// Eigen (via utility.hpp) must precede httplib: <resolv.h> defines a _res
// macro that clashes with Eigen parameter names.
#include "pmbr/error.hpp"
#include "pmbr/utility.hpp"

#include <httplib.h>
#include <json.hpp>

namespace pmbr {

using nlohmann::json;

namespace {

// Splits "http://host:port/prefix" into "http://host:port" and "/prefix".
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos)
    throw ValidationError("remote endpoint must be a URL, got \"" + url + "\"");
  auto path = url.find('/', scheme + 3);
  if (path == std::string::npos) return {url, ""};
  std::string prefix = url.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {url.substr(0, path), prefix};
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

RemoteBackend::RemoteBackend(RemoteOptions options)
    : options_(std::move(options)) {
  if (options_.batch_size == 0)
    throw ValidationError("remote batch size must be positive");
  if (!(options_.timeout_seconds > 0))
    throw ValidationError("remote timeout must be positive");
  std::tie(host_, path_prefix_) = split_endpoint(options_.endpoint);
}

std::string RemoteBackend::name() const { return "remote:" + options_.endpoint; }

std::string RemoteBackend::health() const {
  httplib::Client client(host_);
  const auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
  client.set_connection_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(
      std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  auto res = client.Get(path_prefix_ + "/v1/health");
  if (!res)
    throw BackendError("scoring server " + options_.endpoint +
                       " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BackendError("scoring server " + options_.endpoint +
                       " not ready (HTTP " + std::to_string(res->status) + ")");
  try {
    const json body = json::parse(res->body);
    return body.at("metric").get<std::string>();
  } catch (const json::exception& e) {
    throw ProtocolError("malformed health response: " + std::string(e.what()));
  }
}

std::vector<double> RemoteBackend::score_pairs(
    std::span<const ScorePair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (std::size_t start = 0; start < pairs.size();
       start += options_.batch_size) {
    const std::size_t n = std::min(options_.batch_size, pairs.size() - start);
    const auto scores = post_batch(pairs.subspan(start, n));
    out.insert(out.end(), scores.begin(), scores.end());
  }
  return out;
}

std::vector<double> RemoteBackend::post_batch(
    std::span<const ScorePair> batch) const {
  json request = json::object();
  json items = json::array();
  for (const ScorePair& p : batch) {
    json item = {{"hypothesis", std::string(p.hypothesis)},
                 {"reference", std::string(p.reference)}};
    if (p.source) item["source"] = std::string(*p.source);
    items.push_back(std::move(item));
  }
  request["pairs"] = std::move(items);
  const std::string body = request.dump();

  httplib::Client client(host_);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(options_.timeout_seconds));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(
          std::chrono::milliseconds(options_.retry_backoff_ms << (attempt - 1)));
    auto res = client.Post(path_prefix_ + "/v1/score", body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (transient_status(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw BackendError("scoring server rejected batch: HTTP " +
                         std::to_string(res->status) + " " + res->body);
    std::vector<double> scores;
    try {
      const json response = json::parse(res->body);
      const json& arr = response.at("scores");
      if (!arr.is_array()) throw ProtocolError("\"scores\" is not an array");
      for (const json& v : arr) {
        if (!v.is_number()) throw ProtocolError("non-numeric score");
        scores.push_back(v.get<double>());
      }
    } catch (const json::exception& e) {
      throw ProtocolError("malformed score response: " + std::string(e.what()));
    }
    if (scores.size() != batch.size())
      throw ProtocolError("score response has " + std::to_string(scores.size()) +
                          " entries for " + std::to_string(batch.size()) +
                          " pairs");
    return scores;
  }
  throw BackendError("scoring server " + options_.endpoint + " failed after " +
                     std::to_string(options_.max_retries + 1) +
                     " attempts: " + last_error);
}

std::unique_ptr<RemoteBackend> remote_backend(RemoteOptions options) {
  return std::make_unique<RemoteBackend>(std::move(options));
}

}  // namespace pmbr
