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

#include "pmbr/core.hpp"

#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace pmbr {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> string_array(const json& obj, const char* key,
                                      std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(line, std::string("missing required key \"") + key + "\"");
  if (!it->is_array())
    throw ParseError(line, std::string("\"") + key + "\" must be an array");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string())
      throw ParseError(line,
                       std::string("\"") + key + "\" must contain strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    throw ParseError(line, std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

std::vector<std::string> DedupView::reconstruct() const {
  std::vector<std::string> out;
  out.reserve(index_of.size());
  for (std::size_t u : index_of) out.push_back(unique_items[u]);
  return out;
}

DedupView dedup(std::span<const std::string> items) {
  DedupView view;
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(items.size());
  view.index_of.reserve(items.size());
  for (std::size_t pos = 0; pos < items.size(); ++pos) {
    const auto [it, inserted] =
        seen.try_emplace(std::string_view(items[pos]), view.unique_items.size());
    if (inserted) {
      view.unique_items.push_back(items[pos]);
      view.multiplicity.push_back(0);
      view.first_position.push_back(pos);
    }
    view.index_of.push_back(it->second);
    ++view.multiplicity[it->second];
  }
  return view;
}

PreparedInstance::PreparedInstance(Instance instance)
    : instance_(std::move(instance)),
      hypotheses_(dedup(instance_.hypotheses)),
      pool_(dedup(instance_.pool)) {
  if (instance_.hypotheses.empty())
    throw ValidationError("instance " + instance_.id + ": no hypotheses");
  if (instance_.pool.empty())
    throw ValidationError("instance " + instance_.id + ": empty pool");
}

Schedule::Schedule(std::vector<std::size_t> sizes) : sizes_(std::move(sizes)) {
  if (sizes_.empty()) throw ValidationError("schedule is empty");
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (sizes_[i] == 0)
      throw ValidationError("schedule sizes must be positive");
    if (i > 0 && sizes_[i] <= sizes_[i - 1])
      throw ValidationError("schedule must be strictly increasing: " +
                            to_string());
  }
}

Schedule Schedule::doubling(std::size_t first, std::size_t last) {
  if (first == 0 || last < first)
    throw ValidationError("invalid doubling schedule");
  std::vector<std::size_t> sizes;
  for (std::size_t r = first; r < last; r *= 2) sizes.push_back(r);
  sizes.push_back(last);
  return Schedule(std::move(sizes));
}

Schedule Schedule::parse(std::string_view text) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string item = trim(text.substr(start, end - start));
    std::size_t value = 0;
    const auto [ptr, ec] =
        std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size())
      throw ValidationError("invalid schedule entry \"" + item + "\"");
    sizes.push_back(value);
    start = end + 1;
  }
  return Schedule(std::move(sizes));
}

void Schedule::validate_for(const Instance& instance) const {
  if (sizes_.empty()) throw ValidationError("schedule is empty");
  if (back() > instance.pool.size())
    throw ValidationError("instance " + instance.id + ": schedule size " +
                          std::to_string(back()) + " exceeds pool size " +
                          std::to_string(instance.pool.size()));
}

std::string Schedule::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sizes_[i]);
  }
  return out;
}

Method Method::parse(std::string_view text) {
  const std::string spec = trim(text);
  if (spec == "standard") return standard();
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw ValidationError("unknown method \"" + spec +
                          "\" (expected standard, confidence:<alpha> or "
                          "rank:<beta>)");
  const std::string kind = spec.substr(0, colon);
  const std::string value = spec.substr(colon + 1);
  double param = 0.0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), param);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size())
    throw ValidationError("invalid method parameter in \"" + spec + "\"");
  Method m;
  if (kind == "confidence") {
    m = confidence(param);
  } else if (kind == "rank") {
    m = rank(param);
  } else {
    throw ValidationError("unknown method \"" + spec + "\"");
  }
  m.validate();
  return m;
}

std::string Method::label() const {
  char buf[64];
  switch (kind) {
    case MethodKind::standard:
      return "standard";
    case MethodKind::confidence:
      std::snprintf(buf, sizeof buf, "confidence:%.6g", param);
      return buf;
    case MethodKind::rank:
      std::snprintf(buf, sizeof buf, "rank:%.6g", param);
      return buf;
  }
  return "?";
}

std::string Method::family() const {
  switch (kind) {
    case MethodKind::standard:
      return "standard";
    case MethodKind::confidence:
      return "confidence";
    case MethodKind::rank:
      return "rank";
  }
  return "?";
}

void Method::validate() const {
  if (kind == MethodKind::confidence && !(param > 0.0 && param <= 1.0))
    throw ValidationError("alpha must lie in (0, 1], got " + label());
  if (kind == MethodKind::rank && !(param >= 0.0 && param < 1.0))
    throw ValidationError("beta must lie in [0, 1), got " + label());
}

void DecodeConfig::validate() const {
  method.validate();
  if (schedule.empty()) throw ValidationError("schedule is empty");
  if (n_boot < 1) throw ValidationError("n_boot must be at least 1");
  if (trials < 1) throw ValidationError("trials must be at least 1");
}

std::vector<Instance> parse_corpus(std::istream& in) {
  std::vector<Instance> corpus;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
    const auto id = obj.find("id");
    if (id == obj.end() || !id->is_string())
      throw ParseError(line, "missing required string key \"id\"");

    Instance inst;
    inst.id = id->get<std::string>();
    inst.source = optional_string(obj, "source", line);
    inst.reference = optional_string(obj, "reference", line);
    inst.hypotheses = string_array(obj, "hypotheses", line);
    inst.pool = string_array(obj, "pool", line);

    if (inst.hypotheses.empty())
      throw ValidationError("line " + std::to_string(line) + ": instance " +
                            inst.id + " has no hypotheses");
    if (inst.pool.empty())
      throw ValidationError("line " + std::to_string(line) + ": instance " +
                            inst.id + " has an empty pool");
    if (!ids.insert(inst.id).second)
      throw ValidationError("line " + std::to_string(line) +
                            ": duplicate instance id " + inst.id);
    corpus.push_back(std::move(inst));
  }
  return corpus;
}

std::vector<Instance> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus " + path.string());
  return parse_corpus(in);
}

void write_corpus(std::ostream& out, std::span<const Instance> corpus) {
  for (const Instance& inst : corpus) {
    json obj = json::object();
    obj["id"] = inst.id;
    if (inst.source) obj["source"] = *inst.source;
    if (inst.reference) obj["reference"] = *inst.reference;
    obj["hypotheses"] = inst.hypotheses;
    obj["pool"] = inst.pool;
    out << obj.dump() << '\n';
  }
}

void save_corpus(const std::filesystem::path& path,
                 std::span<const Instance> corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus " + path.string());
  write_corpus(out, corpus);
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::size_t> permute_pool(const Instance& instance,
                                      RngStream& rng) {
  std::vector<std::size_t> perm(instance.pool.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

RngStream pool_stream(std::uint64_t seed, const Instance& instance,
                      std::size_t trial) {
  return RngStream(seed, instance.id, trial, "pool");
}

}  // namespace pmbr
