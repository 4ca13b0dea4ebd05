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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmbr/error.hpp"
#include "pmbr/rng.hpp"

namespace pmbr {

// One decoding problem: a hypothesis set and the full pseudo-reference pool
// it is decoded against. `reference` is the gold target, used only for
// scoring predictions.
struct Instance {
  std::string id;
  std::optional<std::string> source;
  std::optional<std::string> reference;
  std::vector<std::string> hypotheses;
  std::vector<std::string> pool;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// Exact-match deduplication of a string list. First occurrences keep their
// relative order, so unique index order equals original position order.
struct DedupView {
  std::vector<std::string> unique_items;
  std::vector<std::size_t> index_of;      // original position -> unique index
  std::vector<std::size_t> multiplicity;  // per unique index
  std::vector<std::size_t> first_position;

  std::size_t size() const { return unique_items.size(); }
  std::vector<std::string> reconstruct() const;
};

DedupView dedup(std::span<const std::string> items);

// An instance together with its hypothesis and pool dedup maps. Everything
// downstream addresses hypotheses by unique index and references by pool
// position.
class PreparedInstance {
 public:
  explicit PreparedInstance(Instance instance);

  const Instance& instance() const { return instance_; }
  const std::string& id() const { return instance_.id; }
  const DedupView& hypotheses() const { return hypotheses_; }
  const DedupView& pool() const { return pool_; }
  std::size_t pool_size() const { return instance_.pool.size(); }

  const std::string& hypothesis(std::size_t unique_index) const {
    return hypotheses_.unique_items[unique_index];
  }
  const std::string& reference(std::size_t unique_index) const {
    return pool_.unique_items[unique_index];
  }

 private:
  Instance instance_;
  DedupView hypotheses_;
  DedupView pool_;
};

// Pseudo-reference sample sizes r_1 < r_2 < ... < r_T.
class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(std::vector<std::size_t> sizes);

  // first, 2*first, 4*first, ... capped at and ending with `last`.
  static Schedule doubling(std::size_t first, std::size_t last);
  static Schedule parse(std::string_view text);

  const std::vector<std::size_t>& sizes() const { return sizes_; }
  std::size_t steps() const { return sizes_.size(); }
  std::size_t back() const { return sizes_.back(); }
  bool empty() const { return sizes_.empty(); }

  void validate_for(const Instance& instance) const;
  std::string to_string() const;

 private:
  std::vector<std::size_t> sizes_;
};

enum class MethodKind { standard, confidence, rank };

// `standard`, `confidence:<alpha>` or `rank:<beta>`.
struct Method {
  MethodKind kind = MethodKind::standard;
  double param = 0.0;

  static Method standard() { return {MethodKind::standard, 0.0}; }
  static Method confidence(double alpha) {
    return {MethodKind::confidence, alpha};
  }
  static Method rank(double beta) { return {MethodKind::rank, beta}; }
  static Method parse(std::string_view text);

  std::string label() const;
  std::string family() const;
  void validate() const;

  friend bool operator==(const Method&, const Method&) = default;
};

struct DecodeConfig {
  Method method;
  Schedule schedule;
  std::size_t n_boot = 500;
  std::uint64_t seed = 1;
  std::size_t trials = 1;

  void validate() const;
};

std::vector<Instance> parse_corpus(std::istream& in);
std::vector<Instance> load_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, std::span<const Instance> corpus);
void save_corpus(const std::filesystem::path& path,
                 std::span<const Instance> corpus);

// Uniform random permutation of pool positions (Fisher-Yates over the
// (instance, trial, "pool") stream). R_t is the first r_t entries.
std::vector<std::size_t> permute_pool(const Instance& instance, RngStream& rng);
RngStream pool_stream(std::uint64_t seed, const Instance& instance,
                      std::size_t trial);

}  // namespace pmbr
