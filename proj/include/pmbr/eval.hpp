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

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmbr/core.hpp"
#include "pmbr/mbr.hpp"
#include "pmbr/utility.hpp"

namespace pmbr {

// Full-pool expected utilities U(y, R*) over the unique hypotheses.
struct OracleRanking {
  Eigen::VectorXd utility;
  std::size_t winner = 0;  // smallest-index maximizer
  double max_utility = 0.0;

  // Number of hypotheses y' with U(y') >= U(y); 1 for a unique maximizer.
  std::size_t rank_count(std::size_t hyp) const;
};

OracleRanking oracle_ranking(const PreparedInstance& instance,
                             UtilityCache& cache);
OracleRanking oracle_ranking(const PreparedInstance& instance,
                             const UtilityBackend& backend);

// 1 when the prediction attains the full-pool maximum (co-maximizers count).
int exact_accuracy(std::size_t prediction, const OracleRanking& oracle);
double reciprocal_rank(std::size_t prediction, const OracleRanking& oracle);

// Builds the utility backend for one instance. Lets matrix-backed runs hand
// out a different backend per instance.
using BackendFactory =
    std::function<const UtilityBackend&(const PreparedInstance&)>;

struct EvalOptions {
  Schedule schedule = Schedule::doubling(16, 256);
  std::size_t n_boot = 500;
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
};

struct SweepRow {
  std::string config;
  std::string family;
  double param = 0.0;
  int trial = -1;  // -1 in aggregated rows
  double mean_calls = 0.0;
  double mean_pseudo_refs = 0.0;
  std::optional<double> score;
  double accuracy = 0.0;
  double mean_rr = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;        // one per config x trial
  std::vector<SweepRow> aggregated;  // one per config, mean over trials
  std::size_t instances = 0;
  std::size_t trials = 0;
  std::size_t n_boot = 0;
  std::uint64_t seed = 0;
  std::string schedule;
  std::string utility;
  std::string note;  // why the score column is missing, if it is
};

// Decodes every instance with every method for every trial. The first
// method is conventionally the standard-MBR anchor.
SweepReport run_methods(std::span<const PreparedInstance> corpus,
                        std::span<const Method> methods,
                        const EvalOptions& options,
                        const BackendFactory& backend);

// Standard-MBR anchor, then confidence:alpha for each alpha, then rank:beta
// for each beta.
SweepReport tradeoff_sweep(std::span<const PreparedInstance> corpus,
                           std::span<const double> alphas,
                           std::span<const double> betas,
                           const EvalOptions& options,
                           const BackendFactory& backend);

struct FalsePruneTable {
  std::vector<double> alphas;
  std::vector<std::size_t> sizes;
  Eigen::MatrixXd rates;  // alphas x sizes
  std::size_t samples = 0;  // instances x trials per cell
};

FalsePruneTable false_pruning_rate(std::span<const PreparedInstance> corpus,
                                   std::span<const double> alphas,
                                   std::span<const std::size_t> sizes,
                                   const EvalOptions& options,
                                   const BackendFactory& backend);

struct SurvivalPoint {
  std::size_t step = 0;
  std::size_t refs = 0;
  double mean = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  std::size_t runs = 0;
};

// Surviving-hypothesis counts per schedule step over instances x trials. A
// run that stopped before a step contributes its final count of 1.
std::vector<SurvivalPoint> survival_trace(
    std::span<const PreparedInstance> corpus, const Method& method,
    const EvalOptions& options, const BackendFactory& backend);

struct SummaryTable {
  std::vector<std::string> configs;
  std::vector<SweepRow> columns;
  std::string note;
};

SummaryTable summarize(std::span<const PreparedInstance> corpus,
                       std::span<const Method> methods,
                       const EvalOptions& options,
                       const BackendFactory& backend);

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t n_instances = 50;
  std::size_t n_hypotheses = 64;
  std::size_t pool_size = 256;
  std::size_t vocab_size = 1000;
  double edit_rate = 0.15;
  std::size_t min_length = 8;
  std::size_t max_length = 24;

  void validate() const;
};

std::vector<Instance> generate_synthetic(const SynthOptions& options);

std::vector<PreparedInstance> prepare(std::span<const Instance> corpus);

// Linear-interpolation quantile (numpy's default) of unsorted values.
double quantile(std::vector<double> values, double q);

}  // namespace pmbr
