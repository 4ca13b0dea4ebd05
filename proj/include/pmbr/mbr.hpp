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
#include <span>
#include <string>
#include <vector>

#include "pmbr/core.hpp"
#include "pmbr/error.hpp"
#include "pmbr/utility.hpp"

namespace pmbr {

// A hypothesis set: unique hypothesis indices in ascending order.
using HypothesisSet = std::vector<std::size_t>;

// Bootstrap resamples as indices into a reference list; column i holds the
// |R| positions of resample i.
using ResampleMatrix =
    Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic>;

struct StepTrace {
  std::size_t step = 0;       // 1-based t
  std::size_t refs = 0;       // r_t
  std::size_t surviving = 0;  // |H_{t+1}|
  std::size_t new_calls = 0;
  std::size_t incumbent = 0;  // unique hypothesis index
};

struct DecodeResult {
  std::size_t prediction = 0;  // unique hypothesis index
  std::string prediction_text;
  std::vector<StepTrace> steps;
  std::size_t total_calls = 0;
  std::size_t pseudo_refs_used = 0;
  bool terminated_early = false;
};

struct PruneOutcome {
  HypothesisSet kept;
  std::size_t incumbent = 0;
  Eigen::VectorXd win_rates;  // aligned with the input set; confidence only
};

HypothesisSet all_hypotheses(const PreparedInstance& instance);

ResampleMatrix draw_resamples(std::size_t list_size, std::size_t n_boot,
                              RngStream& rng);

// Fraction of resamples in which each row's mean over the resampled columns
// is >= the incumbent row's mean. Every row is summed in the same column
// order, so rows with equal scores always compare equal.
template <typename Derived>
Eigen::VectorXd win_rates(const Eigen::MatrixBase<Derived>& scores,
                          Eigen::Index incumbent_row,
                          const ResampleMatrix& resamples) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index rows = scores.rows();
  const Eigen::Index m = resamples.rows();
  const Eigen::Index n = resamples.cols();
  Eigen::VectorXd wins = Eigen::VectorXd::Zero(rows);
  const Scalar denom = static_cast<Scalar>(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto sample = resamples.col(i);
    Scalar best = 0;
    for (Eigen::Index k = 0; k < m; ++k) best += scores(incumbent_row, sample(k));
    best /= denom;
    for (Eigen::Index y = 0; y < rows; ++y) {
      Scalar u = 0;
      for (Eigen::Index k = 0; k < m; ++k) u += scores(y, sample(k));
      u /= denom;
      if (u >= best) wins(y) += 1.0;
    }
  }
  return wins / static_cast<double>(n);
}

// Exact expectation of the win indicator over all |R|^|R| equally likely
// resamples. Columns of `scores` are list positions; |R| <= 8.
template <typename Derived>
Eigen::VectorXd exact_win_prob(const Eigen::MatrixBase<Derived>& scores,
                               Eigen::Index incumbent_row) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index m = scores.cols();
  if (m < 1) throw ValidationError("exact_win_prob: empty reference list");
  if (m > 8)
    throw ValidationError("exact_win_prob: |R| = " + std::to_string(m) +
                          " exceeds the enumeration limit of 8");
  if (incumbent_row < 0 || incumbent_row >= scores.rows())
    throw ValidationError("exact_win_prob: incumbent out of range");
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1> odometer =
      Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>::Zero(m);
  Eigen::VectorXd wins = Eigen::VectorXd::Zero(scores.rows());
  std::size_t total = 0;
  for (;;) {
    Scalar best = 0;
    for (Eigen::Index k = 0; k < m; ++k) best += scores(incumbent_row, odometer(k));
    best /= static_cast<Scalar>(m);
    for (Eigen::Index y = 0; y < scores.rows(); ++y) {
      Scalar u = 0;
      for (Eigen::Index k = 0; k < m; ++k) u += scores(y, odometer(k));
      u /= static_cast<Scalar>(m);
      if (u >= best) wins(y) += 1.0;
    }
    ++total;
    Eigen::Index d = 0;
    while (d < m && ++odometer(d) == m) odometer(d++) = 0;
    if (d == m) break;
  }
  return wins / static_cast<double>(total);
}

// argmax_{y in H} U(y, R); ties go to the smallest hypothesis index.
std::size_t argmax_utility(std::span<const std::size_t> hyps,
                           const RefList& refs, UtilityCache& cache);

// Win rates of `hyps` against `incumbent` over n_boot resamples of R shared
// by all hypotheses. Makes no utility calls.
Eigen::VectorXd bootstrap_win_rates(std::span<const std::size_t> hyps,
                                    const RefList& refs,
                                    const UtilityCache& cache,
                                    std::size_t incumbent,
                                    const ResampleMatrix& resamples);
Eigen::VectorXd bootstrap_win_rates(std::span<const std::size_t> hyps,
                                    const RefList& refs,
                                    const UtilityCache& cache,
                                    std::size_t incumbent, std::size_t n_boot,
                                    RngStream& rng);

// Keeps y with w(y) > 1 - alpha against the incumbent argmax under R.
PruneOutcome prune_confidence(std::span<const std::size_t> hyps,
                              const RefList& refs, UtilityCache& cache,
                              double alpha, const ResampleMatrix& resamples);
PruneOutcome prune_confidence(std::span<const std::size_t> hyps,
                              const RefList& refs, UtilityCache& cache,
                              double alpha, std::size_t n_boot, RngStream& rng);

// Drops the bottom floor(beta * |H|) by U(y, R), always keeping one.
PruneOutcome prune_rank(std::span<const std::size_t> hyps, const RefList& refs,
                        UtilityCache& cache, double beta);

// Standard MBR: argmax over all hypotheses with R = the first r_size entries
// of the trial's pool permutation.
DecodeResult standard_mbr(const PreparedInstance& instance, std::size_t r_size,
                          UtilityCache& cache, std::uint64_t seed,
                          std::size_t trial);
DecodeResult standard_mbr(const PreparedInstance& instance, std::size_t r_size,
                          const UtilityBackend& backend, std::uint64_t seed,
                          std::size_t trial);

// Iterative pruning: grow R along the schedule, prune H, stop at the end of
// the schedule or when one hypothesis is left, then return the argmax over
// the survivors under the last R.
DecodeResult pruning_mbr(const PreparedInstance& instance,
                         const DecodeConfig& config, UtilityCache& cache,
                         std::size_t trial);
DecodeResult pruning_mbr(const PreparedInstance& instance,
                         const DecodeConfig& config,
                         const UtilityBackend& backend, std::size_t trial);

// Dispatches on config.method; `standard` uses R size = schedule.back().
DecodeResult decode(const PreparedInstance& instance,
                    const DecodeConfig& config, UtilityCache& cache,
                    std::size_t trial);
DecodeResult decode(const PreparedInstance& instance,
                    const DecodeConfig& config, const UtilityBackend& backend,
                    std::size_t trial);

RngStream bootstrap_stream(std::uint64_t seed, const PreparedInstance& instance,
                           std::size_t trial, std::size_t step);

}  // namespace pmbr
