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

#include "pmbr/mbr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pmbr {

HypothesisSet all_hypotheses(const PreparedInstance& instance) {
  HypothesisSet h(instance.hypotheses().size());
  std::iota(h.begin(), h.end(), std::size_t{0});
  return h;
}

RngStream bootstrap_stream(std::uint64_t seed, const PreparedInstance& instance,
                           std::size_t trial, std::size_t step) {
  return RngStream(seed, instance.id(), trial, "bootstrap", step);
}

ResampleMatrix draw_resamples(std::size_t list_size, std::size_t n_boot,
                              RngStream& rng) {
  if (list_size == 0) throw ValidationError("cannot resample an empty list");
  if (n_boot == 0) throw ValidationError("n_boot must be at least 1");
  ResampleMatrix out(static_cast<Eigen::Index>(list_size),
                     static_cast<Eigen::Index>(n_boot));
  for (Eigen::Index i = 0; i < out.cols(); ++i)
    for (Eigen::Index k = 0; k < out.rows(); ++k)
      out(k, i) = static_cast<Eigen::Index>(rng.below(list_size));
  return out;
}

std::size_t argmax_utility(std::span<const std::size_t> hyps,
                           const RefList& refs, UtilityCache& cache) {
  if (hyps.empty()) throw ValidationError("argmax over an empty set");
  const Eigen::VectorXd u = expected_utilities(hyps, refs, cache);
  std::size_t best = 0;
  for (std::size_t i = 1; i < hyps.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const auto bb = static_cast<Eigen::Index>(best);
    if (u(ii) > u(bb) || (u(ii) == u(bb) && hyps[i] < hyps[best])) best = i;
  }
  return hyps[best];
}

Eigen::VectorXd bootstrap_win_rates(std::span<const std::size_t> hyps,
                                    const RefList& refs,
                                    const UtilityCache& cache,
                                    std::size_t incumbent,
                                    const ResampleMatrix& resamples) {
  if (refs.empty()) throw ValidationError("bootstrap over an empty R");
  if (resamples.rows() != static_cast<Eigen::Index>(refs.size()))
    throw ValidationError("resample length does not match |R|");
  const auto m = static_cast<Eigen::Index>(refs.size());
  const auto n = static_cast<Eigen::Index>(hyps.size());
  // Last row holds the incumbent.
  Eigen::MatrixXd table(n + 1, m);
  const auto& uid = refs.unique_ids();
  for (Eigen::Index k = 0; k < m; ++k) {
    const std::size_t r = uid[static_cast<std::size_t>(k)];
    for (Eigen::Index y = 0; y < n; ++y)
      table(y, k) = cache.at(hyps[static_cast<std::size_t>(y)], r);
    table(n, k) = cache.at(incumbent, r);
  }
  return win_rates(table, n, resamples).head(n);
}

Eigen::VectorXd bootstrap_win_rates(std::span<const std::size_t> hyps,
                                    const RefList& refs,
                                    const UtilityCache& cache,
                                    std::size_t incumbent, std::size_t n_boot,
                                    RngStream& rng) {
  return bootstrap_win_rates(hyps, refs, cache, incumbent,
                             draw_resamples(refs.size(), n_boot, rng));
}

PruneOutcome prune_confidence(std::span<const std::size_t> hyps,
                              const RefList& refs, UtilityCache& cache,
                              double alpha, const ResampleMatrix& resamples) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("alpha must lie in (0, 1]");
  PruneOutcome out;
  out.incumbent = argmax_utility(hyps, refs, cache);
  out.win_rates =
      bootstrap_win_rates(hyps, refs, cache, out.incumbent, resamples);
  const double threshold = 1.0 - alpha;
  for (std::size_t i = 0; i < hyps.size(); ++i)
    if (out.win_rates(static_cast<Eigen::Index>(i)) > threshold)
      out.kept.push_back(hyps[i]);
  return out;
}

PruneOutcome prune_confidence(std::span<const std::size_t> hyps,
                              const RefList& refs, UtilityCache& cache,
                              double alpha, std::size_t n_boot,
                              RngStream& rng) {
  return prune_confidence(hyps, refs, cache, alpha,
                          draw_resamples(refs.size(), n_boot, rng));
}

PruneOutcome prune_rank(std::span<const std::size_t> hyps, const RefList& refs,
                        UtilityCache& cache, double beta) {
  if (!(beta >= 0.0 && beta < 1.0))
    throw ValidationError("beta must lie in [0, 1)");
  if (hyps.empty()) throw ValidationError("prune_rank over an empty set");
  const Eigen::VectorXd u = expected_utilities(hyps, refs, cache);
  std::vector<std::size_t> order(hyps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ua = u(static_cast<Eigen::Index>(a));
    const double ub = u(static_cast<Eigen::Index>(b));
    if (ua != ub) return ua > ub;
    return hyps[a] < hyps[b];
  });
  const std::size_t n = hyps.size();
  // The small offset absorbs products like 0.29 * 100 = 28.999999999999996.
  const auto pruned =
      static_cast<std::size_t>(std::floor(beta * static_cast<double>(n) + 1e-9));
  const std::size_t keep = std::max<std::size_t>(1, n - std::min(pruned, n));

  PruneOutcome out;
  out.incumbent = hyps[order[0]];
  for (std::size_t i = 0; i < keep; ++i) out.kept.push_back(hyps[order[i]]);
  std::sort(out.kept.begin(), out.kept.end());
  return out;
}

DecodeResult standard_mbr(const PreparedInstance& instance, std::size_t r_size,
                          UtilityCache& cache, std::uint64_t seed,
                          std::size_t trial) {
  if (r_size == 0 || r_size > instance.pool_size())
    throw ValidationError("instance " + instance.id() + ": |R| = " +
                          std::to_string(r_size) + " but pool has " +
                          std::to_string(instance.pool_size()) + " entries");
  RngStream rng = pool_stream(seed, instance.instance(), trial);
  const auto perm = permute_pool(instance.instance(), rng);
  RefList refs(instance);
  refs.append(std::span(perm).first(r_size));

  const HypothesisSet hyps = all_hypotheses(instance);
  const std::size_t before = cache.call_count();
  DecodeResult result;
  result.prediction = argmax_utility(hyps, refs, cache);
  result.prediction_text = instance.hypothesis(result.prediction);
  result.total_calls = cache.call_count() - before;
  result.pseudo_refs_used = r_size;
  result.steps.push_back(
      {1, r_size, hyps.size(), result.total_calls, result.prediction});
  return result;
}

DecodeResult standard_mbr(const PreparedInstance& instance, std::size_t r_size,
                          const UtilityBackend& backend, std::uint64_t seed,
                          std::size_t trial) {
  UtilityCache cache(instance, backend);
  return standard_mbr(instance, r_size, cache, seed, trial);
}

DecodeResult pruning_mbr(const PreparedInstance& instance,
                         const DecodeConfig& config, UtilityCache& cache,
                         std::size_t trial) {
  config.validate();
  config.schedule.validate_for(instance.instance());

  HypothesisSet hyps = all_hypotheses(instance);
  DecodeResult result;
  if (hyps.size() == 1) {
    result.prediction = hyps.front();
    result.prediction_text = instance.hypothesis(result.prediction);
    result.terminated_early = true;
    return result;
  }

  RngStream pool_rng = pool_stream(config.seed, instance.instance(), trial);
  const auto perm = permute_pool(instance.instance(), pool_rng);
  RefList refs(instance);
  const std::size_t calls_at_start = cache.call_count();
  const auto& sizes = config.schedule.sizes();

  for (std::size_t t = 0; t < sizes.size() && hyps.size() > 1; ++t) {
    const std::size_t r_t = sizes[t];
    refs.append(std::span(perm).subspan(refs.size(), r_t - refs.size()));
    const std::size_t before = cache.call_count();
    cache.ensure(hyps, refs.present());

    PruneOutcome outcome;
    switch (config.method.kind) {
      case MethodKind::confidence: {
        RngStream rng = bootstrap_stream(config.seed, instance, trial, t + 1);
        outcome = prune_confidence(hyps, refs, cache, config.method.param,
                                   config.n_boot, rng);
        break;
      }
      case MethodKind::rank:
        outcome = prune_rank(hyps, refs, cache, config.method.param);
        break;
      case MethodKind::standard:
        outcome.incumbent = argmax_utility(hyps, refs, cache);
        outcome.kept = hyps;
        break;
    }
    hyps = std::move(outcome.kept);
    result.steps.push_back({t + 1, r_t, hyps.size(),
                            cache.call_count() - before, outcome.incumbent});
  }

  result.prediction = argmax_utility(hyps, refs, cache);
  result.prediction_text = instance.hypothesis(result.prediction);
  result.total_calls = cache.call_count() - calls_at_start;
  result.pseudo_refs_used = refs.size();
  result.terminated_early = result.steps.size() < sizes.size();
  return result;
}

DecodeResult pruning_mbr(const PreparedInstance& instance,
                         const DecodeConfig& config,
                         const UtilityBackend& backend, std::size_t trial) {
  UtilityCache cache(instance, backend);
  return pruning_mbr(instance, config, cache, trial);
}

DecodeResult decode(const PreparedInstance& instance,
                    const DecodeConfig& config, UtilityCache& cache,
                    std::size_t trial) {
  if (config.method.kind == MethodKind::standard) {
    config.validate();
    return standard_mbr(instance, config.schedule.back(), cache, config.seed,
                        trial);
  }
  return pruning_mbr(instance, config, cache, trial);
}

DecodeResult decode(const PreparedInstance& instance,
                    const DecodeConfig& config, const UtilityBackend& backend,
                    std::size_t trial) {
  UtilityCache cache(instance, backend);
  return decode(instance, config, cache, trial);
}

}  // namespace pmbr
