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

#include "pmbr/eval.hpp"

#include <algorithm>
#include <cmath>

#include "pmbr/parallel.hpp"

namespace pmbr {

namespace {

struct RunMetrics {
  double calls = 0.0;
  double pseudo_refs = 0.0;
  double accuracy = 0.0;
  double rr = 0.0;
  double score = 0.0;
};

// Everything a sweep needs per instance: the full score table (the oracle
// pass), a lookup backend over it, the oracle ranking and gold scores.
struct InstanceContext {
  std::unique_ptr<TableBackend> table;
  OracleRanking oracle;
  std::optional<Eigen::VectorXd> gold;
};

InstanceContext make_context(const PreparedInstance& inst,
                             const UtilityBackend& base) {
  InstanceContext ctx;
  ctx.table = std::make_unique<TableBackend>(inst, score_all(inst, base),
                                             base.name());
  ctx.oracle = oracle_ranking(inst, *ctx.table);
  const auto& ref = inst.instance().reference;
  if (ref && base.scores_arbitrary_pairs()) {
    std::vector<ScorePair> pairs;
    for (std::size_t h = 0; h < inst.hypotheses().size(); ++h) {
      ScorePair p{inst.hypothesis(h), *ref, std::nullopt};
      if (inst.instance().source) p.source = *inst.instance().source;
      pairs.push_back(p);
    }
    const auto scores = base.score_pairs(pairs);
    ctx.gold = Eigen::Map<const Eigen::VectorXd>(
        scores.data(), static_cast<Eigen::Index>(scores.size()));
  }
  return ctx;
}

std::string score_note(std::span<const PreparedInstance> corpus,
                       const BackendFactory& backend) {
  for (const auto& inst : corpus) {
    if (!inst.instance().reference)
      return "score omitted: instance " + inst.id() + " has no gold reference";
    if (!backend(inst).scores_arbitrary_pairs())
      return "score omitted: utility backend cannot score gold references";
  }
  return {};
}

}  // namespace

std::vector<PreparedInstance> prepare(std::span<const Instance> corpus) {
  std::vector<PreparedInstance> out;
  out.reserve(corpus.size());
  for (const Instance& inst : corpus) out.emplace_back(inst);
  return out;
}

std::size_t OracleRanking::rank_count(std::size_t hyp) const {
  const double u = utility(static_cast<Eigen::Index>(hyp));
  return static_cast<std::size_t>((utility.array() >= u).count());
}

OracleRanking oracle_ranking(const PreparedInstance& instance,
                             UtilityCache& cache) {
  RefList full(instance);
  for (std::size_t p = 0; p < instance.pool_size(); ++p) full.append(p);
  const HypothesisSet hyps = all_hypotheses(instance);
  OracleRanking out;
  out.utility = expected_utilities(hyps, full, cache);
  Eigen::Index best = 0;
  out.max_utility = out.utility.maxCoeff(&best);
  // maxCoeff returns the first maximizer, i.e. the smallest index.
  out.winner = static_cast<std::size_t>(best);
  return out;
}

OracleRanking oracle_ranking(const PreparedInstance& instance,
                             const UtilityBackend& backend) {
  UtilityCache cache(instance, backend);
  return oracle_ranking(instance, cache);
}

int exact_accuracy(std::size_t prediction, const OracleRanking& oracle) {
  return oracle.utility(static_cast<Eigen::Index>(prediction)) ==
                 oracle.max_utility
             ? 1
             : 0;
}

double reciprocal_rank(std::size_t prediction, const OracleRanking& oracle) {
  return 1.0 / static_cast<double>(oracle.rank_count(prediction));
}

SweepReport run_methods(std::span<const PreparedInstance> corpus,
                        std::span<const Method> methods,
                        const EvalOptions& options,
                        const BackendFactory& backend) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  if (methods.empty()) throw ValidationError("no decoding methods given");
  if (options.trials < 1) throw ValidationError("trials must be at least 1");
  for (const Method& m : methods) m.validate();
  for (const auto& inst : corpus) options.schedule.validate_for(inst.instance());

  const std::size_t n_methods = methods.size();
  const std::size_t n_trials = options.trials;
  // metrics[instance][method * trials + trial]
  std::vector<std::vector<RunMetrics>> metrics(corpus.size());

  parallel_for(corpus.size(), options.jobs, [&](std::size_t i) {
    const PreparedInstance& inst = corpus[i];
    const InstanceContext ctx = make_context(inst, backend(inst));
    auto& out = metrics[i];
    out.resize(n_methods * n_trials);
    for (std::size_t m = 0; m < n_methods; ++m) {
      DecodeConfig config{methods[m], options.schedule, options.n_boot,
                          options.seed, n_trials};
      for (std::size_t t = 0; t < n_trials; ++t) {
        const DecodeResult r = decode(inst, config, *ctx.table, t);
        RunMetrics& rm = out[m * n_trials + t];
        rm.calls = static_cast<double>(r.total_calls);
        rm.pseudo_refs = static_cast<double>(r.pseudo_refs_used);
        rm.accuracy = exact_accuracy(r.prediction, ctx.oracle);
        rm.rr = reciprocal_rank(r.prediction, ctx.oracle);
        if (ctx.gold) rm.score = (*ctx.gold)(static_cast<Eigen::Index>(r.prediction));
      }
    }
  });

  SweepReport report;
  report.instances = corpus.size();
  report.trials = n_trials;
  report.n_boot = options.n_boot;
  report.seed = options.seed;
  report.schedule = options.schedule.to_string();
  report.utility = backend(corpus.front()).name();
  report.note = score_note(corpus, backend);
  const bool has_score = report.note.empty();
  const double n_inst = static_cast<double>(corpus.size());

  for (std::size_t m = 0; m < n_methods; ++m) {
    SweepRow agg;
    agg.config = methods[m].label();
    agg.family = methods[m].family();
    agg.param = methods[m].param;
    const SweepRow blank = agg;
    double agg_score = 0.0;
    for (std::size_t t = 0; t < n_trials; ++t) {
      SweepRow row = blank;
      row.trial = static_cast<int>(t);
      double score = 0.0;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const RunMetrics& rm = metrics[i][m * n_trials + t];
        row.mean_calls += rm.calls;
        row.mean_pseudo_refs += rm.pseudo_refs;
        row.accuracy += rm.accuracy;
        row.mean_rr += rm.rr;
        score += rm.score;
      }
      row.mean_calls /= n_inst;
      row.mean_pseudo_refs /= n_inst;
      row.accuracy /= n_inst;
      row.mean_rr /= n_inst;
      if (has_score) row.score = score / n_inst;
      report.rows.push_back(row);

      agg.mean_calls += row.mean_calls;
      agg.mean_pseudo_refs += row.mean_pseudo_refs;
      agg.accuracy += row.accuracy;
      agg.mean_rr += row.mean_rr;
      agg_score += score / n_inst;
    }
    const double nt = static_cast<double>(n_trials);
    agg.mean_calls /= nt;
    agg.mean_pseudo_refs /= nt;
    agg.accuracy /= nt;
    agg.mean_rr /= nt;
    if (has_score) agg.score = agg_score / nt;
    report.aggregated.push_back(agg);
  }
  return report;
}

SweepReport tradeoff_sweep(std::span<const PreparedInstance> corpus,
                           std::span<const double> alphas,
                           std::span<const double> betas,
                           const EvalOptions& options,
                           const BackendFactory& backend) {
  if (alphas.empty() && betas.empty())
    throw ValidationError("sweep needs at least one alpha or beta");
  std::vector<Method> methods{Method::standard()};
  for (double a : alphas) methods.push_back(Method::confidence(a));
  for (double b : betas) methods.push_back(Method::rank(b));
  return run_methods(corpus, methods, options, backend);
}

FalsePruneTable false_pruning_rate(std::span<const PreparedInstance> corpus,
                                   std::span<const double> alphas,
                                   std::span<const std::size_t> sizes,
                                   const EvalOptions& options,
                                   const BackendFactory& backend) {
  if (corpus.empty()) throw ValidationError("empty corpus");
  if (alphas.empty() || sizes.empty())
    throw ValidationError("false-prune grids must be non-empty");
  for (double a : alphas) Method::confidence(a).validate();
  for (std::size_t s : sizes) {
    if (s == 0) throw ValidationError("reference sizes must be positive");
    for (const auto& inst : corpus)
      if (s > inst.pool_size())
        throw ValidationError("instance " + inst.id() + ": size " +
                              std::to_string(s) + " exceeds pool size " +
                              std::to_string(inst.pool_size()));
  }
  const std::size_t n_trials = options.trials;
  // pruned[instance] is (alpha x size) counts over trials
  std::vector<Eigen::MatrixXd> pruned(corpus.size());

  parallel_for(corpus.size(), options.jobs, [&](std::size_t i) {
    const PreparedInstance& inst = corpus[i];
    const InstanceContext ctx = make_context(inst, backend(inst));
    const HypothesisSet hyps = all_hypotheses(inst);
    const std::size_t target[] = {ctx.oracle.winner};
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(
        static_cast<Eigen::Index>(alphas.size()),
        static_cast<Eigen::Index>(sizes.size()));
    for (std::size_t t = 0; t < n_trials; ++t) {
      RngStream pool_rng = pool_stream(options.seed, inst.instance(), t);
      const auto perm = permute_pool(inst.instance(), pool_rng);
      UtilityCache cache(inst, *ctx.table);
      for (std::size_t s = 0; s < sizes.size(); ++s) {
        RefList refs(inst);
        refs.append(std::span(perm).first(sizes[s]));
        const std::size_t incumbent = argmax_utility(hyps, refs, cache);
        RngStream rng(options.seed, inst.id(), t, "false-prune", sizes[s]);
        const double w = bootstrap_win_rates(target, refs, cache, incumbent,
                                             options.n_boot, rng)(0);
        for (std::size_t a = 0; a < alphas.size(); ++a)
          if (!(w > 1.0 - alphas[a]))
            counts(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(s)) += 1;
      }
    }
    pruned[i] = std::move(counts);
  });

  FalsePruneTable table;
  table.alphas.assign(alphas.begin(), alphas.end());
  table.sizes.assign(sizes.begin(), sizes.end());
  table.samples = corpus.size() * n_trials;
  table.rates = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(alphas.size()),
                                      static_cast<Eigen::Index>(sizes.size()));
  for (const auto& c : pruned) table.rates += c;
  table.rates /= static_cast<double>(table.samples);
  return table;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<SurvivalPoint> survival_trace(
    std::span<const PreparedInstance> corpus, const Method& method,
    const EvalOptions& options, const BackendFactory& backend) {
  method.validate();
  for (const auto& inst : corpus) options.schedule.validate_for(inst.instance());
  const std::size_t n_trials = options.trials;
  std::vector<std::vector<std::vector<std::size_t>>> counts(corpus.size());

  parallel_for(corpus.size(), options.jobs, [&](std::size_t i) {
    const PreparedInstance& inst = corpus[i];
    const InstanceContext ctx = make_context(inst, backend(inst));
    DecodeConfig config{method, options.schedule, options.n_boot, options.seed,
                        n_trials};
    for (std::size_t t = 0; t < n_trials; ++t) {
      const DecodeResult r = pruning_mbr(inst, config, *ctx.table, t);
      std::vector<std::size_t> surviving;
      for (const StepTrace& s : r.steps) surviving.push_back(s.surviving);
      counts[i].push_back(std::move(surviving));
    }
  });

  std::size_t max_steps = 0;
  for (const auto& inst : counts)
    for (const auto& run : inst) max_steps = std::max(max_steps, run.size());

  std::vector<SurvivalPoint> trace;
  for (std::size_t step = 0; step < max_steps; ++step) {
    std::vector<double> values;
    for (const auto& inst : counts)
      for (const auto& run : inst)
        values.push_back(step < run.size() ? static_cast<double>(run[step]) : 1.0);
    SurvivalPoint p;
    p.step = step + 1;
    p.refs = options.schedule.sizes()[step];
    p.runs = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    p.mean = sum / static_cast<double>(values.size());
    p.q1 = quantile(values, 0.25);
    p.q3 = quantile(values, 0.75);
    trace.push_back(p);
  }
  return trace;
}

SummaryTable summarize(std::span<const PreparedInstance> corpus,
                       std::span<const Method> methods,
                       const EvalOptions& options,
                       const BackendFactory& backend) {
  const SweepReport report = run_methods(corpus, methods, options, backend);
  SummaryTable table;
  for (const Method& m : methods) table.configs.push_back(m.label());
  table.columns = report.aggregated;
  table.note = report.note;
  return table;
}

}  // namespace pmbr
