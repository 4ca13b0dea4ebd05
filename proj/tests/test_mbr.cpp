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

#include <algorithm>
#include <cmath>
#include <set>

#include "pmbr/chrf.hpp"
#include "pmbr/mbr.hpp"
#include "test_support.hpp"

using namespace pmbr;
using pmbr::testing::random_instance;
using pmbr::testing::token_f1;
using pmbr::testing::TokenF1Backend;

namespace {

// Utility defined by a dense table over (hypothesis, pool) strings of the
// form "h<i>" / "r<j>".
class GridBackend : public UtilityBackend {
 public:
  explicit GridBackend(Eigen::MatrixXd scores) : scores_(std::move(scores)) {}
  std::vector<double> score_pairs(std::span<const ScorePair> pairs) const override {
    std::vector<double> out;
    for (const auto& p : pairs)
      out.push_back(scores_(std::stoi(std::string(p.hypothesis.substr(1))),
                            std::stoi(std::string(p.reference.substr(1)))));
    return out;
  }
  std::string name() const override { return "grid"; }

 private:
  Eigen::MatrixXd scores_;
};

Instance grid_instance(std::string id, Eigen::Index rows, Eigen::Index cols) {
  Instance inst;
  inst.id = std::move(id);
  for (Eigen::Index i = 0; i < rows; ++i) inst.hypotheses.push_back("h" + std::to_string(i));
  for (Eigen::Index j = 0; j < cols; ++j) inst.pool.push_back("r" + std::to_string(j));
  return inst;
}

Eigen::MatrixXd random_table(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                             int levels = 0) {
  RngStream rng(seed, "table", 0, "test");
  Eigen::MatrixXd t(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      t(i, j) = levels > 0 ? static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)))
                           : static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
  return t;
}

}  // namespace

TEST_SUITE("mbr") {

TEST_CASE("exact win probability on a two-reference example") {
  // Row 1 loses on (0,0), wins on (1,1) and ties on the two mixed draws.
  Eigen::MatrixXd s(2, 2);
  s << 1, 0,
       0, 1;
  const Eigen::VectorXd w = exact_win_prob(s, 0);
  CHECK(w(0) == 1.0);
  CHECK(w(1) == 0.75);
  CHECK_THROWS_AS(exact_win_prob(Eigen::MatrixXd::Zero(2, 9), 0), ValidationError);
}

TEST_CASE("Monte Carlo win rates converge to the exact values") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Eigen::MatrixXd s = random_table(3, 4, seed);
    const Eigen::VectorXd exact = exact_win_prob(s, 0);
    RngStream big(seed, "mc", 0, "bootstrap");
    const Eigen::VectorXd mc = win_rates(s, 0, draw_resamples(4, 50000, big));
    CHECK((mc - exact).cwiseAbs().maxCoeff() <= 0.01);
    RngStream small(seed, "mc", 0, "bootstrap");
    const Eigen::VectorXd mc500 = win_rates(s, 0, draw_resamples(4, 500, small));
    CHECK((mc500 - exact).cwiseAbs().maxCoeff() <= 0.06);
  }
}

TEST_CASE("confidence pruning matches a direct implementation") {
  const Eigen::MatrixXd s = random_table(8, 16, 42, 5);
  const Instance raw = grid_instance("alg2", 8, 16);
  const PreparedInstance inst(raw);
  GridBackend grid(s);
  UtilityCache cache(inst, grid);
  RefList refs(inst);
  for (std::size_t j = 0; j < 16; ++j) refs.append(j);
  const auto hyps = all_hypotheses(inst);

  for (double alpha : {0.5, 0.8, 0.9, 0.99}) {
    RngStream rng(3, "alg2", 0, "bootstrap");
    const ResampleMatrix resamples = draw_resamples(16, 200, rng);
    const auto got = prune_confidence(hyps, refs, cache, alpha, resamples);

    // Direct: argmax by plain means, then count resample wins row by row.
    Eigen::Index inc = 0;
    for (Eigen::Index y = 1; y < 8; ++y)
      if (s.row(y).sum() > s.row(inc).sum()) inc = y;
    CHECK(got.incumbent == static_cast<std::size_t>(inc));
    std::vector<std::size_t> kept;
    for (Eigen::Index y = 0; y < 8; ++y) {
      int wins = 0;
      for (Eigen::Index b = 0; b < 200; ++b) {
        double uy = 0, ui = 0;
        for (Eigen::Index k = 0; k < 16; ++k) {
          uy += s(y, resamples(k, b));
          ui += s(inc, resamples(k, b));
        }
        if (uy >= ui) ++wins;
      }
      CHECK(got.win_rates(y) == doctest::Approx(wins / 200.0));
      if (wins / 200.0 > 1.0 - alpha) kept.push_back(static_cast<std::size_t>(y));
    }
    CHECK(got.kept == kept);
  }
}

TEST_CASE("confidence pruning is monotone in alpha") {
  const Eigen::MatrixXd s = random_table(12, 20, 7);
  const PreparedInstance inst(grid_instance("mono", 12, 20));
  GridBackend grid(s);
  UtilityCache cache(inst, grid);
  RefList refs(inst);
  for (std::size_t j = 0; j < 20; ++j) refs.append(j);
  const auto hyps = all_hypotheses(inst);
  RngStream rng(1, "mono", 0, "bootstrap");
  const auto resamples = draw_resamples(20, 300, rng);
  HypothesisSet previous;
  for (double alpha : {0.05, 0.2, 0.5, 0.8, 0.9, 0.99, 1.0}) {
    const auto kept = prune_confidence(hyps, refs, cache, alpha, resamples).kept;
    CHECK(std::includes(kept.begin(), kept.end(), previous.begin(), previous.end()));
    previous = kept;
  }
}

TEST_CASE("rank pruning sizes, ties and monotonicity") {
  const auto run = [](const Eigen::MatrixXd& s, double beta) {
    const PreparedInstance inst(grid_instance("rank", s.rows(), s.cols()));
    GridBackend grid(s);
    UtilityCache cache(inst, grid);
    RefList refs(inst);
    for (std::size_t j = 0; j < static_cast<std::size_t>(s.cols()); ++j) refs.append(j);
    return prune_rank(all_hypotheses(inst), refs, cache, beta);
  };
  CHECK(run(random_table(10, 4, 1), 0.3).kept.size() == 7);
  CHECK(run(random_table(3, 4, 1), 0.95).kept.size() == 1);
  CHECK(run(random_table(3, 4, 1), 0.0).kept.size() == 3);
  CHECK(run(random_table(100, 2, 1), 0.29).kept.size() == 71);

  Eigen::MatrixXd tie(4, 1);
  tie << 0.5, 0.9, 0.9, 0.9;
  const auto t = run(tie, 0.5);
  CHECK(t.kept == HypothesisSet{1, 2});
  CHECK(t.incumbent == 1);

  const Eigen::MatrixXd s = random_table(20, 5, 9);
  HypothesisSet previous = run(s, 0.0).kept;
  for (double beta : {0.1, 0.25, 0.5, 0.75, 0.9, 0.99}) {
    const auto kept = run(s, beta).kept;
    CHECK(std::includes(previous.begin(), previous.end(), kept.begin(), kept.end()));
    previous = kept;
  }
}

TEST_CASE("argmax ties go to the smallest hypothesis index") {
  Eigen::MatrixXd s(3, 2);
  s << 0.25, 0.75,
       0.5, 0.5,
       0.75, 0.25;
  const PreparedInstance inst(grid_instance("tie", 3, 2));
  GridBackend grid(s);
  UtilityCache cache(inst, grid);
  RefList refs(inst);
  refs.append(0);
  refs.append(1);
  CHECK(argmax_utility(all_hypotheses(inst), refs, cache) == 0);
  const HypothesisSet tail = {1, 2};
  CHECK(argmax_utility(tail, refs, cache) == 1);
}

TEST_CASE("standard MBR equals brute force over the full pool") {
  const auto raw = random_instance("brute", 64, 256, 40, 5);
  const PreparedInstance inst(raw);
  TokenF1Backend f1;
  UtilityCache cache(inst, f1);
  const auto r = standard_mbr(inst, 256, cache, 1, 0);

  std::size_t best = 0;
  double best_u = -1;
  for (std::size_t i = 0; i < raw.hypotheses.size(); ++i) {
    double u = 0;
    for (const auto& ref : raw.pool) u += token_f1(raw.hypotheses[i], ref);
    if (u > best_u + 1e-12) {
      best_u = u;
      best = i;
    }
  }
  CHECK(r.prediction_text == raw.hypotheses[best]);
  CHECK(r.total_calls == inst.hypotheses().size() * inst.pool().size());
  CHECK(r.total_calls == cache.occupancy());
  CHECK(r.pseudo_refs_used == 256);
}

TEST_CASE("call accounting and trace invariants") {
  TokenF1Backend f1;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto raw = random_instance("acct" + std::to_string(seed), 16, 64, 8, seed);
    const PreparedInstance inst(raw);
    for (const auto& method : {Method::confidence(0.9), Method::confidence(0.5),
                               Method::rank(0.5), Method::rank(0.0)}) {
      DecodeConfig cfg{method, Schedule::parse("4,8,16,32,64"), 100, seed, 1};
      UtilityCache cache(inst, f1);
      const auto r = decode(inst, cfg, cache, 0);
      CHECK(r.total_calls == cache.occupancy());
      std::size_t sum = 0, prev = inst.hypotheses().size();
      for (const auto& st : r.steps) {
        sum += st.new_calls;
        CHECK(st.surviving <= prev);
        CHECK(st.surviving >= 1);
        prev = st.surviving;
      }
      CHECK(sum == r.total_calls);
      CHECK(r.pseudo_refs_used == r.steps.back().refs);
      CHECK(r.terminated_early == (r.steps.size() < 5));
    }
  }
}

TEST_CASE("rank:0 reproduces standard MBR") {
  TokenF1Backend f1;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto raw = random_instance("anchor" + std::to_string(seed), 20, 64, 6, seed);
    const PreparedInstance inst(raw);
    DecodeConfig cfg{Method::rank(0.0), Schedule::parse("8,16,32,64"), 10, seed, 1};
    for (std::size_t t = 0; t < 3; ++t) {
      const auto p = decode(inst, cfg, f1, t);
      const auto s = standard_mbr(inst, 64, f1, seed, t);
      CHECK(p.prediction == s.prediction);
      CHECK(p.total_calls == s.total_calls);
    }
  }
}

TEST_CASE("a single unique hypothesis needs no utility calls") {
  const PreparedInstance inst(Instance{"one", {}, {}, {"same", "same"}, {"a", "b"}});
  TokenF1Backend f1;
  DecodeConfig cfg{Method::confidence(0.9), Schedule::parse("1,2"), 10, 1, 1};
  const auto r = decode(inst, cfg, f1, 0);
  CHECK(r.total_calls == 0);
  CHECK(r.prediction_text == "same");
  CHECK(r.steps.empty());
}

TEST_CASE("decoding is deterministic per seed and trial") {
  const auto raw = random_instance("det", 30, 64, 7, 4);
  const PreparedInstance inst(raw);
  ChrfBackend chrf;
  DecodeConfig cfg{Method::confidence(0.9), Schedule::parse("8,16,32,64"), 200, 5, 1};
  const auto a = decode(inst, cfg, chrf, 2);
  const auto b = decode(inst, cfg, chrf, 2);
  CHECK(a.prediction == b.prediction);
  CHECK(a.total_calls == b.total_calls);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t k = 0; k < a.steps.size(); ++k)
    CHECK(a.steps[k].surviving == b.steps[k].surviving);
}

}  // TEST_SUITE
