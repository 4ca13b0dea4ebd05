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
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pmbr/chrf.hpp"
#include "pmbr/core.hpp"

namespace pmbr {

struct ScorePair {
  std::string_view hypothesis;
  std::string_view reference;
  std::optional<std::string_view> source;
};

// The utility function u(hypothesis, reference). Implementations must be
// deterministic and safe to call concurrently on disjoint batches.
class UtilityBackend {
 public:
  virtual ~UtilityBackend() = default;

  virtual std::vector<double> score_pairs(
      std::span<const ScorePair> pairs) const = 0;
  virtual std::string name() const = 0;
  virtual bool requires_source() const { return false; }
  // False for lookup backends that only know the pairs of one instance.
  virtual bool scores_arbitrary_pairs() const { return true; }
};

class ChrfBackend final : public UtilityBackend {
 public:
  explicit ChrfBackend(ChrfParams params = {});

  std::vector<double> score_pairs(
      std::span<const ScorePair> pairs) const override;
  std::string name() const override { return "chrf"; }
  const ChrfParams& params() const { return params_; }

 private:
  ChrfParams params_;
};

// Dense lookup table over the unique hypotheses and references of one
// instance.
class TableBackend final : public UtilityBackend {
 public:
  TableBackend(const PreparedInstance& instance, Eigen::MatrixXd table,
               std::string name = "table");

  std::vector<double> score_pairs(
      std::span<const ScorePair> pairs) const override;
  std::string name() const override { return name_; }
  bool scores_arbitrary_pairs() const override { return false; }
  const Eigen::MatrixXd& table() const { return table_; }

 private:
  std::map<std::string, Eigen::Index, std::less<>> hyp_index_;
  std::map<std::string, Eigen::Index, std::less<>> ref_index_;
  Eigen::MatrixXd table_;
  std::string name_;
};

// Pseudo-reference list R: an ordered list of pool positions with per-unique
// reference occurrence counts. Only ever grows.
class RefList {
 public:
  explicit RefList(const PreparedInstance& instance);

  void append(std::size_t pool_position);
  void append(std::span<const std::size_t> pool_positions);

  std::size_t size() const { return positions_.size(); }
  bool empty() const { return positions_.empty(); }
  const std::vector<std::size_t>& positions() const { return positions_; }
  // Unique reference index of every list entry.
  const std::vector<std::size_t>& unique_ids() const { return unique_ids_; }
  const std::vector<std::size_t>& counts() const { return counts_; }
  // Unique references occurring in the list, ascending.
  std::vector<std::size_t> present() const;

 private:
  const DedupView* pool_;
  std::vector<std::size_t> positions_;
  std::vector<std::size_t> unique_ids_;
  std::vector<std::size_t> counts_;
};

// Per-instance memo of u over (unique hypothesis, unique reference) pairs.
// call_count() is the number of distinct pairs ever sent to the backend.
class UtilityCache {
 public:
  UtilityCache(const PreparedInstance& instance, const UtilityBackend& backend);

  // Scores every missing pair of hyps x refs in one backend batch. Returns
  // the number of newly scored pairs.
  std::size_t ensure(std::span<const std::size_t> hyps,
                     std::span<const std::size_t> refs);

  bool contains(std::size_t hyp, std::size_t ref) const {
    return known_(static_cast<Eigen::Index>(hyp), static_cast<Eigen::Index>(ref));
  }
  // Throws InternalError when the pair was never scored.
  double at(std::size_t hyp, std::size_t ref) const;

  std::size_t call_count() const { return call_count_; }
  std::size_t occupancy() const;

  const PreparedInstance& instance() const { return instance_; }
  const UtilityBackend& backend() const { return backend_; }
  const Eigen::MatrixXd& table() const { return scores_; }

 private:
  const PreparedInstance& instance_;
  const UtilityBackend& backend_;
  Eigen::MatrixXd scores_;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> known_;
  std::size_t call_count_ = 0;
};

// U(y, R): mean of u(y, r) over the list entries of R, scoring missing pairs
// through the cache. The sum runs over unique references in ascending order
// weighted by count, so the value depends only on the multiset R.
double expected_utility(std::size_t hyp, const RefList& refs,
                        UtilityCache& cache);

// U for several hypotheses with a single backend batch for missing pairs.
Eigen::VectorXd expected_utilities(std::span<const std::size_t> hyps,
                                   const RefList& refs, UtilityCache& cache);

// U(y, R^) and U(incumbent, R^) where R^ is given as indices into `refs`.
// Never scores: every pair must already be cached.
std::pair<double, double> expected_utility_on_resample(
    std::size_t hyp, std::size_t incumbent,
    std::span<const std::size_t> resample, const RefList& refs,
    const UtilityCache& cache);

// Full |H_unique| x |pool_unique| table through the backend in one batch.
Eigen::MatrixXd score_all(const PreparedInstance& instance,
                          const UtilityBackend& backend);

// Offline utility scores aligned with an instance file: rows follow
// `hypotheses`, columns follow `pool`, both in original (pre-dedup) order.
struct UtilityMatrix {
  std::string id;  // empty for single-matrix files
  Eigen::MatrixXd scores;
};

UtilityMatrix parse_utility_matrix(std::string_view json_text);
UtilityMatrix load_utility_matrix(const std::filesystem::path& path);
// JSON-lines, one matrix object with an "id" key per instance.
std::map<std::string, UtilityMatrix> load_utility_matrices(
    const std::filesystem::path& path);
std::string utility_matrix_json(const UtilityMatrix& matrix);
UtilityMatrix expand_to_matrix(const PreparedInstance& instance,
                               const Eigen::MatrixXd& unique_table);

std::unique_ptr<UtilityBackend> matrix_backend(const UtilityMatrix& matrix,
                                               const PreparedInstance& instance);

struct RemoteOptions {
  std::string endpoint;  // e.g. http://127.0.0.1:8080
  double timeout_seconds = 60.0;
  std::size_t batch_size = 256;
  int max_retries = 3;
  int retry_backoff_ms = 200;
};

// Client for the JSON-over-HTTP scoring bridge:
//   POST {endpoint}/v1/score  {"pairs":[{"hypothesis","reference","source"?}]}
//     -> {"scores":[...], "metric_name": "..."}
//   GET  {endpoint}/v1/health -> {"status":"ok","metric":"..."}
class RemoteBackend final : public UtilityBackend {
 public:
  explicit RemoteBackend(RemoteOptions options);

  std::vector<double> score_pairs(
      std::span<const ScorePair> pairs) const override;
  std::string name() const override;
  bool requires_source() const override { return false; }

  // Metric name reported by the server. Throws BackendError when the server
  // is unreachable or not ready.
  std::string health() const;

  const RemoteOptions& options() const { return options_; }

 private:
  std::vector<double> post_batch(std::span<const ScorePair> batch) const;

  RemoteOptions options_;
  std::string host_;
  std::string path_prefix_;
};

std::unique_ptr<RemoteBackend> remote_backend(RemoteOptions options);

}  // namespace pmbr
