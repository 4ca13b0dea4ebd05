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

#include "pmbr/utility.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "pmbr/error.hpp"

namespace pmbr {

using nlohmann::json;

ChrfBackend::ChrfBackend(ChrfParams params) : params_(params) {
  params_.validate();
}

std::vector<double> ChrfBackend::score_pairs(
    std::span<const ScorePair> pairs) const {
  // Profiles are built once per distinct sentence within the batch.
  std::unordered_map<std::string_view, ChrfProfile> hyps;
  std::unordered_map<std::string_view, ChrfProfile> refs;
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const ScorePair& p : pairs) {
    auto h = hyps.find(p.hypothesis);
    if (h == hyps.end())
      h = hyps.emplace(p.hypothesis, ChrfProfile(p.hypothesis, params_)).first;
    auto r = refs.find(p.reference);
    if (r == refs.end())
      r = refs.emplace(p.reference, ChrfProfile(p.reference, params_)).first;
    out.push_back(chrf_pp(h->second, r->second, params_));
  }
  return out;
}

TableBackend::TableBackend(const PreparedInstance& instance,
                           Eigen::MatrixXd table, std::string name)
    : table_(std::move(table)), name_(std::move(name)) {
  if (table_.rows() != static_cast<Eigen::Index>(instance.hypotheses().size()) ||
      table_.cols() != static_cast<Eigen::Index>(instance.pool().size()))
    throw ValidationError("instance " + instance.id() +
                          ": score table has wrong dimensions");
  for (std::size_t i = 0; i < instance.hypotheses().size(); ++i)
    hyp_index_.emplace(instance.hypothesis(i), static_cast<Eigen::Index>(i));
  for (std::size_t j = 0; j < instance.pool().size(); ++j)
    ref_index_.emplace(instance.reference(j), static_cast<Eigen::Index>(j));
}

std::vector<double> TableBackend::score_pairs(
    std::span<const ScorePair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const ScorePair& p : pairs) {
    const auto h = hyp_index_.find(p.hypothesis);
    const auto r = ref_index_.find(p.reference);
    if (h == hyp_index_.end() || r == ref_index_.end())
      throw BackendError(name_ + ": pair is not part of the instance");
    out.push_back(table_(h->second, r->second));
  }
  return out;
}

RefList::RefList(const PreparedInstance& instance)
    : pool_(&instance.pool()), counts_(instance.pool().size(), 0) {}

void RefList::append(std::size_t pool_position) {
  if (pool_position >= pool_->index_of.size())
    throw ValidationError("pool position out of range");
  const std::size_t u = pool_->index_of[pool_position];
  positions_.push_back(pool_position);
  unique_ids_.push_back(u);
  ++counts_[u];
}

void RefList::append(std::span<const std::size_t> pool_positions) {
  for (std::size_t p : pool_positions) append(p);
}

std::vector<std::size_t> RefList::present() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < counts_.size(); ++j)
    if (counts_[j] > 0) out.push_back(j);
  return out;
}

UtilityCache::UtilityCache(const PreparedInstance& instance,
                           const UtilityBackend& backend)
    : instance_(instance),
      backend_(backend),
      scores_(Eigen::MatrixXd::Zero(
          static_cast<Eigen::Index>(instance.hypotheses().size()),
          static_cast<Eigen::Index>(instance.pool().size()))),
      known_(Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
          scores_.rows(), scores_.cols(), false)) {}

std::size_t UtilityCache::ensure(std::span<const std::size_t> hyps,
                                 std::span<const std::size_t> refs) {
  std::vector<std::pair<std::size_t, std::size_t>> missing;
  for (std::size_t h : hyps)
    for (std::size_t r : refs)
      if (!contains(h, r)) missing.emplace_back(h, r);
  if (missing.empty()) return 0;

  const auto& source = instance_.instance().source;
  std::vector<ScorePair> batch;
  batch.reserve(missing.size());
  for (const auto& [h, r] : missing) {
    ScorePair p{instance_.hypothesis(h), instance_.reference(r), std::nullopt};
    if (source) p.source = *source;
    batch.push_back(p);
  }
  if (backend_.requires_source() && !source)
    throw BackendError("instance " + instance_.id() + ": backend " +
                       backend_.name() + " requires a source sentence");

  std::vector<double> scores;
  try {
    scores = backend_.score_pairs(batch);
  } catch (const BackendError& e) {
    throw BackendError("instance " + instance_.id() + ": " + e.what());
  }
  if (scores.size() != batch.size())
    throw ProtocolError("instance " + instance_.id() + ": backend returned " +
                        std::to_string(scores.size()) + " scores for " +
                        std::to_string(batch.size()) + " pairs");
  for (std::size_t k = 0; k < missing.size(); ++k) {
    if (!std::isfinite(scores[k]))
      throw BackendError("instance " + instance_.id() +
                         ": non-finite utility for hypothesis " +
                         std::to_string(missing[k].first) + ", reference " +
                         std::to_string(missing[k].second));
    const auto h = static_cast<Eigen::Index>(missing[k].first);
    const auto r = static_cast<Eigen::Index>(missing[k].second);
    scores_(h, r) = scores[k];
    known_(h, r) = true;
  }
  call_count_ += missing.size();
  return missing.size();
}

double UtilityCache::at(std::size_t hyp, std::size_t ref) const {
  if (!contains(hyp, ref))
    throw InternalError("instance " + instance_.id() + ": pair (" +
                        std::to_string(hyp) + ", " + std::to_string(ref) +
                        ") used before it was scored");
  return scores_(static_cast<Eigen::Index>(hyp), static_cast<Eigen::Index>(ref));
}

std::size_t UtilityCache::occupancy() const {
  return static_cast<std::size_t>(known_.count());
}

namespace {

double weighted_mean(std::size_t hyp, const RefList& refs,
                     std::span<const std::size_t> present,
                     const UtilityCache& cache) {
  double sum = 0.0;
  for (std::size_t j : present)
    sum += static_cast<double>(refs.counts()[j]) * cache.at(hyp, j);
  return sum / static_cast<double>(refs.size());
}

}  // namespace

double expected_utility(std::size_t hyp, const RefList& refs,
                        UtilityCache& cache) {
  if (refs.empty()) throw ValidationError("expected_utility: empty R");
  const auto present = refs.present();
  const std::size_t one[] = {hyp};
  cache.ensure(one, present);
  return weighted_mean(hyp, refs, present, cache);
}

Eigen::VectorXd expected_utilities(std::span<const std::size_t> hyps,
                                   const RefList& refs, UtilityCache& cache) {
  if (refs.empty()) throw ValidationError("expected_utility: empty R");
  const auto present = refs.present();
  cache.ensure(hyps, present);
  Eigen::VectorXd out(static_cast<Eigen::Index>(hyps.size()));
  for (std::size_t i = 0; i < hyps.size(); ++i)
    out(static_cast<Eigen::Index>(i)) =
        weighted_mean(hyps[i], refs, present, cache);
  return out;
}

std::pair<double, double> expected_utility_on_resample(
    std::size_t hyp, std::size_t incumbent,
    std::span<const std::size_t> resample, const RefList& refs,
    const UtilityCache& cache) {
  if (resample.empty()) throw ValidationError("empty resample");
  double a = 0.0;
  double b = 0.0;
  for (std::size_t k : resample) {
    const std::size_t u = refs.unique_ids().at(k);
    a += cache.at(hyp, u);
    b += cache.at(incumbent, u);
  }
  const double m = static_cast<double>(resample.size());
  return {a / m, b / m};
}

Eigen::MatrixXd score_all(const PreparedInstance& instance,
                          const UtilityBackend& backend) {
  UtilityCache cache(instance, backend);
  std::vector<std::size_t> hyps(instance.hypotheses().size());
  std::vector<std::size_t> refs(instance.pool().size());
  for (std::size_t i = 0; i < hyps.size(); ++i) hyps[i] = i;
  for (std::size_t j = 0; j < refs.size(); ++j) refs[j] = j;
  cache.ensure(hyps, refs);
  return cache.table();
}

UtilityMatrix parse_utility_matrix(std::string_view json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("utility matrix: invalid JSON: ") +
                          e.what());
  }
  if (!obj.is_object()) throw ValidationError("utility matrix: not an object");
  UtilityMatrix m;
  if (auto it = obj.find("id"); it != obj.end() && it->is_string())
    m.id = it->get<std::string>();
  const std::string where = m.id.empty() ? "" : " (instance " + m.id + ")";
  const auto rows = obj.find("hypotheses");
  const auto cols = obj.find("references");
  const auto scores = obj.find("scores");
  if (rows == obj.end() || !rows->is_number_unsigned() || cols == obj.end() ||
      !cols->is_number_unsigned() || scores == obj.end() || !scores->is_array())
    throw ValidationError("utility matrix" + where +
                          ": expected keys hypotheses, references, scores");
  const auto n = rows->get<std::size_t>();
  const auto k = cols->get<std::size_t>();
  if (scores->size() != n * k)
    throw ValidationError("utility matrix" + where + ": expected " +
                          std::to_string(n * k) + " scores, found " +
                          std::to_string(scores->size()));
  m.scores.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const json& v = (*scores)[i * k + j];
      if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw ValidationError("utility matrix" + where +
                              ": non-finite entry at row " + std::to_string(i) +
                              ", column " + std::to_string(j));
      m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          v.get<double>();
    }
  }
  return m;
}

UtilityMatrix load_utility_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open utility matrix " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_utility_matrix(buf.str());
}

std::map<std::string, UtilityMatrix> load_utility_matrices(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open utility matrices " + path.string());
  std::map<std::string, UtilityMatrix> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    UtilityMatrix m;
    try {
      m = parse_utility_matrix(line);
    } catch (const ValidationError& e) {
      throw ParseError(lineno, e.what());
    }
    if (m.id.empty()) throw ParseError(lineno, "utility matrix without \"id\"");
    const std::string id = m.id;
    if (!out.emplace(id, std::move(m)).second)
      throw ParseError(lineno, "duplicate utility matrix id " + id);
  }
  return out;
}

std::string utility_matrix_json(const UtilityMatrix& matrix) {
  json obj = json::object();
  if (!matrix.id.empty()) obj["id"] = matrix.id;
  obj["hypotheses"] = static_cast<std::size_t>(matrix.scores.rows());
  obj["references"] = static_cast<std::size_t>(matrix.scores.cols());
  json scores = json::array();
  for (Eigen::Index i = 0; i < matrix.scores.rows(); ++i)
    for (Eigen::Index j = 0; j < matrix.scores.cols(); ++j)
      scores.push_back(matrix.scores(i, j));
  obj["scores"] = std::move(scores);
  return obj.dump();
}

UtilityMatrix expand_to_matrix(const PreparedInstance& instance,
                               const Eigen::MatrixXd& unique_table) {
  const auto& h = instance.hypotheses().index_of;
  const auto& r = instance.pool().index_of;
  UtilityMatrix m;
  m.id = instance.id();
  m.scores.resize(static_cast<Eigen::Index>(h.size()),
                  static_cast<Eigen::Index>(r.size()));
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j)
      m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          unique_table(static_cast<Eigen::Index>(h[i]),
                       static_cast<Eigen::Index>(r[j]));
  return m;
}

std::unique_ptr<UtilityBackend> matrix_backend(
    const UtilityMatrix& matrix, const PreparedInstance& instance) {
  const auto& inst = instance.instance();
  if (matrix.scores.rows() != static_cast<Eigen::Index>(inst.hypotheses.size()) ||
      matrix.scores.cols() != static_cast<Eigen::Index>(inst.pool.size()))
    throw ValidationError(
        "instance " + inst.id + ": utility matrix is " +
        std::to_string(matrix.scores.rows()) + "x" +
        std::to_string(matrix.scores.cols()) + ", instance has " +
        std::to_string(inst.hypotheses.size()) + " hypotheses and " +
        std::to_string(inst.pool.size()) + " pool entries");
  if (!matrix.scores.allFinite())
    throw ValidationError("instance " + inst.id +
                          ": utility matrix has non-finite entries");
  const auto& hyp_first = instance.hypotheses().first_position;
  const auto& ref_first = instance.pool().first_position;
  Eigen::MatrixXd table(static_cast<Eigen::Index>(hyp_first.size()),
                        static_cast<Eigen::Index>(ref_first.size()));
  for (std::size_t i = 0; i < hyp_first.size(); ++i)
    for (std::size_t j = 0; j < ref_first.size(); ++j)
      table(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          matrix.scores(static_cast<Eigen::Index>(hyp_first[i]),
                        static_cast<Eigen::Index>(ref_first[j]));
  return std::make_unique<TableBackend>(instance, std::move(table), "matrix");
}

}  // namespace pmbr
