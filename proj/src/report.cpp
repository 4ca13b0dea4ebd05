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

#include "pmbr/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <ostream>

#include <json.hpp>

namespace pmbr {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

namespace {

// Rounds to 6 significant digits; the JSON writer then prints the shortest
// representation of the rounded value.
double rounded(double value) {
  return std::strtod(format_number(value).c_str(), nullptr);
}

ordered_json row_json(const SweepRow& row) {
  ordered_json j;
  j["config"] = row.config;
  j["family"] = row.family;
  j["param"] = rounded(row.param);
  if (row.trial >= 0) j["trial"] = row.trial;
  j["mean_calls"] = rounded(row.mean_calls);
  j["mean_pseudo_refs"] = rounded(row.mean_pseudo_refs);
  j["score"] = row.score ? ordered_json(rounded(*row.score)) : ordered_json(nullptr);
  j["accuracy"] = rounded(row.accuracy);
  j["mean_rr"] = rounded(row.mean_rr);
  return j;
}

void write_rows(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "config,family,param,trial,mean_calls,mean_pseudo_refs,score,"
         "accuracy,mean_rr\n";
  for (const SweepRow& r : rows) {
    out << r.config << ',' << r.family << ',' << format_number(r.param) << ','
        << (r.trial >= 0 ? std::to_string(r.trial) : std::string("all")) << ','
        << format_number(r.mean_calls) << ','
        << format_number(r.mean_pseudo_refs) << ','
        << (r.score ? format_number(*r.score) : std::string()) << ','
        << format_number(r.accuracy) << ',' << format_number(r.mean_rr)
        << '\n';
  }
}

}  // namespace

std::string decode_result_json(const Instance& instance, std::size_t trial,
                               const DecodeResult& result) {
  ordered_json j;
  j["id"] = instance.id;
  j["trial"] = trial;
  j["prediction"] = result.prediction_text;
  j["prediction_index"] = result.prediction;
  j["total_calls"] = result.total_calls;
  j["pseudo_refs_used"] = result.pseudo_refs_used;
  j["terminated_early"] = result.terminated_early;
  ordered_json steps = ordered_json::array();
  for (const StepTrace& s : result.steps) {
    steps.push_back({{"t", s.step},
                     {"refs", s.refs},
                     {"surviving", s.surviving},
                     {"new_calls", s.new_calls},
                     {"incumbent", s.incumbent}});
  }
  j["steps"] = std::move(steps);
  return j.dump();
}

void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  write_rows(out, report.rows);
}

void write_sweep_summary_csv(std::ostream& out, const SweepReport& report) {
  write_rows(out, report.aggregated);
}

std::string sweep_json(const SweepReport& report) {
  ordered_json j;
  j["instances"] = report.instances;
  j["trials"] = report.trials;
  j["n_boot"] = report.n_boot;
  j["seed"] = report.seed;
  j["schedule"] = report.schedule;
  j["utility"] = report.utility;
  if (!report.note.empty()) j["note"] = report.note;
  j["rows"] = ordered_json::array();
  for (const auto& r : report.rows) j["rows"].push_back(row_json(r));
  j["aggregated"] = ordered_json::array();
  for (const auto& r : report.aggregated) j["aggregated"].push_back(row_json(r));
  return j.dump(2) + "\n";
}

void write_false_prune_csv(std::ostream& out, const FalsePruneTable& table) {
  out << "alpha,size,rate\n";
  for (std::size_t a = 0; a < table.alphas.size(); ++a)
    for (std::size_t s = 0; s < table.sizes.size(); ++s)
      out << format_number(table.alphas[a]) << ',' << table.sizes[s] << ','
          << format_number(table.rates(static_cast<Eigen::Index>(a),
                                       static_cast<Eigen::Index>(s)))
          << '\n';
}

std::string false_prune_json(const FalsePruneTable& table) {
  ordered_json j;
  j["samples_per_cell"] = table.samples;
  j["cells"] = ordered_json::array();
  for (std::size_t a = 0; a < table.alphas.size(); ++a)
    for (std::size_t s = 0; s < table.sizes.size(); ++s)
      j["cells"].push_back(
          {{"alpha", rounded(table.alphas[a])},
           {"size", table.sizes[s]},
           {"rate", rounded(table.rates(static_cast<Eigen::Index>(a),
                                        static_cast<Eigen::Index>(s)))}});
  return j.dump(2) + "\n";
}

void write_survival_csv(std::ostream& out,
                        const std::vector<SurvivalPoint>& trace) {
  out << "step,refs,mean,q1,q3,runs\n";
  for (const auto& p : trace)
    out << p.step << ',' << p.refs << ',' << format_number(p.mean) << ','
        << format_number(p.q1) << ',' << format_number(p.q3) << ',' << p.runs
        << '\n';
}

std::string survival_json(const std::vector<SurvivalPoint>& trace) {
  ordered_json j = ordered_json::array();
  for (const auto& p : trace)
    j.push_back({{"step", p.step},
                 {"refs", p.refs},
                 {"mean", rounded(p.mean)},
                 {"q1", rounded(p.q1)},
                 {"q3", rounded(p.q3)},
                 {"runs", p.runs}});
  return j.dump(2) + "\n";
}

namespace {

struct SummaryRow {
  const char* name;
  std::optional<double> (*get)(const SweepRow&);
};

const SummaryRow kSummaryRows[] = {
    {"Score", [](const SweepRow& r) { return r.score; }},
    {"Accuracy", [](const SweepRow& r) { return std::optional(r.accuracy); }},
    {"RR", [](const SweepRow& r) { return std::optional(r.mean_rr); }},
    {"# Pseudo-refs",
     [](const SweepRow& r) { return std::optional(r.mean_pseudo_refs); }},
    {"# Utility calls",
     [](const SweepRow& r) { return std::optional(r.mean_calls); }},
};

}  // namespace

void write_summary_csv(std::ostream& out, const SummaryTable& table) {
  out << "metric";
  for (const auto& c : table.configs) out << ',' << c;
  out << '\n';
  for (const auto& row : kSummaryRows) {
    out << row.name;
    for (const auto& col : table.columns) {
      const auto v = row.get(col);
      out << ',' << (v ? format_number(*v) : std::string());
    }
    out << '\n';
  }
}

std::string summary_json(const SummaryTable& table) {
  ordered_json j;
  j["configs"] = table.configs;
  if (!table.note.empty()) j["note"] = table.note;
  ordered_json rows = ordered_json::object();
  for (const auto& row : kSummaryRows) {
    ordered_json values = ordered_json::array();
    for (const auto& col : table.columns) {
      const auto v = row.get(col);
      values.push_back(v ? ordered_json(rounded(*v)) : ordered_json(nullptr));
    }
    rows[row.name] = std::move(values);
  }
  j["rows"] = std::move(rows);
  return j.dump(2) + "\n";
}

std::string summary_text(const SummaryTable& table) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-16s", "");
  out += buf;
  for (const auto& c : table.configs) {
    std::snprintf(buf, sizeof buf, " %16s", c.c_str());
    out += buf;
  }
  out += '\n';
  for (const auto& row : kSummaryRows) {
    std::snprintf(buf, sizeof buf, "%-16s", row.name);
    out += buf;
    for (const auto& col : table.columns) {
      const auto v = row.get(col);
      std::snprintf(buf, sizeof buf, " %16s",
                    v ? format_number(*v).c_str() : "-");
      out += buf;
    }
    out += '\n';
  }
  if (!table.note.empty()) out += "(" + table.note + ")\n";
  return out;
}

}  // namespace pmbr
