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

#include <iosfwd>
#include <string>

#include "pmbr/eval.hpp"
#include "pmbr/mbr.hpp"

namespace pmbr {

// All report numbers are printed with 6 significant digits.
std::string format_number(double value);

std::string decode_result_json(const Instance& instance, std::size_t trial,
                               const DecodeResult& result);

void write_sweep_csv(std::ostream& out, const SweepReport& report);
void write_sweep_summary_csv(std::ostream& out, const SweepReport& report);
std::string sweep_json(const SweepReport& report);

void write_false_prune_csv(std::ostream& out, const FalsePruneTable& table);
std::string false_prune_json(const FalsePruneTable& table);

void write_survival_csv(std::ostream& out,
                        const std::vector<SurvivalPoint>& trace);
std::string survival_json(const std::vector<SurvivalPoint>& trace);

void write_summary_csv(std::ostream& out, const SummaryTable& table);
std::string summary_json(const SummaryTable& table);
// Fixed-width text rendering of the summary for terminals.
std::string summary_text(const SummaryTable& table);

}  // namespace pmbr
