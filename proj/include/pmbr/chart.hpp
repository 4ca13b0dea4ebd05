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

#include <string>
#include <string_view>
#include <vector>

namespace pmbr {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index; throws ValidationError listing the available columns.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

struct ChartSpec {
  std::string x = "mean_calls";
  std::string y = "accuracy";
  std::string series = "family";
  std::string title;
};

// Standalone SVG line chart, one polyline per series value (a lone point is
// drawn as a marker). Throws ValidationError when no plottable rows exist.
std::string render_svg_chart(const CsvTable& table, const ChartSpec& spec);

}  // namespace pmbr
