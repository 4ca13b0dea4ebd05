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

#include "pmbr/chart.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <optional>

#include "pmbr/error.hpp"
#include "pmbr/report.hpp"

namespace pmbr {

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::optional<double> to_number(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    return std::nullopt;
  return v;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  std::string cols;
  for (const auto& h : header) cols += (cols.empty() ? "" : ", ") + h;
  throw ValidationError("unknown column \"" + std::string(name) +
                        "\"; available columns: " + cols);
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t start = 0;
  bool first = true;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      cells.resize(t.header.size());
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw ValidationError("CSV has no header");
  return t;
}

std::string render_svg_chart(const CsvTable& table, const ChartSpec& spec) {
  const std::size_t xc = table.column(spec.x);
  const std::size_t yc = table.column(spec.y);
  const std::size_t sc = table.column(spec.series);

  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::vector<std::string> order;
  for (const auto& row : table.rows) {
    const auto x = to_number(row[xc]);
    const auto y = to_number(row[yc]);
    if (!x || !y) continue;
    auto [it, inserted] = series.try_emplace(row[sc]);
    if (inserted) order.push_back(row[sc]);
    it->second.emplace_back(*x, *y);
  }
  if (series.empty())
    throw ValidationError("no plottable rows for " + spec.x + " vs " + spec.y);

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto& [name, pts] : series) {
    std::sort(pts.begin(), pts.end());
    for (const auto& [x, y] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) { xmin -= 0.5; xmax += 0.5; }
  if (ymax == ymin) { ymin -= 0.5; ymax += 0.5; }

  constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 55;
  const auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  const auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };
  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" "
                "height=\"%g\" viewBox=\"0 0 %g %g\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                W, H, W, H);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">", W / 2);
    svg += buf + escape(spec.title) + "</text>\n";
  }
  std::snprintf(buf, sizeof buf,
                "<g stroke=\"black\"><line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/>"
                "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\"/></g>\n",
                L, H - B, W - R, H - B, L, T, L, H - B);
  svg += buf;
  for (int k = 0; k <= 4; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 4.0;
    const double yv = ymin + (ymax - ymin) * k / 4.0;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.2f\" y=\"%g\" text-anchor=\"middle\">%s</text>\n",
                  px(xv), H - B + 18, format_number(xv).c_str());
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%g\" y=\"%.2f\" text-anchor=\"end\">%s</text>\n",
                  L - 6, py(yv) + 4, format_number(yv).c_str());
    svg += buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">",
                (L + W - R) / 2, H - 12);
  svg += buf + escape(spec.x) + "</text>\n";
  std::snprintf(buf, sizeof buf,
                "<text transform=\"translate(18 %g) rotate(-90)\" text-anchor=\"middle\">",
                (T + H - B) / 2);
  svg += buf + escape(spec.y) + "</text>\n";

  std::size_t color = 0;
  for (const auto& name : order) {
    const auto& pts = series[name];
    const char* c = kColors[color++ % std::size(kColors)];
    if (pts.size() >= 2) {
      svg += "<polyline fill=\"none\" stroke=\"";
      svg += c;
      svg += "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < pts.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "",
                      px(pts[i].first), py(pts[i].second));
        svg += buf;
      }
      svg += "\"/>\n";
    } else {
      std::snprintf(buf, sizeof buf,
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"%s\"/>\n",
                    px(pts[0].first), py(pts[0].second), c);
      svg += buf;
    }
    const double ly = T + 16.0 * static_cast<double>(color);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%g\" y=\"%g\" width=\"12\" height=\"4\" fill=\"%s\"/>"
                  "<text x=\"%g\" y=\"%g\">",
                  W - R + 12, ly - 4, c, W - R + 30, ly);
    svg += buf + escape(name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace pmbr
