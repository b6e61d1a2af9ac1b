/*
 * Copyright 2026 The hte Authors.
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
#include "hte/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "hte/error.hpp"
#include "hte/util.hpp"

namespace hte {

std::string format_prevented_cell(const PolicyImpact& impact) {
  std::string cell = group_thousands(std::llround(impact.prevented));
  if (impact.ci95) {
    cell += " (" + group_thousands(std::llround(impact.ci95->first)) + "-" +
            group_thousands(std::llround(impact.ci95->second)) + ")";
  }
  if (impact.net_harm) cell += " [net harm: raw sum " + format_double(impact.raw_sum) + "]";
  return cell;
}

std::string policy_table_text(std::span<const PolicyRow> rows) {
  const std::string col0 = "strategy";
  const std::string col1 = "prevented (95% CI)";
  const std::string col2 = "interventions";
  const std::string col3 = "NNT";

  std::vector<std::array<std::string, 4>> cells;
  for (const PolicyRow& row : rows) {
    std::array<std::string, 4> c;
    c[0] = row.strategy;
    c[1] = format_prevented_cell(row.impact);
    c[2] = group_thousands(static_cast<int64_t>(row.impact.n_treated));
    c[3] = row.impact.nnt ? group_thousands(*row.impact.nnt) : "undefined";
    cells.push_back(std::move(c));
  }

  std::array<size_t, 4> width = {col0.size(), col1.size(), col2.size(), col3.size()};
  for (const auto& c : cells) {
    for (size_t j = 0; j < 4; ++j) width[j] = std::max(width[j], c[j].size());
  }

  auto pad = [](const std::string& s, size_t w) {
    return s + std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  std::ostringstream out;
  out << pad(col0, width[0]) << "  " << pad(col1, width[1]) << "  " << pad(col2, width[2]) << "  "
      << col3 << '\n';
  for (const auto& c : cells) {
    out << pad(c[0], width[0]) << "  " << pad(c[1], width[1]) << "  " << pad(c[2], width[2]) << "  "
        << c[3] << '\n';
  }
  return out.str();
}

std::string policy_table_csv(std::span<const PolicyRow> rows) {
  std::ostringstream out;
  out << "strategy,prevented,ci_lo,ci_hi,interventions,nnt,raw_sum,net_harm\n";
  for (const PolicyRow& row : rows) {
    const PolicyImpact& im = row.impact;
    out << row.strategy << ',' << format_double(im.prevented) << ',';
    if (im.ci95) {
      out << format_double(im.ci95->first) << ',' << format_double(im.ci95->second);
    } else {
      out << ',';
    }
    out << ',' << im.n_treated << ',';
    if (im.nnt) out << *im.nnt;
    out << ',' << format_double(im.raw_sum) << ',' << (im.net_harm ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string emit_report(std::span<const PolicyRow> rows, ReportFormat format) {
  switch (format) {
    case ReportFormat::kCsv: return policy_table_csv(rows);
    case ReportFormat::kTextTable: return policy_table_text(rows);
  }
  throw ArgumentError("emit_report: unknown format");
}

}  // namespace hte
