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
#ifndef HTE_REPORT_HPP_
#define HTE_REPORT_HPP_

#include <span>
#include <string>
#include <vector>

#include "hte/policy.hpp"

namespace hte {

struct PolicyRow {
  std::string strategy;
  PolicyImpact impact;
};

enum class ReportFormat { kCsv, kTextTable };

// Policy table with the published layout: strategy, prevented (95% CI),
// total interventions, NNT. Counts are rounded to the nearest integer in the
// text table ("1,246 (1,110-1,381)"); the CSV carries full precision.
std::string policy_table_text(std::span<const PolicyRow> rows);
std::string policy_table_csv(std::span<const PolicyRow> rows);

// Dispatch on format; throws ArgumentError for an unknown format value.
std::string emit_report(std::span<const PolicyRow> rows, ReportFormat format);

// "1,246 (1,110-1,381)" from a point and optional interval.
std::string format_prevented_cell(const PolicyImpact& impact);

}  // namespace hte

#endif  // HTE_REPORT_HPP_
