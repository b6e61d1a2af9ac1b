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
#include "hte/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "hte/error.hpp"
#include "hte/util.hpp"

namespace hte {

namespace {

const char* const kMetaColumns[] = {"W", "Y", "RISK", "PERIOD", "CLUSTER", "PAYOFF"};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string row_tag(size_t data_row) { return "row " + std::to_string(data_row); }

}  // namespace

const FeatureSpec* FeatureSchema::find(const std::string& name) const {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

size_t FeatureSchema::expanded_width() const {
  size_t w = 0;
  for (const auto& f : features) {
    w += f.kind == FeatureKind::kNumeric ? 1 : f.levels.size();
  }
  return w;
}

std::vector<std::string> FeatureSchema::expanded_names() const {
  std::vector<std::string> names;
  names.reserve(expanded_width());
  for (const auto& f : features) {
    if (f.kind == FeatureKind::kNumeric) {
      names.push_back(f.name);
    } else {
      for (const auto& level : f.levels) names.push_back(f.name + "=" + level);
    }
  }
  return names;
}

uint64_t FeatureSchema::digest() const {
  Fnv64 h;
  h.add_u64(features.size());
  for (const auto& f : features) {
    h.add_string(f.name);
    h.add_u64(f.kind == FeatureKind::kNumeric ? 0 : 1);
    h.add_u64(f.levels.size());
    for (const auto& level : f.levels) h.add_string(level);
  }
  return h.digest();
}

FeatureSchema FeatureSchema::production_default() {
  FeatureSchema s;
  s.features.push_back(FeatureSpec::numeric("AGE"));
  s.features.push_back(FeatureSpec::numeric("MALE"));
  s.features.push_back(FeatureSpec::categorical("DCO_4", {"Full", "Partial", "DNR", "Comfort"}));
  s.features.push_back(FeatureSpec::numeric("HOSP_PRIOR7_CT"));
  s.features.push_back(FeatureSpec::numeric("HOSP_PRIOR8_30_CT"));
  s.features.push_back(FeatureSpec::numeric("LOS_30"));
  s.features.push_back(FeatureSpec::numeric("MEDICARE"));
  s.features.push_back(FeatureSpec::categorical("DISCHDISP", {"Home", "HomeHealth", "SNF"}));
  s.features.push_back(FeatureSpec::numeric("LAPS2"));
  s.features.push_back(FeatureSpec::numeric("LAPS2DC"));
  s.features.push_back(FeatureSpec::numeric("COPS2"));
  s.features.push_back(FeatureSpec::categorical(
      "HCUPSGDC",
      {"Acute CVD", "AMI", "CAP", "Cardiac arrest", "CHF", "Coma; stupor; and brain damage",
       "Endocrine & related conditions", "Fluid and electrolyte disorders", "GI bleed",
       "Hematologic conditions", "Highly malignant cancer", "Hip fracture",
       "Ill-defined signs and symptoms", "Less severe cancer", "Liver and pancreatic disorders",
       "Miscellaneous GI conditions", "Miscellaneous neurological conditions",
       "Miscellaneous surgical conditions", "Other cardiac conditions",
       "Other infectious conditions", "Renal failure (all)", "Residual codes", "Sepsis", "Trauma",
       "UTI"}));
  return s;
}

int32_t ventile_of(double risk) {
  if (!(risk >= 0.0 && risk <= 1.0)) {
    throw ValueError("risk outside [0,1]: " + format_double(risk));
  }
  int32_t v = static_cast<int32_t>(std::floor(risk * 20.0)) + 1;
  return std::min<int32_t>(v, 20);
}

std::vector<int32_t> assign_ventiles(std::span<const double> risk) {
  std::vector<int32_t> out(risk.size());
  for (size_t i = 0; i < risk.size(); ++i) out[i] = ventile_of(risk[i]);
  return out;
}

int32_t Cohort::cluster_count() const {
  int32_t max_id = 0;
  for (int32_t c : cluster) max_id = std::max(max_id, c);
  return max_id;
}

std::optional<size_t> Cohort::model_column(const std::string& expanded_name) const {
  for (size_t j = 0; j < model_column_names.size(); ++j) {
    if (model_column_names[j] == expanded_name) return j;
  }
  return std::nullopt;
}

void Cohort::finalize() {
  const size_t n = w.size();
  if (y.size() != n || risk.size() != n || period.size() != n || cluster.size() != n ||
      payoff.size() != n) {
    throw ValueError("cohort columns have inconsistent lengths");
  }
  if (!year.empty() && year.size() != n) {
    throw ValueError("YEAR column has inconsistent length");
  }
  if (unit_ids.empty()) {
    unit_ids.resize(n);
    for (size_t i = 0; i < n; ++i) unit_ids[i] = static_cast<int64_t>(i);
  } else if (unit_ids.size() != n) {
    throw ValueError("unit id column has inconsistent length");
  }

  for (size_t i = 0; i < n; ++i) {
    if (w[i] > 1) throw ValueError("W outside {0,1} at unit " + std::to_string(i));
    if (y[i] > 1) throw ValueError("Y outside {0,1} at unit " + std::to_string(i));
    if (!(risk[i] >= 0.0 && risk[i] <= 1.0)) {
      throw ValueError("RISK outside [0,1] at unit " + std::to_string(i));
    }
    if (!(payoff[i] >= 0.0)) {
      throw ValueError("PAYOFF negative at unit " + std::to_string(i));
    }
    if (cluster[i] < 1) throw ValueError("CLUSTER below 1 at unit " + std::to_string(i));
    if (provenance == Provenance::kObservationalThreshold && w[i] == 1) {
      if (period[i] != Period::kPost || risk[i] < kRiskBandThreshold) {
        throw ValueError("treated unit violates the assignment rule (post & risk >= 0.25) at unit " +
                         std::to_string(i));
      }
    }
  }

  ventile = assign_ventiles(risk);

  // One-hot expansion, schema order.
  model_matrix.clear();
  model_column_names = schema.expanded_names();
  model_matrix.reserve(model_column_names.size());
  if (numeric_raw.size() != schema.features.size() || level_codes.size() != schema.features.size()) {
    throw ValueError("raw feature storage does not match the schema");
  }
  for (size_t f = 0; f < schema.features.size(); ++f) {
    const auto& spec = schema.features[f];
    if (spec.kind == FeatureKind::kNumeric) {
      if (numeric_raw[f].size() != n) {
        throw ValueError("numeric column " + spec.name + " has inconsistent length");
      }
      model_matrix.push_back(numeric_raw[f]);
    } else {
      if (level_codes[f].size() != n) {
        throw ValueError("categorical column " + spec.name + " has inconsistent length");
      }
      const size_t base = model_matrix.size();
      for (size_t l = 0; l < spec.levels.size(); ++l) {
        model_matrix.emplace_back(n, 0.0);
        (void)l;
      }
      for (size_t i = 0; i < n; ++i) {
        const int32_t code = level_codes[f][i];
        if (code < 0 || static_cast<size_t>(code) >= spec.levels.size()) {
          throw ValueError("level code out of range for column " + spec.name + " at unit " +
                           std::to_string(i));
        }
        model_matrix[base + static_cast<size_t>(code)][i] = 1.0;
      }
    }
  }
}

Cohort load_cohort(const std::string& path, const FeatureSchema& schema, Provenance provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("cannot open cohort file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line)) throw SchemaError("empty cohort file: " + path);
  const std::vector<std::string> header = split_csv_line(header_line);

  std::unordered_map<std::string, size_t> col_index;
  for (size_t j = 0; j < header.size(); ++j) col_index.emplace(header[j], j);

  auto require_column = [&](const std::string& name) -> size_t {
    auto it = col_index.find(name);
    if (it == col_index.end()) throw SchemaError("missing column " + name);
    return it->second;
  };

  std::vector<size_t> feature_cols;
  feature_cols.reserve(schema.features.size());
  for (const auto& f : schema.features) feature_cols.push_back(require_column(f.name));
  const size_t w_col = require_column("W");
  const size_t y_col = require_column("Y");
  const size_t risk_col = require_column("RISK");
  const size_t period_col = require_column("PERIOD");
  const size_t cluster_col = require_column("CLUSTER");
  const size_t payoff_col = require_column("PAYOFF");
  std::optional<size_t> year_col;
  if (auto it = col_index.find("YEAR"); it != col_index.end()) year_col = it->second;

  Cohort cohort;
  cohort.schema = schema;
  cohort.provenance = provenance;
  cohort.numeric_raw.resize(schema.features.size());
  cohort.level_codes.resize(schema.features.size());

  // Per-feature level lookup.
  std::vector<std::unordered_map<std::string, int32_t>> level_lookup(schema.features.size());
  for (size_t f = 0; f < schema.features.size(); ++f) {
    const auto& spec = schema.features[f];
    for (size_t l = 0; l < spec.levels.size(); ++l) {
      level_lookup[f].emplace(spec.levels[l], static_cast<int32_t>(l));
    }
  }

  auto parse_numeric_cell = [&](const std::string& cell, const std::string& column,
                                size_t data_row) -> double {
    double v;
    if (!parse_double(cell, &v) || !std::isfinite(v)) {
      throw ValueError("cannot parse numeric value '" + cell + "' for column " + column + " at " +
                       row_tag(data_row));
    }
    return v;
  };

  std::string line;
  size_t data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++data_row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValueError("wrong cell count (" + std::to_string(cells.size()) + " vs " +
                       std::to_string(header.size()) + " columns) at " + row_tag(data_row));
    }

    for (size_t f = 0; f < schema.features.size(); ++f) {
      const auto& spec = schema.features[f];
      const std::string& cell = cells[feature_cols[f]];
      if (cell.empty()) {
        throw ValueError("missing value for column " + spec.name + " at " + row_tag(data_row));
      }
      if (spec.kind == FeatureKind::kNumeric) {
        cohort.numeric_raw[f].push_back(parse_numeric_cell(cell, spec.name, data_row));
      } else {
        auto it = level_lookup[f].find(cell);
        if (it == level_lookup[f].end()) {
          throw ValueError("unseen level '" + cell + "' for column " + spec.name + " at " +
                           row_tag(data_row));
        }
        cohort.level_codes[f].push_back(it->second);
      }
    }

    auto parse_binary = [&](size_t col, const std::string& name) -> uint8_t {
      const std::string& cell = cells[col];
      if (cell == "0") return 0;
      if (cell == "1") return 1;
      throw ValueError(name + " value '" + cell + "' outside {0,1} at " + row_tag(data_row));
    };
    cohort.w.push_back(parse_binary(w_col, "W"));
    cohort.y.push_back(parse_binary(y_col, "Y"));

    const double risk = parse_numeric_cell(cells[risk_col], "RISK", data_row);
    if (!(risk >= 0.0 && risk <= 1.0)) {
      throw ValueError("RISK value '" + cells[risk_col] + "' outside [0,1] at " + row_tag(data_row));
    }
    cohort.risk.push_back(risk);

    const std::string& period_cell = cells[period_col];
    if (period_cell == "pre") {
      cohort.period.push_back(Period::kPre);
    } else if (period_cell == "post") {
      cohort.period.push_back(Period::kPost);
    } else {
      throw ValueError("PERIOD value '" + period_cell + "' not in {pre,post} at " + row_tag(data_row));
    }

    int64_t cl;
    if (!parse_int64(cells[cluster_col], &cl) || cl < 1) {
      throw ValueError("CLUSTER value '" + cells[cluster_col] + "' invalid at " + row_tag(data_row));
    }
    cohort.cluster.push_back(static_cast<int32_t>(cl));

    const double payoff = parse_numeric_cell(cells[payoff_col], "PAYOFF", data_row);
    if (!(payoff >= 0.0)) {
      throw ValueError("PAYOFF value '" + cells[payoff_col] + "' negative at " + row_tag(data_row));
    }
    cohort.payoff.push_back(payoff);

    if (year_col) {
      int64_t yr;
      if (!parse_int64(cells[*year_col], &yr)) {
        throw ValueError("YEAR value '" + cells[*year_col] + "' invalid at " + row_tag(data_row));
      }
      cohort.year.push_back(static_cast<int32_t>(yr));
    }

    if (provenance == Provenance::kObservationalThreshold && cohort.w.back() == 1) {
      if (cohort.period.back() != Period::kPost) {
        throw ValueError("treated unit in pre period at " + row_tag(data_row));
      }
      if (risk < kRiskBandThreshold) {
        throw ValueError("treated unit with risk below 0.25 at " + row_tag(data_row));
      }
    }
  }

  cohort.finalize();
  return cohort;
}

void export_cohort(const Cohort& cohort, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValueError("cannot open file for writing: " + path);

  for (const auto& f : cohort.schema.features) out << f.name << ',';
  out << "W,Y,RISK,PERIOD,CLUSTER,PAYOFF";
  if (cohort.has_year()) out << ",YEAR";
  out << '\n';

  const size_t n = cohort.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t f = 0; f < cohort.schema.features.size(); ++f) {
      const auto& spec = cohort.schema.features[f];
      if (spec.kind == FeatureKind::kNumeric) {
        out << format_double(cohort.numeric_raw[f][i]);
      } else {
        out << spec.levels[static_cast<size_t>(cohort.level_codes[f][i])];
      }
      out << ',';
    }
    out << int(cohort.w[i]) << ',' << int(cohort.y[i]) << ',' << format_double(cohort.risk[i])
        << ',' << (cohort.period[i] == Period::kPre ? "pre" : "post") << ',' << cohort.cluster[i]
        << ',' << format_double(cohort.payoff[i]);
    if (cohort.has_year()) out << ',' << cohort.year[i];
    out << '\n';
  }
  if (!out) throw ValueError("write failed: " + path);
}

Cohort subset_cohort(const Cohort& cohort, std::span<const uint32_t> keep) {
  for (size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] >= cohort.size()) throw ArgumentError("subset_cohort: unit out of range");
    if (k > 0 && keep[k] <= keep[k - 1]) {
      throw ArgumentError("subset_cohort: indices must be strictly ascending");
    }
  }
  Cohort out;
  out.schema = cohort.schema;
  out.provenance = cohort.provenance;
  out.numeric_raw.resize(cohort.schema.features.size());
  out.level_codes.resize(cohort.schema.features.size());
  for (size_t f = 0; f < cohort.schema.features.size(); ++f) {
    if (cohort.schema.features[f].kind == FeatureKind::kNumeric) {
      out.numeric_raw[f].reserve(keep.size());
      for (uint32_t i : keep) out.numeric_raw[f].push_back(cohort.numeric_raw[f][i]);
    } else {
      out.level_codes[f].reserve(keep.size());
      for (uint32_t i : keep) out.level_codes[f].push_back(cohort.level_codes[f][i]);
    }
  }
  auto copy_field = [&](const auto& src, auto& dst) {
    dst.reserve(keep.size());
    for (uint32_t i : keep) dst.push_back(src[i]);
  };
  copy_field(cohort.unit_ids, out.unit_ids);
  copy_field(cohort.w, out.w);
  copy_field(cohort.y, out.y);
  copy_field(cohort.risk, out.risk);
  copy_field(cohort.period, out.period);
  copy_field(cohort.cluster, out.cluster);
  copy_field(cohort.payoff, out.payoff);
  if (cohort.has_year()) copy_field(cohort.year, out.year);
  out.finalize();
  return out;
}

const char* subgroup_name(Subgroup g) {
  switch (g) {
    case Subgroup::kPreLow: return "pre,<25";
    case Subgroup::kPreHigh: return "pre,>=25";
    case Subgroup::kPostLow: return "post,<25";
    case Subgroup::kPostHigh: return "post,>=25";
  }
  return "?";
}

Subgroup subgroup_of(Period period, double risk) {
  const bool high = risk >= kRiskBandThreshold;
  if (period == Period::kPre) return high ? Subgroup::kPreHigh : Subgroup::kPreLow;
  return high ? Subgroup::kPostHigh : Subgroup::kPostLow;
}

std::array<std::vector<uint32_t>, 4> partition_subgroups(const Cohort& cohort) {
  std::array<std::vector<uint32_t>, 4> groups;
  for (size_t i = 0; i < cohort.size(); ++i) {
    const Subgroup g = subgroup_of(cohort.period[i], cohort.risk[i]);
    groups[static_cast<size_t>(g)].push_back(static_cast<uint32_t>(i));
  }
  return groups;
}

double smd(const Cohort& cohort, const std::string& expanded_column,
           std::span<const uint32_t> group_a, std::span<const uint32_t> group_b) {
  if (group_a.empty() || group_b.empty()) {
    throw ArgumentError("smd: empty group");
  }
  const auto col = cohort.model_column(expanded_column);
  if (!col) throw ArgumentError("smd: unknown column " + expanded_column);
  const std::vector<double>& values = cohort.model_matrix[*col];

  auto moments = [&](std::span<const uint32_t> ids) {
    double mean = 0.0, m2 = 0.0;
    size_t k = 0;
    for (uint32_t i : ids) {
      ++k;
      const double v = values[i];
      const double d = v - mean;
      mean += d / static_cast<double>(k);
      m2 += d * (v - mean);
    }
    const double var = k >= 2 ? m2 / static_cast<double>(k - 1) : 0.0;
    return std::pair<double, double>(mean, var);
  };

  const auto [mean_a, var_a] = moments(group_a);
  const auto [mean_b, var_b] = moments(group_b);
  const double pooled = (var_a + var_b) / 2.0;
  const double diff = mean_a - mean_b;
  if (pooled == 0.0) {
    if (diff == 0.0) return 0.0;
    return diff > 0 ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
  }
  return diff / std::sqrt(pooled);
}

}  // namespace hte
