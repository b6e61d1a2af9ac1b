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
#include "hte/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hte/error.hpp"
#include "hte/util.hpp"

namespace hte {

OverlapReport overlap_report(std::span<const double> oob_e, const Cohort& cohort, double epsilon) {
  if (oob_e.size() != cohort.size()) {
    throw ArgumentError("overlap_report: estimates do not cover the cohort");
  }
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw ArgumentError("overlap_report: epsilon must be in (0, 0.5)");
  }
  OverlapReport report;
  report.epsilon = epsilon;
  std::array<size_t, 4> n{}, below{}, above{};
  size_t total_below = 0, total_above = 0;
  for (size_t i = 0; i < cohort.size(); ++i) {
    const size_t g = static_cast<size_t>(subgroup_of(cohort.period[i], cohort.risk[i]));
    ++n[g];
    if (oob_e[i] < epsilon) {
      ++below[g];
      ++total_below;
    } else if (oob_e[i] > 1.0 - epsilon) {
      ++above[g];
      ++total_above;
    }
  }
  const double total = cohort.size() > 0 ? static_cast<double>(cohort.size()) : 1.0;
  report.fraction_below = static_cast<double>(total_below) / total;
  report.fraction_above = static_cast<double>(total_above) / total;
  for (size_t g = 0; g < 4; ++g) {
    report.by_subgroup[g].group = static_cast<Subgroup>(g);
    report.by_subgroup[g].n = n[g];
    const double denom = n[g] > 0 ? static_cast<double>(n[g]) : 1.0;
    report.by_subgroup[g].fraction_below = static_cast<double>(below[g]) / denom;
    report.by_subgroup[g].fraction_above = static_cast<double>(above[g]) / denom;
  }
  return report;
}

std::vector<VentileSummary> cate_by_ventile(std::span<const double> taus,
                                            std::span<const int32_t> ventiles) {
  if (taus.size() != ventiles.size()) {
    throw ArgumentError("cate_by_ventile: taus do not cover the cohort");
  }
  std::array<std::vector<double>, 21> buckets;
  for (size_t i = 0; i < taus.size(); ++i) {
    const int32_t v = ventiles[i];
    if (v < 1 || v > 20) throw ArgumentError("cate_by_ventile: ventile out of range");
    buckets[static_cast<size_t>(v)].push_back(taus[i]);
  }
  std::vector<VentileSummary> rows;
  for (int32_t v = 1; v <= 20; ++v) {
    auto& values = buckets[static_cast<size_t>(v)];
    if (values.empty()) continue;
    VentileSummary row;
    row.ventile = v;
    row.n = values.size();
    row.mean = mean_of(values);
    row.sd = std::sqrt(sample_variance(values));
    std::sort(values.begin(), values.end());
    row.q05 = quantile_sorted(values, 0.05);
    row.q25 = quantile_sorted(values, 0.25);
    row.q50 = quantile_sorted(values, 0.50);
    row.q75 = quantile_sorted(values, 0.75);
    row.q95 = quantile_sorted(values, 0.95);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SurfaceGrid> cate_surface(const CausalForestModel& model, const Cohort& cohort,
                                      const SurfaceSpec& spec) {
  if (cohort.schema.digest() != model.schema_digest) {
    throw ArgumentError("cate_surface: schema digest mismatch");
  }
  if (spec.nx < 1 || spec.ny < 1) throw ArgumentError("cate_surface: grid must be at least 1x1");

  auto numeric_column = [&](const std::string& name) -> size_t {
    const FeatureSpec* f = cohort.schema.find(name);
    if (f == nullptr || f->kind != FeatureKind::kNumeric) {
      throw ArgumentError("cate_surface: feature " + name + " is not numeric");
    }
    return *cohort.model_column(name);
  };
  const size_t col_x = numeric_column(spec.feature_x);
  const size_t col_y = numeric_column(spec.feature_y);
  const size_t col_age = numeric_column("AGE");

  auto grid_values = [&](size_t col, double lo_pct, double hi_pct, int count) {
    std::vector<double> sorted = cohort.model_matrix[col];
    std::sort(sorted.begin(), sorted.end());
    const double lo = quantile_sorted(sorted, lo_pct);
    const double hi = quantile_sorted(sorted, hi_pct);
    std::vector<double> values(static_cast<size_t>(count));
    if (count == 1) {
      values[0] = (lo + hi) / 2.0;
    } else {
      for (int i = 0; i < count; ++i) {
        values[static_cast<size_t>(i)] = lo + (hi - lo) * double(i) / double(count - 1);
      }
    }
    return values;
  };
  const std::vector<double> xs = grid_values(col_x, spec.x_lo_pct, spec.x_hi_pct, spec.nx);
  const std::vector<double> ys = grid_values(col_y, spec.y_lo_pct, spec.y_hi_pct, spec.ny);

  std::vector<SurfaceGrid> grids;
  for (double age : spec.age_overrides) {
    SurfaceGrid grid;
    grid.feature_x = spec.feature_x;
    grid.feature_y = spec.feature_y;
    grid.profile_age = age;
    grid.x_values = xs;
    grid.y_values = ys;

    std::vector<std::vector<double>> rows;
    rows.reserve(xs.size() * ys.size());
    for (double yv : ys) {
      for (double xv : xs) {
        std::vector<double> row = model.profile;
        row[col_age] = age;
        row[col_x] = xv;
        row[col_y] = yv;
        rows.push_back(std::move(row));
      }
    }
    grid.tau = predict_rows(model, rows);
    grids.push_back(std::move(grid));
  }
  return grids;
}

std::vector<LosVentileRow> los_by_ventile(const Cohort& cohort) {
  std::array<std::vector<double>, 21> los;
  size_t total_readmissions = 0;
  for (size_t i = 0; i < cohort.size(); ++i) {
    if (cohort.y[i] != 1) continue;
    ++total_readmissions;
    los[static_cast<size_t>(cohort.ventile[i])].push_back(cohort.payoff[i]);
  }
  std::vector<LosVentileRow> rows;
  for (int32_t v = 1; v <= 20; ++v) {
    const auto& values = los[static_cast<size_t>(v)];
    if (values.empty()) continue;
    LosVentileRow row;
    row.ventile = v;
    row.n_readmitted = values.size();
    row.mean_los = mean_of(values);
    row.readmission_share = static_cast<double>(values.size()) / double(total_readmissions);
    rows.push_back(row);
  }
  return rows;
}

std::string overlap_csv(const OverlapReport& report) {
  std::ostringstream out;
  out << "scope,n,fraction_below,fraction_above,epsilon\n";
  size_t total_n = 0;
  for (const auto& row : report.by_subgroup) total_n += row.n;
  out << "all," << total_n << ',' << format_double(report.fraction_below) << ','
      << format_double(report.fraction_above) << ',' << format_double(report.epsilon) << '\n';
  for (const auto& row : report.by_subgroup) {
    out << '"' << subgroup_name(row.group) << "\"," << row.n << ','
        << format_double(row.fraction_below) << ',' << format_double(row.fraction_above) << ','
        << format_double(report.epsilon) << '\n';
  }
  return out.str();
}

std::string cate_by_ventile_csv(std::span<const VentileSummary> rows) {
  std::ostringstream out;
  out << "ventile,n,mean,sd,q05,q25,q50,q75,q95\n";
  for (const auto& r : rows) {
    out << r.ventile << ',' << r.n << ',' << format_double(r.mean) << ',' << format_double(r.sd)
        << ',' << format_double(r.q05) << ',' << format_double(r.q25) << ','
        << format_double(r.q50) << ',' << format_double(r.q75) << ',' << format_double(r.q95)
        << '\n';
  }
  return out.str();
}

std::string surface_csv(std::span<const SurfaceGrid> grids) {
  std::ostringstream out;
  out << "age,feature_x,x,feature_y,y,tau\n";
  for (const auto& g : grids) {
    for (size_t iy = 0; iy < g.y_values.size(); ++iy) {
      for (size_t ix = 0; ix < g.x_values.size(); ++ix) {
        out << format_double(g.profile_age) << ',' << g.feature_x << ','
            << format_double(g.x_values[ix]) << ',' << g.feature_y << ','
            << format_double(g.y_values[iy]) << ','
            << format_double(g.tau[iy * g.x_values.size() + ix]) << '\n';
      }
    }
  }
  return out.str();
}

std::string los_by_ventile_csv(std::span<const LosVentileRow> rows) {
  std::ostringstream out;
  out << "ventile,n_readmitted,mean_los,readmission_share\n";
  for (const auto& r : rows) {
    out << r.ventile << ',' << r.n_readmitted << ',' << format_double(r.mean_los) << ','
        << format_double(r.readmission_share) << '\n';
  }
  return out.str();
}

}  // namespace hte
