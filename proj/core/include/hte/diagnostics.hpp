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
#ifndef HTE_DIAGNOSTICS_HPP_
#define HTE_DIAGNOSTICS_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hte/cohort.hpp"
#include "hte/forest.hpp"

namespace hte {

// Share of units whose assignment-model estimate falls outside [eps, 1-eps],
// overall and per identification subgroup.
struct OverlapReport {
  double epsilon = 0.05;
  double fraction_below = 0.0;
  double fraction_above = 0.0;
  struct SubgroupRow {
    Subgroup group;
    size_t n = 0;
    double fraction_below = 0.0;
    double fraction_above = 0.0;
  };
  std::array<SubgroupRow, 4> by_subgroup;

  double violation_fraction() const { return fraction_below + fraction_above; }
};

OverlapReport overlap_report(std::span<const double> oob_e, const Cohort& cohort, double epsilon);

struct VentileSummary {
  int32_t ventile = 0;
  size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
};

// Summaries of tau over non-empty ventiles (empty ventiles are absent).
std::vector<VentileSummary> cate_by_ventile(std::span<const double> taus,
                                            std::span<const int32_t> ventiles);

struct SurfaceGrid {
  std::string feature_x;
  std::string feature_y;
  double profile_age = 0.0;  // the AGE override baked into the profile
  std::vector<double> x_values;
  std::vector<double> y_values;
  std::vector<double> tau;  // row-major: tau[iy * x_values.size() + ix]
};

struct SurfaceSpec {
  std::string feature_x = "LAPS2DC";
  std::string feature_y = "COPS2";
  int nx = 20;
  int ny = 20;
  double x_lo_pct = 0.10, x_hi_pct = 0.90;  // grid bounds as cohort percentiles
  double y_lo_pct = 0.00, y_hi_pct = 0.95;
  std::vector<double> age_overrides = {50.0, 80.0};
};

// CATE surface on a grid of two numeric features, all other features pinned
// at the model's stored profile (continuous at median, categorical at mode);
// one grid per AGE override.
std::vector<SurfaceGrid> cate_surface(const CausalForestModel& model, const Cohort& cohort,
                                      const SurfaceSpec& spec);

struct LosVentileRow {
  int32_t ventile = 0;
  size_t n_readmitted = 0;
  double mean_los = 0.0;          // mean payoff among readmitted units
  double readmission_share = 0.0; // share of all readmissions in this ventile
};

// Mean readmission LOS and readmission share per ventile; ventiles without
// readmissions are absent.
std::vector<LosVentileRow> los_by_ventile(const Cohort& cohort);

// Tidy CSV renderings (one row per ventile / grid point).
std::string overlap_csv(const OverlapReport& report);
std::string cate_by_ventile_csv(std::span<const VentileSummary> rows);
std::string surface_csv(std::span<const SurfaceGrid> grids);
std::string los_by_ventile_csv(std::span<const LosVentileRow> rows);

}  // namespace hte

#endif  // HTE_DIAGNOSTICS_HPP_
