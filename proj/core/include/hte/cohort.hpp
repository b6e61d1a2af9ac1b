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
#ifndef HTE_COHORT_HPP_
#define HTE_COHORT_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hte {

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::vector<std::string> levels;  // categorical only; fixed level set

  static FeatureSpec numeric(std::string name) { return {std::move(name), FeatureKind::kNumeric, {}}; }
  static FeatureSpec categorical(std::string name, std::vector<std::string> levels) {
    return {std::move(name), FeatureKind::kCategorical, std::move(levels)};
  }
};

// Named feature list. Categorical features are one-hot expanded into the
// model matrix; the expanded column for level L of feature F is named "F=L".
struct FeatureSchema {
  std::vector<FeatureSpec> features;

  const FeatureSpec* find(const std::string& name) const;
  size_t expanded_width() const;
  std::vector<std::string> expanded_names() const;
  uint64_t digest() const;

  // The full hospitalization layout: AGE, MALE, DCO_4, HOSP_PRIOR7_CT,
  // HOSP_PRIOR8_30_CT, LOS_30, MEDICARE, DISCHDISP, LAPS2, LAPS2DC, COPS2,
  // HCUPSGDC (25 diagnosis supergroups).
  static FeatureSchema production_default();
};

enum class Period : uint8_t { kPre = 0, kPost = 1 };

enum class Provenance : uint8_t { kObservationalThreshold = 0, kSynthetic = 1, kExternal = 2 };

// One hospitalization cohort, columnar. Immutable after load/generation by
// convention: every estimator takes `const Cohort&` and may read it from many
// threads.
struct Cohort {
  FeatureSchema schema;
  Provenance provenance = Provenance::kExternal;

  // Raw per-feature storage, schema order: numeric values, or level codes
  // for categorical features.
  std::vector<std::vector<double>> numeric_raw;   // empty vector for categorical slots
  std::vector<std::vector<int32_t>> level_codes;  // empty vector for numeric slots

  std::vector<int64_t> unit_ids;  // sequential at load; unique
  std::vector<uint8_t> w;
  std::vector<uint8_t> y;
  std::vector<double> risk;
  std::vector<Period> period;
  std::vector<int32_t> cluster;
  std::vector<double> payoff;
  std::vector<int32_t> year;  // optional; empty when the file has no YEAR column
  std::vector<int32_t> ventile;  // 1..20, assigned from risk

  // One-hot expanded model matrix, column-major; built by finalize().
  std::vector<std::vector<double>> model_matrix;
  std::vector<std::string> model_column_names;

  size_t size() const { return w.size(); }
  size_t feature_count() const { return model_matrix.size(); }
  bool has_year() const { return !year.empty(); }
  int32_t cluster_count() const;

  // Builds the model matrix and ventiles, validates all invariants.
  // Throws ValueError / SchemaError on violations.
  void finalize();

  double model_value(size_t unit, size_t column) const { return model_matrix[column][unit]; }
  std::optional<size_t> model_column(const std::string& expanded_name) const;
};

// Ventile of a risk value: floor(20 * risk) + 1, clamped to 20 at risk = 1.
// V1 = [0, 0.05), V20 = [0.95, 1].
int32_t ventile_of(double risk);
std::vector<int32_t> assign_ventiles(std::span<const double> risk);

// Loads a cohort CSV. The header must contain every schema column plus
// W, Y, RISK, PERIOD, CLUSTER, PAYOFF (YEAR is picked up when present).
// Column order in the file is free; export is canonical.
Cohort load_cohort(const std::string& path, const FeatureSchema& schema,
                   Provenance provenance = Provenance::kExternal);

// Canonical CSV export; loading and re-exporting a file produced here is
// byte-identical.
void export_cohort(const Cohort& cohort, const std::string& path);

// New cohort holding the given units (ascending indices); unit_ids are
// preserved from the parent. Used for temporal train/holdout splits.
Cohort subset_cohort(const Cohort& cohort, std::span<const uint32_t> keep);

// The four identification subgroups (period x risk band at 25%).
enum class Subgroup : uint8_t { kPreLow = 0, kPreHigh = 1, kPostLow = 2, kPostHigh = 3 };
constexpr double kRiskBandThreshold = 0.25;

const char* subgroup_name(Subgroup g);
Subgroup subgroup_of(Period period, double risk);

// Exhaustive, pairwise-disjoint partition of unit indices.
std::array<std::vector<uint32_t>, 4> partition_subgroups(const Cohort& cohort);

// Standardized mean difference of a model-matrix column between two unit
// groups: (meanA - meanB) / sqrt((varA + varB) / 2). Returns 0 when both
// variances vanish and the means agree, +/-inf when they differ.
double smd(const Cohort& cohort, const std::string& expanded_column,
           std::span<const uint32_t> group_a, std::span<const uint32_t> group_b);

}  // namespace hte

#endif  // HTE_COHORT_HPP_
