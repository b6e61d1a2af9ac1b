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
#ifndef HTE_FOREST_HPP_
#define HTE_FOREST_HPP_

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hte/cohort.hpp"

namespace hte {

// Column-major feature matrix (also the cohort's model_matrix layout).
using ColumnMatrix = std::vector<std::vector<double>>;

struct ForestConfig {
  uint32_t n_trees = 2000;         // the study-scale default is 8000
  double subsample_fraction = 0.5;
  double honesty_fraction = 0.5;   // share of the subsample used for structure
  uint32_t mtry = 0;               // 0 resolves to min(ceil(sqrt(p)) + 20, p)
  uint32_t min_leaf_treated = 5;   // regression trees read this as their min leaf
  uint32_t min_leaf_control = 5;
  uint32_t group_size = 2;         // trees per half-sample group (variance)
  uint64_t seed = 42;
  bool cluster_aware = true;
  bool center = true;              // residualize on OOB nuisance fits

  void validate() const;  // throws ConfigError
  uint32_t resolve_mtry(size_t p) const;
};

struct TreeNode {
  int32_t feature = -1;  // -1: leaf
  double threshold = 0.0;  // x[feature] <= threshold routes left
  int32_t left = -1;
  int32_t right = -1;
  int32_t parent = -1;
  double value = std::numeric_limits<double>::quiet_NaN();  // leaves only
  // Node id whose estimation sample produced `value` (self, or the nearest
  // ancestor meeting the per-arm minimums). Leaves only.
  int32_t source = -1;
  // Estimation-half units routed through this node.
  uint32_t est_treated = 0;
  uint32_t est_control = 0;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;          // nodes[0] is the root
  std::vector<uint64_t> in_subsample;   // bitset over the training units
  bool degenerate = false;              // no node satisfied the estimation minimums

  bool contains(size_t unit) const {
    return (in_subsample[unit >> 6] >> (unit & 63)) & 1;
  }
  // Leaf reached by unit `i` of a column-major matrix / by a dense row.
  size_t find_leaf(const ColumnMatrix& x, size_t i) const;
  size_t find_leaf_row(std::span<const double> row) const;
};

// Subsample and honesty split of one tree. Derived from
// (config.seed, tree index, n, cluster layout) only - in particular it does
// not depend on outcomes, so refits under outcome permutations reuse the
// same plan.
struct TreePlan {
  std::vector<uint32_t> structure;    // ascending unit indices
  std::vector<uint32_t> estimation;   // ascending, disjoint from structure
};

TreePlan tree_plan(const ForestConfig& config, size_t n, std::span<const int32_t> clusters,
                   uint32_t tree_index);

// --- Spec'd statistical primitives -----------------------------------------

// Difference of means: mean(treated) - mean(control).
// Throws EstimationError when either arm is empty.
double leaf_estimate(std::span<const double> treated_outcomes,
                     std::span<const double> control_outcomes);

// Heterogeneity score of a candidate split: n_L * tau_L^2 + n_R * tau_R^2,
// where tau is the within-child difference of means of `y` between w = 1 and
// w = 0 units. Throws ArgumentError when a child violates the per-arm
// minimums (the split is infeasible).
double split_score(std::span<const double> y, std::span<const uint8_t> w,
                   std::span<const uint8_t> goes_left, uint32_t min_leaf_treated,
                   uint32_t min_leaf_control);

// --- Regression forests (nuisance models m-hat, e-hat) ---------------------

enum class RegressionTarget { kOutcome, kTreatment };

struct RegressionForest {
  std::vector<Tree> trees;
  ForestConfig config;
  uint64_t schema_digest = 0;  // 0 when fit on a bare matrix
  size_t n_train = 0;
  size_t p_train = 0;
};

struct OobValue {
  double value = 0.0;
  uint32_t tree_count = 0;
};

RegressionForest fit_regression_forest_matrix(const ColumnMatrix& x, std::span<const double> target,
                                              std::span<const int32_t> clusters,
                                              const ForestConfig& config, int threads = 0);
RegressionForest fit_regression_forest(const Cohort& cohort, RegressionTarget target,
                                       const ForestConfig& config, int threads = 0);
std::vector<double> predict(const RegressionForest& forest, const ColumnMatrix& x, int threads = 0);
std::vector<OobValue> predict_oob(const RegressionForest& forest, const ColumnMatrix& x,
                                  int threads = 0);

// --- Causal forest ----------------------------------------------------------

struct TauEstimate {
  double tau_hat = 0.0;       // ARR scale; negative = benefit
  double variance = 0.0;
  uint32_t oob_tree_count = 0;
};

struct CausalForestModel {
  std::vector<Tree> trees;
  ForestConfig config;
  uint64_t schema_digest = 0;
  size_t n_train = 0;
  std::vector<std::string> feature_names;
  // Pseudo-unit used for CATE surfaces: numeric features at the training
  // median, categorical one-hot groups at the mode.
  std::vector<double> profile;
  // OOB nuisance estimates on the training cohort (empty when center=false).
  std::vector<double> oob_m;
  std::vector<double> oob_e;
  // In-memory only; not part of the persisted artifact.
  RegressionForest m_forest;
  RegressionForest e_forest;

  uint64_t digest() const;
};

CausalForestModel fit_causal_forest(const Cohort& cohort, const ForestConfig& config,
                                    int threads = 0);

// Centering with externally supplied (cross-fitted) nuisance estimates
// instead of the internally fit OOB forests.
CausalForestModel fit_causal_forest_with_nuisance(const Cohort& cohort, const ForestConfig& config,
                                                  std::span<const double> m_hat,
                                                  std::span<const double> e_hat, int threads = 0);

// tau-hat^{-i}: average over trees whose subsample excludes unit i.
// Units covered by zero trees come back flagged with oob_tree_count = 0.
std::vector<TauEstimate> predict_oob(const CausalForestModel& model, const Cohort& cohort,
                                     int threads = 0);

// Average over all trees; requires a matching schema digest.
std::vector<TauEstimate> predict(const CausalForestModel& model, const Cohort& cohort,
                                 int threads = 0);

// Predictions for dense feature rows (no schema check; used for profiles).
std::vector<double> predict_rows(const CausalForestModel& model,
                                 const std::vector<std::vector<double>>& rows);

// Grouped half-sample variance: max(0, between-group variance of group-mean
// predictions - within-group variance / group_size). Approximate by design.
std::vector<double> variance_estimates(const CausalForestModel& model, const Cohort& cohort,
                                       int threads = 0);

// Per-tree-group totals over a unit set (policy CIs): entry g is
// sum_{i in units} mean over group g's trees of the prediction at x_i.
// Ordered by group index; groups with no usable tree are dropped.
std::vector<double> group_total_predictions(const CausalForestModel& model, const Cohort& cohort,
                                            std::span<const uint32_t> units, int threads = 0);

}  // namespace hte

#endif  // HTE_FOREST_HPP_
