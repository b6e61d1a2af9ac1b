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
#ifndef HTE_POLICY_HPP_
#define HTE_POLICY_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hte/cohort.hpp"
#include "hte/forest.hpp"

namespace hte {

enum class PolicyKind { kRiskThreshold, kCateTopkPerVentile, kUtilityTopkPerVentile };

struct PolicySpec {
  PolicyKind kind = PolicyKind::kRiskThreshold;
  double threshold = 0.25;  // risk_threshold
  double k = 0.2;           // top-k kinds, fraction per ventile in (0,1]
  // utility kind: per-unit payoffs, or a constant when the vector is empty.
  std::vector<double> payoffs;
  double constant_payoff = 1.0;
  bool post_only = false;  // restrict selection to the post / holdout period

  std::string label() const;
  void validate() const;  // throws ConfigError
};

// {i : risk_i >= threshold} (>= matches the operational assignment rule).
std::vector<uint32_t> risk_threshold_policy(const Cohort& cohort, double threshold,
                                            bool post_only = false);

// Within each ventile, the floor(k * |V|) units with the most negative
// tau-hat; ties broken toward the smaller unit index. Never exceeds the
// per-ventile budget.
std::vector<uint32_t> cate_topk_policy(const Cohort& cohort, std::span<const double> taus, double k,
                                       bool post_only = false);

// Ascending order of expected utility u_i = tau_i * payoff_i
// (most negative utility first; constant payoffs reduce to the tau order).
std::vector<uint32_t> utility_ranking(std::span<const double> taus,
                                      std::span<const double> payoffs);

// Per-ventile top-k by expected utility.
std::vector<uint32_t> utility_topk_policy(const Cohort& cohort, std::span<const double> taus,
                                          std::span<const double> payoffs, double k,
                                          bool post_only = false);

struct PolicyImpact {
  std::vector<uint32_t> treated;
  size_t n_treated = 0;
  double prevented = 0.0;                      // max(0, -sum tau), reported positive
  double raw_sum = 0.0;                        // sum of tau over the treated set
  bool net_harm = false;                       // raw sum was positive
  std::optional<std::pair<double, double>> ci95;
  std::optional<int64_t> nnt;
};

// Point impact of treating `treated` with effect estimates `taus` (full
// cohort indexing). Net-harm selections report prevented = 0 with the raw
// sum retained and the flag set.
PolicyImpact impact(std::span<const uint32_t> treated, std::span<const double> taus);

// ceil(n_treated / prevented); throws EstimationError when prevented <= 0.
int64_t nnt(double prevented, size_t n_treated);

// 95% interval for `prevented`, centered at `point`, with the half-width
// taken from the spread of per-tree-group totals. Conservative by design.
std::pair<double, double> impact_ci(const CausalForestModel& model, const Cohort& cohort,
                                    std::span<const uint32_t> treated, double point_prevented,
                                    int threads = 0);

// Full evaluation: selection, point impact, NNT, and (with a model) the CI.
PolicyImpact evaluate_policy(const PolicySpec& spec, const Cohort& cohort,
                             std::span<const double> taus, const CausalForestModel* model = nullptr,
                             int threads = 0);

std::vector<double> tau_values(std::span<const TauEstimate> estimates);

}  // namespace hte

#endif  // HTE_POLICY_HPP_
