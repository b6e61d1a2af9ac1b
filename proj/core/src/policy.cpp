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
#include "hte/policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hte/error.hpp"
#include "hte/util.hpp"

namespace hte {

namespace {

bool eligible(const Cohort& cohort, size_t i, bool post_only) {
  return !post_only || cohort.period[i] == Period::kPost;
}

// Per-ventile selection of the floor(k * |V|) units with the smallest score,
// ties toward the smaller unit index.
std::vector<uint32_t> topk_by_score(const Cohort& cohort, std::span<const double> score, double k,
                                    bool post_only) {
  if (!(k > 0.0 && k <= 1.0)) throw ArgumentError("top-k policy: k must be in (0,1]");
  if (score.size() != cohort.size()) {
    throw ArgumentError("top-k policy: effect estimates do not cover the cohort");
  }
  std::vector<std::vector<uint32_t>> ventile_units(21);
  for (size_t i = 0; i < cohort.size(); ++i) {
    if (!eligible(cohort, i, post_only)) continue;
    ventile_units[static_cast<size_t>(cohort.ventile[i])].push_back(static_cast<uint32_t>(i));
  }
  std::vector<uint32_t> treated;
  for (int v = 1; v <= 20; ++v) {
    auto& units = ventile_units[static_cast<size_t>(v)];
    const size_t budget = static_cast<size_t>(std::floor(k * double(units.size())));
    if (budget == 0 || units.empty()) continue;
    std::sort(units.begin(), units.end(), [&](uint32_t a, uint32_t b) {
      if (score[a] != score[b]) return score[a] < score[b];
      return a < b;
    });
    treated.insert(treated.end(), units.begin(), units.begin() + budget);
  }
  std::sort(treated.begin(), treated.end());
  return treated;
}

}  // namespace

std::string PolicySpec::label() const {
  std::ostringstream out;
  switch (kind) {
    case PolicyKind::kRiskThreshold:
      out << "risk_threshold_" << format_double(threshold);
      break;
    case PolicyKind::kCateTopkPerVentile:
      out << "cate_top" << format_double(k);
      break;
    case PolicyKind::kUtilityTopkPerVentile:
      out << "utility_top" << format_double(k);
      break;
  }
  return out.str();
}

void PolicySpec::validate() const {
  switch (kind) {
    case PolicyKind::kRiskThreshold:
      if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("policy: risk threshold must be in [0,1]");
      }
      break;
    case PolicyKind::kCateTopkPerVentile:
    case PolicyKind::kUtilityTopkPerVentile:
      if (!(k > 0.0 && k <= 1.0)) throw ConfigError("policy: k must be in (0,1]");
      if (kind == PolicyKind::kUtilityTopkPerVentile) {
        for (double p : payoffs) {
          if (!(p >= 0.0)) throw ConfigError("policy: payoffs must be nonnegative");
        }
        if (payoffs.empty() && !(constant_payoff >= 0.0)) {
          throw ConfigError("policy: constant payoff must be nonnegative");
        }
      }
      break;
  }
}

std::vector<uint32_t> risk_threshold_policy(const Cohort& cohort, double threshold,
                                            bool post_only) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ArgumentError("risk_threshold_policy: threshold must be in [0,1]");
  }
  std::vector<uint32_t> treated;
  for (size_t i = 0; i < cohort.size(); ++i) {
    if (!eligible(cohort, i, post_only)) continue;
    if (cohort.risk[i] >= threshold) treated.push_back(static_cast<uint32_t>(i));
  }
  return treated;
}

std::vector<uint32_t> cate_topk_policy(const Cohort& cohort, std::span<const double> taus, double k,
                                       bool post_only) {
  return topk_by_score(cohort, taus, k, post_only);
}

std::vector<uint32_t> utility_ranking(std::span<const double> taus,
                                      std::span<const double> payoffs) {
  if (taus.size() != payoffs.size()) {
    throw ArgumentError("utility_ranking: taus and payoffs differ in length");
  }
  std::vector<double> utility(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) {
    if (!(payoffs[i] >= 0.0)) throw ArgumentError("utility_ranking: negative payoff");
    utility[i] = taus[i] * payoffs[i];
  }
  std::vector<uint32_t> order(taus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<uint32_t>(i);
  std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
    if (utility[a] != utility[b]) return utility[a] < utility[b];
    return a < b;
  });
  return order;
}

std::vector<uint32_t> utility_topk_policy(const Cohort& cohort, std::span<const double> taus,
                                          std::span<const double> payoffs, double k,
                                          bool post_only) {
  if (taus.size() != payoffs.size()) {
    throw ArgumentError("utility_topk_policy: taus and payoffs differ in length");
  }
  std::vector<double> utility(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) {
    if (!(payoffs[i] >= 0.0)) throw ArgumentError("utility_topk_policy: negative payoff");
    utility[i] = taus[i] * payoffs[i];
  }
  return topk_by_score(cohort, utility, k, post_only);
}

PolicyImpact impact(std::span<const uint32_t> treated, std::span<const double> taus) {
  KahanSum sum;
  for (uint32_t i : treated) {
    if (i >= taus.size()) throw ArgumentError("impact: effect estimate missing for unit " +
                                              std::to_string(i));
    sum.add(taus[i]);
  }
  PolicyImpact out;
  out.treated.assign(treated.begin(), treated.end());
  out.n_treated = treated.size();
  out.raw_sum = sum.value();
  out.net_harm = out.raw_sum > 0.0;
  out.prevented = out.net_harm ? 0.0 : -out.raw_sum;
  return out;
}

int64_t nnt(double prevented, size_t n_treated) {
  if (!(prevented > 0.0)) {
    throw EstimationError("nnt: undefined for a nonpositive prevented count");
  }
  const double ratio = static_cast<double>(n_treated) / prevented;
  return static_cast<int64_t>(std::ceil(ratio - 1e-9));
}

std::pair<double, double> impact_ci(const CausalForestModel& model, const Cohort& cohort,
                                    std::span<const uint32_t> treated, double point_prevented,
                                    int threads) {
  const std::vector<double> totals = group_total_predictions(model, cohort, treated, threads);
  if (totals.size() < 2) throw EstimationError("impact_ci: need at least two tree groups");
  // Prevented scale: group totals are sums of tau, flip the sign.
  std::vector<double> prevented(totals.size());
  for (size_t g = 0; g < totals.size(); ++g) prevented[g] = -totals[g];
  const double sd = std::sqrt(sample_variance(prevented));
  const double half = 1.96 * sd;
  return {point_prevented - half, point_prevented + half};
}

PolicyImpact evaluate_policy(const PolicySpec& spec, const Cohort& cohort,
                             std::span<const double> taus, const CausalForestModel* model,
                             int threads) {
  spec.validate();
  std::vector<uint32_t> treated;
  switch (spec.kind) {
    case PolicyKind::kRiskThreshold:
      treated = risk_threshold_policy(cohort, spec.threshold, spec.post_only);
      break;
    case PolicyKind::kCateTopkPerVentile:
      treated = cate_topk_policy(cohort, taus, spec.k, spec.post_only);
      break;
    case PolicyKind::kUtilityTopkPerVentile: {
      std::vector<double> payoffs = spec.payoffs;
      if (payoffs.empty()) payoffs.assign(cohort.size(), spec.constant_payoff);
      treated = utility_topk_policy(cohort, taus, payoffs, spec.k, spec.post_only);
      break;
    }
  }
  PolicyImpact result = impact(treated, taus);
  if (result.prevented > 0.0) result.nnt = nnt(result.prevented, result.n_treated);
  if (model != nullptr && !treated.empty()) {
    result.ci95 = impact_ci(*model, cohort, treated, result.prevented, threads);
  }
  return result;
}

std::vector<double> tau_values(std::span<const TauEstimate> estimates) {
  std::vector<double> out(estimates.size());
  for (size_t i = 0; i < estimates.size(); ++i) out[i] = estimates[i].tau_hat;
  return out;
}

}  // namespace hte
