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
#ifndef HTE_SYNTHDATA_HPP_
#define HTE_SYNTHDATA_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hte/cohort.hpp"

namespace hte {

enum class EffectShape { kMismatch, kConstant, kNull };
enum class PayoffShape { kLognormal, kConstantMean };

// Synthetic-cohort generator configuration. The generated process mirrors the
// hospital-readmission setting: a latent severity score drives both the
// baseline outcome risk and a noisy operational risk score; treatment is
// assigned by threshold on that score in the post period only.
struct DGPConfig {
  uint64_t n = 20000;
  uint32_t p_extra = 0;          // independent N(0,1) noise covariates
  uint64_t seed = 1;
  double baseline_rate = 0.124;  // target P(Y=1 | W=0)
  double post_fraction = 0.267;  // P(period = post), independent of X
  uint32_t clusters = 21;
  EffectShape effect_shape = EffectShape::kMismatch;
  PayoffShape payoff_shape = PayoffShape::kLognormal;
  bool emit_years = false;  // adds a YEAR column (pre: 2015-2017, post: 2017-2018)

  void validate() const;  // throws ConfigError
};

// Ground truth per unit. true_risk equals the cohort's RISK column (the score
// used for assignment); true_m is P(Y=1 | W=0, x); true_tau the unit's CATE.
struct OracleColumns {
  std::vector<double> true_tau;
  std::vector<double> true_m;
  std::vector<double> true_risk;
};

struct SyntheticCohort {
  Cohort cohort;
  OracleColumns oracle;
};

// Feature layout of generated cohorts: AGE, LAPS2, LAPS2DC, COPS2, MALE,
// MEDICARE numeric; DISCHDISP (3 levels) and HCUPSGDC (4 supergroups)
// categorical; NOISE1..NOISEk appended for p_extra = k.
FeatureSchema synthetic_schema(uint32_t p_extra);

// Deterministic in (config): the same config yields bit-identical cohorts
// regardless of thread count. Unit draws come from counter-based streams
// keyed by (seed, unit index).
SyntheticCohort generate(const DGPConfig& config, int threads = 0);

// Value of treating `treated` (unit indices), evaluated with the true CATEs:
// -sum(true_tau_i). Positive values are readmissions prevented.
double oracle_policy_value(const Cohort& cohort, const OracleColumns& oracle,
                           std::span<const uint32_t> treated);

// Sibling file with UNIT_ID, TRUE_TAU, TRUE_M, TRUE_RISK.
void export_oracle(const Cohort& cohort, const OracleColumns& oracle, const std::string& path);
OracleColumns load_oracle(const std::string& path, size_t expected_n);

const char* effect_shape_name(EffectShape s);
const char* payoff_shape_name(PayoffShape s);

}  // namespace hte

#endif  // HTE_SYNTHDATA_HPP_
