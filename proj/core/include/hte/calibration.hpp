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
#ifndef HTE_CALIBRATION_HPP_
#define HTE_CALIBRATION_HPP_

#include <cstdint>
#include <span>
#include <string>

#include "hte/cohort.hpp"
#include "hte/forest.hpp"

namespace hte {

struct CalibrationOptions {
  // HC3 sandwich errors by default; cluster-robust (CR1 by hospital) on
  // request.
  bool cluster_robust = false;
  // Units with e-hat outside (clip, 1-clip) are dropped (residualization
  // degenerates near deterministic assignment) and counted.
  double propensity_clip = 0.01;
};

// Best-linear-predictor fit of the OOB CATE estimates:
//   Y_i - m_i  ~  alpha * taubar * (W_i - e_i)  +  beta * (tau_i - taubar) * (W_i - e_i)
// without intercept. alpha near 1 means the average prediction level is
// right; beta significantly above 0 is the omnibus evidence of real
// heterogeneity tracked by the estimates.
struct CalibrationReport {
  double alpha = 0.0;
  double beta = 0.0;
  double se_alpha = 0.0;
  double se_beta = 0.0;
  double p_alpha = 1.0;  // two-sided, H0: alpha = 0
  double p_beta = 1.0;   // one-sided, H0: beta <= 0
  size_t n_used = 0;
  size_t n_excluded_oob = 0;         // no OOB coverage
  size_t n_excluded_propensity = 0;  // e-hat outside the clip band
  bool beta_degenerate = false;      // rank-deficient design; beta is NaN
  double mean_oob_tau = 0.0;         // taubar over the used units
};

// Mean of the OOB estimates over units with OOB coverage.
double mean_oob_tau(std::span<const TauEstimate> taus);

CalibrationReport best_linear_predictor(const Cohort& cohort, std::span<const TauEstimate> oob_taus,
                                        std::span<const double> oob_m,
                                        std::span<const double> oob_e,
                                        const CalibrationOptions& options = {});

// Human-readable report block.
std::string render_calibration(const CalibrationReport& report);
// One-line CSV (header + row).
std::string calibration_csv(const CalibrationReport& report);

}  // namespace hte

#endif  // HTE_CALIBRATION_HPP_
