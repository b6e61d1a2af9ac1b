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
#include "hte/calibration.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

#include "hte/error.hpp"
#include "hte/util.hpp"

namespace hte {

namespace {

std::string fmt3g(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return std::string(buf);
}

}  // namespace

double mean_oob_tau(std::span<const TauEstimate> taus) {
  std::vector<double> values;
  values.reserve(taus.size());
  for (const TauEstimate& t : taus) {
    if (t.oob_tree_count > 0) values.push_back(t.tau_hat);
  }
  if (values.empty()) throw EstimationError("mean_oob_tau: no units with OOB coverage");
  return mean_of(values);
}

CalibrationReport best_linear_predictor(const Cohort& cohort, std::span<const TauEstimate> oob_taus,
                                        std::span<const double> oob_m,
                                        std::span<const double> oob_e,
                                        const CalibrationOptions& options) {
  const size_t n = cohort.size();
  if (oob_taus.size() != n || oob_m.size() != n || oob_e.size() != n) {
    throw ArgumentError("best_linear_predictor: input lengths differ from the cohort");
  }
  if (!(options.propensity_clip >= 0.0 && options.propensity_clip < 0.5)) {
    throw ArgumentError("best_linear_predictor: propensity clip must be in [0, 0.5)");
  }

  CalibrationReport report;
  std::vector<uint32_t> used;
  used.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    if (oob_taus[i].oob_tree_count == 0) {
      ++report.n_excluded_oob;
      continue;
    }
    if (!(oob_e[i] > options.propensity_clip && oob_e[i] < 1.0 - options.propensity_clip)) {
      ++report.n_excluded_propensity;
      continue;
    }
    used.push_back(static_cast<uint32_t>(i));
  }
  report.n_used = used.size();
  if (used.size() < 3) throw EstimationError("best_linear_predictor: too few usable units");

  std::vector<double> tau_used;
  tau_used.reserve(used.size());
  for (uint32_t i : used) tau_used.push_back(oob_taus[i].tau_hat);
  const double taubar = mean_of(tau_used);
  report.mean_oob_tau = taubar;

  const size_t m = used.size();
  std::vector<double> a(m), b(m), yv(m);
  for (size_t k = 0; k < m; ++k) {
    const uint32_t i = used[k];
    const double wc = double(cohort.w[i]) - oob_e[i];
    a[k] = taubar * wc;
    b[k] = (oob_taus[i].tau_hat - taubar) * wc;
    yv[k] = double(cohort.y[i]) - oob_m[i];
  }

  KahanSum saa, sab, sbb, say, sby;
  for (size_t k = 0; k < m; ++k) {
    saa.add(a[k] * a[k]);
    sab.add(a[k] * b[k]);
    sbb.add(b[k] * b[k]);
    say.add(a[k] * yv[k]);
    sby.add(b[k] * yv[k]);
  }
  const double xaa = saa.value(), xab = sab.value(), xbb = sbb.value();
  const double xay = say.value(), xby = sby.value();
  const double det = xaa * xbb - xab * xab;
  const bool degenerate = xbb <= 0.0 || xaa <= 0.0 || det <= 1e-14 * xaa * xbb;

  auto finish_tail = [&](double se_alpha, double se_beta) {
    report.se_alpha = se_alpha;
    report.se_beta = se_beta;
    report.p_alpha =
        se_alpha > 0 ? 2.0 * (1.0 - normal_cdf(std::abs(report.alpha) / se_alpha)) : 1.0;
    if (!report.beta_degenerate && se_beta > 0) {
      report.p_beta = 1.0 - normal_cdf(report.beta / se_beta);
    } else {
      report.p_beta = 1.0;
    }
  };

  if (degenerate) {
    report.beta_degenerate = true;
    report.beta = std::numeric_limits<double>::quiet_NaN();
    if (xaa <= 0.0) throw EstimationError("best_linear_predictor: degenerate design (A = 0)");
    report.alpha = xay / xaa;
    // HC3 for the single-regressor fit.
    KahanSum meat;
    for (size_t k = 0; k < m; ++k) {
      const double h = std::min(a[k] * a[k] / xaa, 1.0 - 1e-8);
      const double u = (yv[k] - report.alpha * a[k]) / (1.0 - h);
      meat.add(a[k] * a[k] * u * u);
    }
    finish_tail(std::sqrt(meat.value()) / xaa, std::numeric_limits<double>::quiet_NaN());
    return report;
  }

  const double inv_aa = xbb / det;
  const double inv_ab = -xab / det;
  const double inv_bb = xaa / det;
  report.alpha = inv_aa * xay + inv_ab * xby;
  report.beta = inv_ab * xay + inv_bb * xby;

  // Sandwich meat.
  double m_aa = 0.0, m_ab = 0.0, m_bb = 0.0;
  if (options.cluster_robust) {
    std::map<int32_t, std::pair<double, double>> scores;
    for (size_t k = 0; k < m; ++k) {
      const double u = yv[k] - report.alpha * a[k] - report.beta * b[k];
      auto& s = scores[cohort.cluster[used[k]]];
      s.first += a[k] * u;
      s.second += b[k] * u;
    }
    for (const auto& [cl, s] : scores) {
      m_aa += s.first * s.first;
      m_ab += s.first * s.second;
      m_bb += s.second * s.second;
    }
    const double n_clusters = static_cast<double>(scores.size());
    if (n_clusters > 1) {
      const double c =
          (n_clusters / (n_clusters - 1.0)) * ((double(m) - 1.0) / (double(m) - 2.0));
      m_aa *= c;
      m_ab *= c;
      m_bb *= c;
    }
  } else {
    KahanSum aa, ab, bb;
    for (size_t k = 0; k < m; ++k) {
      const double h =
          std::min(inv_aa * a[k] * a[k] + 2.0 * inv_ab * a[k] * b[k] + inv_bb * b[k] * b[k],
                   1.0 - 1e-8);
      const double u = (yv[k] - report.alpha * a[k] - report.beta * b[k]) / (1.0 - h);
      const double u2 = u * u;
      aa.add(a[k] * a[k] * u2);
      ab.add(a[k] * b[k] * u2);
      bb.add(b[k] * b[k] * u2);
    }
    m_aa = aa.value();
    m_ab = ab.value();
    m_bb = bb.value();
  }

  // cov = inv(X'X) * meat * inv(X'X)
  const double c_aa = inv_aa * (m_aa * inv_aa + m_ab * inv_ab) + inv_ab * (m_ab * inv_aa + m_bb * inv_ab);
  const double c_bb = inv_ab * (m_aa * inv_ab + m_ab * inv_bb) + inv_bb * (m_ab * inv_ab + m_bb * inv_bb);
  finish_tail(std::sqrt(std::max(c_aa, 0.0)), std::sqrt(std::max(c_bb, 0.0)));
  return report;
}

std::string render_calibration(const CalibrationReport& r) {
  std::ostringstream out;
  out << "best linear predictor of the CATE (no intercept, "
      << "robust SEs)\n";
  out << "  n_used: " << r.n_used << "  (excluded: " << r.n_excluded_oob << " without OOB coverage, "
      << r.n_excluded_propensity << " outside the propensity band)\n";
  out << "  mean oob tau: " << fmt3g(r.mean_oob_tau) << "\n";
  out << "  alpha: " << fmt3g(r.alpha) << "  (se " << fmt3g(r.se_alpha) << ", two-sided p "
      << fmt3g(r.p_alpha) << ")\n";
  if (r.beta_degenerate) {
    out << "  beta:  undefined (degenerate design: the OOB estimates carry no spread)\n";
  } else {
    out << "  beta:  " << fmt3g(r.beta) << "  (se " << fmt3g(r.se_beta) << ", one-sided p "
        << fmt3g(r.p_beta) << ")\n";
  }
  return out.str();
}

std::string calibration_csv(const CalibrationReport& r) {
  std::ostringstream out;
  out << "alpha,beta,se_alpha,se_beta,p_alpha,p_beta,n_used,n_excluded_oob,"
         "n_excluded_propensity,mean_oob_tau,beta_degenerate\n";
  out << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << format_double(r.se_alpha)
      << ',' << format_double(r.se_beta) << ',' << format_double(r.p_alpha) << ','
      << format_double(r.p_beta) << ',' << r.n_used << ',' << r.n_excluded_oob << ','
      << r.n_excluded_propensity << ',' << format_double(r.mean_oob_tau) << ','
      << (r.beta_degenerate ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace hte
