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
#include "hte/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hte/error.hpp"
#include "hte/parallel.hpp"
#include "hte/rng.hpp"
#include "hte/util.hpp"

namespace hte {

namespace {

// Stream tags.
constexpr uint64_t kUnitCovariates = 0x636f76;  // covariate pass
constexpr uint64_t kUnitOutcomes = 0x6f7574;    // outcome pass
constexpr uint64_t kClusterTag = 0x636c75;

// Covariate location/scale design constants (loose Table-A1 shapes).
constexpr double kAgeMean = 65.0, kAgeSd = 18.0;
constexpr double kLaps2Mean = 58.0, kLaps2Sd = 28.0;
constexpr double kLapsDcMean = 46.0, kLapsDcNoiseSd = 20.0, kLapsDcCoupling = 0.45;
constexpr double kLapsDcSd = 23.6;  // sd implied by the coupling above
constexpr double kCops2LogMean = 3.6889;  // ln 40
constexpr double kCops2LogSd = 0.65;
constexpr double kCops2Mean = 49.0, kCops2Sd = 36.0;
constexpr double kMaleRate = 0.475, kMedicareRate = 0.55;

// DISCHDISP: Home / HomeHealth / SNF.
const std::vector<double> kDispCum = {0.73, 0.89, 1.0};
const double kDispOffset[3] = {-0.02, 0.04, 0.08};
// HCUPSGDC: CHF / CAP / Sepsis / GI bleed.
const std::vector<double> kHcupCum = {0.35, 0.65, 0.85, 1.0};
const double kHcupOffset[4] = {0.06, -0.02, 0.03, -0.04};

constexpr double kClusterSd = 0.08;

// Risk-score noise (logistic, independent of x) and the score's upward
// mis-calibration relative to the outcome intercept. The noise scale keeps
// P(risk >= 0.25 | x) bounded away from 0 for nearly all x, which is what
// makes assignment-by-threshold compatible with overlap.
constexpr double kScoreNoiseScale = 0.52;
constexpr double kScoreShift = 0.95;

// Mismatch effect surface, driven by the discharge acuity x comorbidity
// plane (the same two covariates the published CATE surface varies over):
// a plateau of benefit below the effect-index midpoint falls off sharply
// above it, is amplified with age, capped at 80% of the baseline risk so
// outcome probabilities never clip, plus a weak positive component for
// units acutely ill at discharge. The effect index shares only part of the
// severity index that drives the risk score, leaving most heterogeneity
// within risk ventiles.
constexpr double kEffectIndexSd = 0.752;  // sd of the raw effect index
constexpr double kEffectAmplitude = 0.066;
constexpr double kCliffWidth = 0.22;
// Units well above the benefit cliff see a weakly positive effect, strongest
// for those acutely ill at discharge.
constexpr double kPosIndexCenter = 0.45, kPosIndexWidth = 0.22, kPosIndexAmplitude = 0.020;
constexpr double kPosLapsCenter = 78.0, kPosLapsWidth = 7.0, kPosLapsAmplitude = 0.008;
constexpr double kConstantEffect = -0.03;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct UnitDraws {
  double age, laps2, laps2dc, cops2;
  uint8_t male, medicare;
  int32_t disp, hcup;
  int32_t cluster;
  uint8_t post;
  double eta;  // risk-score noise
  std::vector<double> noise;
};

// Effect-index offsets per HCUPSGDC level (CHF most responsive).
const double kHcupEffectOffset[4] = {0.09, -0.05, 0.01, -0.03};

UnitDraws draw_covariates(const DGPConfig& cfg, uint64_t i, std::span<const double> cluster_offset,
                          double* z_out, double* effect_out) {
  Rng rng(cfg.seed, {kUnitCovariates, i});
  UnitDraws u;
  u.cluster = static_cast<int32_t>(rng.bounded(cfg.clusters)) + 1;
  u.age = std::clamp(rng.normal(kAgeMean, kAgeSd), 18.0, 100.0);
  u.male = rng.bernoulli(kMaleRate) ? 1 : 0;
  u.medicare = rng.bernoulli(kMedicareRate) ? 1 : 0;
  u.laps2 = std::clamp(rng.normal(kLaps2Mean, kLaps2Sd), 0.0, 220.0);
  u.laps2dc = std::clamp(
      kLapsDcCoupling * (u.laps2 - kLaps2Mean) + rng.normal(kLapsDcMean, kLapsDcNoiseSd), 0.0,
      220.0);
  u.cops2 = std::clamp(std::exp(rng.normal(kCops2LogMean, kCops2LogSd)), 0.0, 306.0);
  u.disp = static_cast<int32_t>(rng.categorical(kDispCum));
  u.hcup = static_cast<int32_t>(rng.categorical(kHcupCum));
  u.noise.resize(cfg.p_extra);
  for (auto& v : u.noise) v = rng.normal();
  u.post = rng.bernoulli(cfg.post_fraction) ? 1 : 0;
  u.eta = rng.logistic(kScoreNoiseScale);

  const double n_age = (u.age - kAgeMean) / kAgeSd;
  const double n_laps2 = (u.laps2 - kLaps2Mean) / kLaps2Sd;
  const double n_lapsdc = (u.laps2dc - kLapsDcMean) / kLapsDcSd;
  const double n_cops = (u.cops2 - kCops2Mean) / kCops2Sd;

  *z_out = 0.30 * n_lapsdc + 0.18 * n_cops + 0.13 * n_age + 0.06 * n_laps2 +
           0.10 * (u.medicare - kMedicareRate) + 0.04 * (u.male - kMaleRate) +
           kDispOffset[u.disp] + kHcupOffset[u.hcup] +
           cluster_offset[static_cast<size_t>(u.cluster - 1)];
  *effect_out = 0.60 * n_lapsdc + 0.45 * n_cops + kHcupEffectOffset[u.hcup];
  return u;
}

double mismatch_tau(double effect_index, double m, double age, double laps2dc) {
  const double index = effect_index / kEffectIndexSd;
  const double cliff = sigmoid(-index / kCliffWidth);
  const double agefac = std::clamp(1.0 + 0.12 * (age - kAgeMean) / 20.0, 0.82, 1.2);
  const double pos = kPosIndexAmplitude * sigmoid((index - kPosIndexCenter) / kPosIndexWidth) +
                     kPosLapsAmplitude * sigmoid((laps2dc - kPosLapsCenter) / kPosLapsWidth);
  return -std::min(kEffectAmplitude * agefac * cliff, 0.80 * m) + pos;
}

}  // namespace

void DGPConfig::validate() const {
  if (n < 1) throw ConfigError("dgp: n must be >= 1");
  if (!(baseline_rate > 0.0 && baseline_rate < 1.0)) {
    throw ConfigError("dgp: baseline_rate must be in (0,1)");
  }
  if (!(post_fraction > 0.0 && post_fraction < 1.0)) {
    throw ConfigError("dgp: post_fraction must be in (0,1)");
  }
  if (clusters < 1) throw ConfigError("dgp: clusters must be >= 1");
  if (p_extra > 500) throw ConfigError("dgp: p_extra too large");
}

FeatureSchema synthetic_schema(uint32_t p_extra) {
  FeatureSchema s;
  s.features.push_back(FeatureSpec::numeric("AGE"));
  s.features.push_back(FeatureSpec::numeric("LAPS2"));
  s.features.push_back(FeatureSpec::numeric("LAPS2DC"));
  s.features.push_back(FeatureSpec::numeric("COPS2"));
  s.features.push_back(FeatureSpec::numeric("MALE"));
  s.features.push_back(FeatureSpec::numeric("MEDICARE"));
  s.features.push_back(FeatureSpec::categorical("DISCHDISP", {"Home", "HomeHealth", "SNF"}));
  s.features.push_back(FeatureSpec::categorical("HCUPSGDC", {"CHF", "CAP", "Sepsis", "GI bleed"}));
  for (uint32_t k = 1; k <= p_extra; ++k) {
    s.features.push_back(FeatureSpec::numeric("NOISE" + std::to_string(k)));
  }
  return s;
}

SyntheticCohort generate(const DGPConfig& config, int threads) {
  config.validate();
  const size_t n = config.n;

  std::vector<double> cluster_offset(config.clusters);
  for (uint32_t c = 0; c < config.clusters; ++c) {
    Rng rng(config.seed, {kClusterTag, c});
    cluster_offset[c] = rng.normal(0.0, kClusterSd);
  }

  SyntheticCohort out;
  Cohort& cohort = out.cohort;
  cohort.schema = synthetic_schema(config.p_extra);
  cohort.provenance = Provenance::kSynthetic;

  const size_t n_features = cohort.schema.features.size();
  cohort.numeric_raw.assign(n_features, {});
  cohort.level_codes.assign(n_features, {});
  // Slots: 0 AGE, 1 LAPS2, 2 LAPS2DC, 3 COPS2, 4 MALE, 5 MEDICARE,
  // 6 DISCHDISP, 7 HCUPSGDC, 8.. noise.
  for (size_t f = 0; f < n_features; ++f) {
    if (cohort.schema.features[f].kind == FeatureKind::kNumeric) {
      cohort.numeric_raw[f].resize(n);
    } else {
      cohort.level_codes[f].resize(n);
    }
  }
  cohort.w.resize(n);
  cohort.y.resize(n);
  cohort.risk.resize(n);
  cohort.period.resize(n);
  cohort.cluster.resize(n);
  cohort.payoff.resize(n);
  if (config.emit_years) cohort.year.resize(n);
  out.oracle.true_tau.resize(n);
  out.oracle.true_m.resize(n);
  out.oracle.true_risk.resize(n);

  std::vector<double> z(n);
  std::vector<double> effect_index(n);
  std::vector<double> eta(n);

  parallel_for(n, threads, [&](int, size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      double zi, pi;
      UnitDraws u = draw_covariates(config, i, cluster_offset, &zi, &pi);
      cohort.numeric_raw[0][i] = u.age;
      cohort.numeric_raw[1][i] = u.laps2;
      cohort.numeric_raw[2][i] = u.laps2dc;
      cohort.numeric_raw[3][i] = u.cops2;
      cohort.numeric_raw[4][i] = u.male;
      cohort.numeric_raw[5][i] = u.medicare;
      cohort.level_codes[6][i] = u.disp;
      cohort.level_codes[7][i] = u.hcup;
      for (uint32_t k = 0; k < config.p_extra; ++k) cohort.numeric_raw[8 + k][i] = u.noise[k];
      cohort.cluster[i] = u.cluster;
      cohort.period[i] = u.post ? Period::kPost : Period::kPre;
      z[i] = zi;
      effect_index[i] = pi;
      eta[i] = u.eta;
    }
  });

  // Calibrate the outcome intercept so that mean(sigmoid(r0 + z)) hits the
  // configured baseline rate. Fixed-count bisection, sequential reduction:
  // bit-stable regardless of worker count.
  auto mean_m = [&](double r0) {
    KahanSum acc;
    for (size_t i = 0; i < n; ++i) acc.add(sigmoid(r0 + z[i]));
    return acc.value() / static_cast<double>(n);
  };
  double lo = -20.0, hi = 20.0;
  for (int it = 0; it < 90; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_m(mid) < config.baseline_rate) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double r0 = 0.5 * (lo + hi);
  const double q0 = r0 + kScoreShift;

  parallel_for(n, threads, [&](int, size_t begin, size_t end) {
    for (size_t i = begin; i < end; ++i) {
      Rng rng(config.seed, {kUnitOutcomes, i});
      const double m = sigmoid(r0 + z[i]);
      const double risk = sigmoid(q0 + z[i] + eta[i]);
      double tau = 0.0;
      switch (config.effect_shape) {
        case EffectShape::kNull: tau = 0.0; break;
        case EffectShape::kConstant: tau = kConstantEffect; break;
        case EffectShape::kMismatch:
          tau = mismatch_tau(effect_index[i], m, cohort.numeric_raw[0][i],
                             cohort.numeric_raw[2][i]);
          break;
      }
      const uint8_t w = (cohort.period[i] == Period::kPost && risk >= kRiskBandThreshold) ? 1 : 0;
      const double p_y = std::clamp(m + (w ? tau : 0.0), 0.0, 1.0);
      const uint8_t y = rng.bernoulli(p_y) ? 1 : 0;

      double payoff = 0.0;
      if (y == 1) {
        if (config.payoff_shape == PayoffShape::kConstantMean) {
          payoff = 5.0;
        } else {
          const double mu = std::log(4.8 + std::min(risk, 0.6)) - 0.5 * 0.45 * 0.45;
          payoff = std::clamp(std::exp(rng.normal(mu, 0.45)), 0.25, 30.0);
        }
      } else {
        rng.normal();  // keep the draw count fixed across outcomes
      }

      if (config.emit_years) {
        cohort.year[i] = cohort.period[i] == Period::kPre
                             ? 2015 + static_cast<int32_t>(rng.bounded(3))
                             : 2017 + static_cast<int32_t>(rng.bounded(2));
      }

      cohort.w[i] = w;
      cohort.y[i] = y;
      cohort.risk[i] = risk;
      cohort.payoff[i] = payoff;
      out.oracle.true_tau[i] = tau;
      out.oracle.true_m[i] = m;
      out.oracle.true_risk[i] = risk;
    }
  });

  cohort.finalize();
  return out;
}

double oracle_policy_value(const Cohort& cohort, const OracleColumns& oracle,
                           std::span<const uint32_t> treated) {
  const size_t n = cohort.size();
  if (oracle.true_tau.size() != n) {
    throw ArgumentError("oracle_policy_value: oracle does not match the cohort");
  }
  std::vector<uint8_t> seen(n, 0);
  KahanSum acc;
  for (uint32_t i : treated) {
    if (i >= n) throw ArgumentError("oracle_policy_value: unknown unit id " + std::to_string(i));
    if (seen[i]) throw ArgumentError("oracle_policy_value: duplicate unit id " + std::to_string(i));
    seen[i] = 1;
    acc.add(oracle.true_tau[i]);
  }
  return -acc.value();
}

void export_oracle(const Cohort& cohort, const OracleColumns& oracle, const std::string& path) {
  if (oracle.true_tau.size() != cohort.size()) {
    throw ArgumentError("export_oracle: oracle does not match the cohort");
  }
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw ValueError("cannot open file for writing: " + path);
  outf << "UNIT_ID,TRUE_TAU,TRUE_M,TRUE_RISK\n";
  for (size_t i = 0; i < cohort.size(); ++i) {
    outf << cohort.unit_ids[i] << ',' << format_double(oracle.true_tau[i]) << ','
         << format_double(oracle.true_m[i]) << ',' << format_double(oracle.true_risk[i]) << '\n';
  }
  if (!outf) throw ValueError("write failed: " + path);
}

OracleColumns load_oracle(const std::string& path, size_t expected_n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValueError("cannot open oracle file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty oracle file: " + path);
  OracleColumns oracle;
  size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
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
    if (cells.size() != 4) throw ValueError("oracle row " + std::to_string(row) + " malformed");
    double tau, m, risk;
    if (!parse_double(cells[1], &tau) || !parse_double(cells[2], &m) ||
        !parse_double(cells[3], &risk)) {
      throw ValueError("oracle row " + std::to_string(row) + " has unparseable numbers");
    }
    oracle.true_tau.push_back(tau);
    oracle.true_m.push_back(m);
    oracle.true_risk.push_back(risk);
  }
  if (expected_n != 0 && oracle.true_tau.size() != expected_n) {
    throw ValueError("oracle row count does not match the cohort");
  }
  return oracle;
}

const char* effect_shape_name(EffectShape s) {
  switch (s) {
    case EffectShape::kMismatch: return "mismatch";
    case EffectShape::kConstant: return "constant";
    case EffectShape::kNull: return "null";
  }
  return "?";
}

const char* payoff_shape_name(PayoffShape s) {
  switch (s) {
    case PayoffShape::kLognormal: return "lognormal";
    case PayoffShape::kConstantMean: return "constant_mean";
  }
  return "?";
}

}  // namespace hte
