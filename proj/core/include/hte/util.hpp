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
#ifndef HTE_UTIL_HPP_
#define HTE_UTIL_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

namespace hte {

// Compensated (Neumaier) accumulator. Summation order still matters at the
// last ulp, so callers that promise bitwise determinism must feed values in a
// fixed order.
class KahanSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Mean with an all-equal fast path: a constant input yields that constant
// bit-exactly (degenerate ensembles and pure leaves must not pick up
// rounding noise).
double mean_of(std::span<const double> values);

// Sample variance (n-1 denominator; 0 when fewer than two values), Welford.
double sample_variance(std::span<const double> values);

// Type-7 quantile: linear interpolation between order statistics.
// `sorted` must be ascending and non-empty; p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

// Shortest decimal form that round-trips the exact double (via to_chars).
std::string format_double(double v);

// Parses a full-cell value; returns false on trailing junk or empty input.
bool parse_double(const std::string& cell, double* out);
bool parse_int64(const std::string& cell, int64_t* out);

// "1246" -> "1,246"
std::string group_thousands(int64_t v);

// FNV-1a (64-bit) running hash for config/schema/model digests.
class Fnv64 {
 public:
  void add_bytes(const void* data, size_t len);
  void add_u64(uint64_t v);
  void add_i64(int64_t v) { add_u64(static_cast<uint64_t>(v)); }
  void add_double(double v);
  void add_string(const std::string& s);
  uint64_t digest() const { return h_; }

 private:
  uint64_t h_ = 1469598103934665603ULL;
};

std::string hex_u64(uint64_t v);

// Standard normal CDF.
double normal_cdf(double x);

}  // namespace hte

#endif  // HTE_UTIL_HPP_
