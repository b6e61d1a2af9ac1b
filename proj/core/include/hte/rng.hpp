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
#ifndef HTE_RNG_HPP_
#define HTE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <vector>

namespace hte {

// SplitMix64 finalizer; the workhorse for stream derivation and generation.
inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent stream state from a seed and a key path. Streams
// keyed by (seed, unit index) or (seed, tag, tree index) make generation
// order-free: any worker can produce any unit's draws.
inline uint64_t derive_stream(uint64_t seed, std::initializer_list<uint64_t> keys) {
  uint64_t s = mix64(seed ^ 0x6A09E667F3BCC908ULL);
  for (uint64_t k : keys) s = mix64(s ^ mix64(k));
  return s;
}

// Small self-contained generator; sequential within a stream, deterministic
// across platforms and thread schedules.
class Rng {
 public:
  explicit Rng(uint64_t stream_state) : state_(stream_state) {}
  Rng(uint64_t seed, std::initializer_list<uint64_t> keys) : state_(derive_stream(seed, keys)) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n > 0. Lemire multiply-shift.
  uint64_t bounded(uint64_t n) {
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller (trigonometric form: fixed draw count per call).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Standard logistic scaled by `scale`.
  double logistic(double scale) {
    double u = uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    if (u >= 1.0) u = 1.0 - 0x1.0p-53;
    return scale * std::log(u / (1.0 - u));
  }

  // Draws an index from cumulative weights (last entry must be ~1).
  size_t categorical(const std::vector<double>& cumulative) {
    const double u = uniform();
    for (size_t i = 0; i + 1 < cumulative.size(); ++i) {
      if (u < cumulative[i]) return i;
    }
    return cumulative.size() - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

}  // namespace hte

#endif  // HTE_RNG_HPP_
