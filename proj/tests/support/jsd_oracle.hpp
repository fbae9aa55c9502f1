// Copyright 2026 The Trainwreck Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef TRAINWRECK_TESTS_SUPPORT_JSD_ORACLE_HPP_
#define TRAINWRECK_TESTS_SUPPORT_JSD_ORACLE_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "trainwreck/common/random.hpp"
#include "trainwreck/divergence/features.hpp"

namespace trainwreck::testing {

// Brute-force reference for the aggregate divergence, written without the
// library's helpers: bins by scanning the edges lo + k * (hi - lo) / B with
// exact long double products, sums in long double.
inline std::size_t oracle_bin(long double v, long double lo, long double hi, std::size_t bins) {
  const long double scaled = (v - lo) * static_cast<long double>(bins);
  const long double width = hi - lo;
  std::size_t b = 0;
  for (std::size_t k = 1; k < bins; ++k) {
    if (static_cast<long double>(k) * width <= scaled) b = k;
  }
  return b;
}

inline std::vector<long double> oracle_histogram(const std::vector<long double>& values, long double lo,
                                                 long double hi, std::size_t bins) {
  std::vector<long double> h(bins, 0.0L);
  for (const long double v : values) h[oracle_bin(v, lo, hi, bins)] += 1.0L;
  for (auto& x : h) x /= static_cast<long double>(values.size());
  return h;
}

inline long double oracle_jsd(const divergence::FeatureMatrix& features, int ci, int cj, std::size_t bins) {
  constexpr long double kSmooth = 1e-12L;
  long double total = 0.0L;
  for (std::size_t f = 0; f < features.n_features(); ++f) {
    std::vector<long double> a, b, both;
    for (std::size_t r = 0; r < features.rows(); ++r) {
      const long double v = features.at(r, f);
      if (features.labels()[r] == ci) a.push_back(v), both.push_back(v);
      if (features.labels()[r] == cj) b.push_back(v), both.push_back(v);
    }
    long double lo = both.front(), hi = both.front();
    for (const long double v : both) lo = std::fmin(lo, v), hi = std::fmax(hi, v);
    if (lo == hi) continue;
    auto p = oracle_histogram(a, lo, hi, bins);
    auto q = oracle_histogram(b, lo, hi, bins);
    auto m = oracle_histogram(both, lo, hi, bins);
    for (auto* h : {&p, &q, &m}) {
      for (auto& x : *h) x = (x + kSmooth) / (1.0L + kSmooth * static_cast<long double>(bins));
    }
    for (std::size_t k = 0; k < bins; ++k) {
      total += 0.5L * p[k] * std::log(p[k] / m[k]) + 0.5L * q[k] * std::log(q[k] / m[k]);
    }
  }
  return total;
}

// A random instance: every class nonempty, values on a coarse grid half the
// time so ties and bin edges are exercised.
inline divergence::FeatureMatrix random_features(std::uint64_t seed, int max_classes = 4, int max_points = 50,
                                                 int max_features = 5) {
  Rng rng(seed);
  const int classes = 2 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_classes - 1)));
  const auto points = static_cast<std::size_t>(
      classes + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(max_points - classes + 1))));
  const auto n_features = 1 + static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(max_features)));
  const bool grid = rng.uniform_index(2) == 0;
  std::vector<int> labels(points);
  for (std::size_t r = 0; r < points; ++r) {
    labels[r] = r < static_cast<std::size_t>(classes) ? static_cast<int>(r)
                                                      : static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(classes)));
  }
  std::vector<float> values(points * n_features);
  for (std::size_t r = 0; r < points; ++r) {
    for (std::size_t f = 0; f < n_features; ++f) {
      const double shift = 0.3 * labels[r] * static_cast<double>(f % 2);
      const double v = rng.uniform(-1.0, 1.0) + shift;
      values[r * n_features + f] = grid ? static_cast<float>(std::round(v * 8.0) / 8.0) : static_cast<float>(v);
    }
  }
  return divergence::FeatureMatrix(std::move(values), n_features, std::move(labels), classes, "oracle");
}

}  // namespace trainwreck::testing

#endif  // TRAINWRECK_TESTS_SUPPORT_JSD_ORACLE_HPP_
