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

#ifndef TRAINWRECK_DIVERGENCE_DIVERGENCE_HPP_
#define TRAINWRECK_DIVERGENCE_DIVERGENCE_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trainwreck/divergence/features.hpp"

namespace trainwreck::divergence {

inline constexpr std::size_t kDefaultBinCount = 64;
// Added to every bin before renormalizing so KL terms stay finite.
inline constexpr double kHistogramSmoothing = 1e-12;

// Normalized per-feature histograms of a set of classes on shared bin edges
// (the pooled min-max of those classes), plus the histogram of the pooled
// data. Histograms here are unsmoothed.
struct HistogramSet {
  std::vector<int> classes;
  std::size_t n_features = 0;
  std::size_t n_bins = 0;
  // classes.size() x n_features x n_bins.
  std::vector<double> per_class;
  // n_features x n_bins, computed from pooled counts.
  std::vector<double> pooled;
  // Constant features collapse onto bin 0.
  std::vector<bool> degenerate;

  std::span<const double> histogram(std::size_t slot, std::size_t feature) const {
    return std::span<const double>(per_class).subspan((slot * n_features + feature) * n_bins, n_bins);
  }
  std::span<const double> mixed(std::size_t feature) const {
    return std::span<const double>(pooled).subspan(feature * n_bins, n_bins);
  }
};

// Throws DomainError for n_bins < 2 or an empty class. An empty `classes`
// span selects every class.
HistogramSet class_histograms(const FeatureMatrix& features, std::span<const int> classes,
                              std::size_t n_bins);

// Aggregate Jensen-Shannon divergence between two classes in nats: the sum
// over features of 0.5 KL(h_i || h_mix) + 0.5 KL(h_j || h_mix), with
// smoothed histograms.
double jsd_pair(const FeatureMatrix& features, int class_i, int class_j, std::size_t n_bins);

class DivergenceMatrix {
 public:
  DivergenceMatrix(int n_classes, std::size_t bin_count, std::string extractor_id, std::vector<double> values);

  int n_classes() const { return n_classes_; }
  std::size_t bin_count() const { return bin_count_; }
  const std::string& extractor_id() const { return extractor_id_; }
  double at(int i, int j) const;
  std::span<const double> values() const { return values_; }
  std::span<const double> row(int i) const;

  // Text export, values at 17 significant digits.
  std::string serialize() const;
  static DivergenceMatrix parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static DivergenceMatrix load(const std::filesystem::path& path);

  friend bool operator==(const DivergenceMatrix&, const DivergenceMatrix&) = default;

 private:
  int n_classes_;
  std::size_t bin_count_;
  std::string extractor_id_;
  std::vector<double> values_;
};

// Upper triangle from jsd_pair, mirrored; zero diagonal.
DivergenceMatrix divergence_matrix(const FeatureMatrix& features, std::size_t n_bins = kDefaultBinCount);

// argmin over c != attacked of D[attacked][c], lowest index on ties.
int closest_class(const DivergenceMatrix& matrix, int attacked);

// min over c != c' of D[c'][c] for every class c'.
std::vector<double> min_divergence(const DivergenceMatrix& matrix);

}  // namespace trainwreck::divergence

#endif  // TRAINWRECK_DIVERGENCE_DIVERGENCE_HPP_
