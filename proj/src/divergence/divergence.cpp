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

#include "trainwreck/divergence/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"

namespace trainwreck::divergence {

namespace {

// Bin k holds values with k <= (v - lo) * n / width < k + 1; the top edge
// falls into the last bin. The quotient is corrected with exact products so
// values on an edge land in the upper bin regardless of division rounding.
std::size_t bin_of(double value, double lo, double width, std::size_t n_bins) {
  const double scaled = (value - lo) * static_cast<double>(n_bins);
  if (!(scaled > 0.0)) return 0;
  double k = std::floor(scaled / width);
  if (k * width > scaled) k -= 1.0;
  if ((k + 1.0) * width <= scaled) k += 1.0;
  return std::min(n_bins - 1, static_cast<std::size_t>(k));
}

void smooth(std::vector<double>& histogram) {
  const double total = 1.0 + kHistogramSmoothing * static_cast<double>(histogram.size());
  for (double& h : histogram) h = (h + kHistogramSmoothing) / total;
}

double kl(const std::vector<double>& p, const std::vector<double>& q) {
  double sum = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) sum += p[b] * std::log(p[b] / q[b]);
  return sum;
}

// Divergence between two row sets; the shared bin range is the pooled
// min-max per feature.
double pair_divergence(const FeatureMatrix& features, const std::vector<std::size_t>& rows_i,
                       const std::vector<std::size_t>& rows_j, std::size_t n_bins) {
  std::vector<double> hi_counts(n_bins), hj_counts(n_bins), mix(n_bins);
  const double ni = static_cast<double>(rows_i.size());
  const double nj = static_cast<double>(rows_j.size());
  double total = 0.0;
  for (std::size_t f = 0; f < features.n_features(); ++f) {
    double lo = features.at(rows_i.front(), f), hi = lo;
    for (const auto* rows : {&rows_i, &rows_j}) {
      for (const std::size_t r : *rows) {
        const double v = features.at(r, f);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    if (!(hi > lo)) continue;  // constant feature: identical single-bin histograms
    const double width = hi - lo;
    std::fill(hi_counts.begin(), hi_counts.end(), 0.0);
    std::fill(hj_counts.begin(), hj_counts.end(), 0.0);
    for (const std::size_t r : rows_i) hi_counts[bin_of(features.at(r, f), lo, width, n_bins)] += 1.0;
    for (const std::size_t r : rows_j) hj_counts[bin_of(features.at(r, f), lo, width, n_bins)] += 1.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      mix[b] = (hi_counts[b] + hj_counts[b]) / (ni + nj);
      hi_counts[b] /= ni;
      hj_counts[b] /= nj;
    }
    smooth(hi_counts);
    smooth(hj_counts);
    smooth(mix);
    total += 0.5 * kl(hi_counts, mix) + 0.5 * kl(hj_counts, mix);
  }
  // Rounding can leave a tiny negative residue for identical distributions.
  return std::max(0.0, total);
}

void check_bins(std::size_t n_bins) {
  if (n_bins < 2) throw DomainError("histograms need at least two bins, got " + std::to_string(n_bins));
}

}  // namespace

HistogramSet class_histograms(const FeatureMatrix& features, std::span<const int> classes, std::size_t n_bins) {
  check_bins(n_bins);
  HistogramSet set;
  if (classes.empty()) {
    for (int c = 0; c < features.n_classes(); ++c) set.classes.push_back(c);
  } else {
    set.classes.assign(classes.begin(), classes.end());
  }
  set.n_features = features.n_features();
  set.n_bins = n_bins;
  std::vector<std::vector<std::size_t>> rows;
  std::size_t pooled_count = 0;
  for (const int c : set.classes) {
    if (c < 0 || c >= features.n_classes()) throw DomainError("class " + std::to_string(c) + " out of range");
    rows.push_back(features.rows_of_class(c));
    if (rows.back().empty()) throw DomainError("class " + std::to_string(c) + " is empty");
    pooled_count += rows.back().size();
  }
  set.per_class.assign(set.classes.size() * set.n_features * n_bins, 0.0);
  set.pooled.assign(set.n_features * n_bins, 0.0);
  set.degenerate.assign(set.n_features, false);
  for (std::size_t f = 0; f < set.n_features; ++f) {
    double lo = features.at(rows.front().front(), f), hi = lo;
    for (const auto& class_rows : rows) {
      for (const std::size_t r : class_rows) {
        lo = std::min<double>(lo, features.at(r, f));
        hi = std::max<double>(hi, features.at(r, f));
      }
    }
    set.degenerate[f] = !(hi > lo);
    for (std::size_t slot = 0; slot < rows.size(); ++slot) {
      double* h = set.per_class.data() + (slot * set.n_features + f) * n_bins;
      for (const std::size_t r : rows[slot]) {
        const std::size_t b = set.degenerate[f] ? 0 : bin_of(features.at(r, f), lo, hi - lo, n_bins);
        h[b] += 1.0;
        set.pooled[f * n_bins + b] += 1.0;
      }
      for (std::size_t b = 0; b < n_bins; ++b) h[b] /= static_cast<double>(rows[slot].size());
    }
    for (std::size_t b = 0; b < n_bins; ++b) set.pooled[f * n_bins + b] /= static_cast<double>(pooled_count);
  }
  return set;
}

double jsd_pair(const FeatureMatrix& features, int class_i, int class_j, std::size_t n_bins) {
  check_bins(n_bins);
  if (class_i == class_j) throw DomainError("JSD of class " + std::to_string(class_i) + " with itself");
  for (const int c : {class_i, class_j}) {
    if (c < 0 || c >= features.n_classes()) throw DomainError("class " + std::to_string(c) + " out of range");
  }
  const auto rows_i = features.rows_of_class(class_i);
  const auto rows_j = features.rows_of_class(class_j);
  if (rows_i.empty()) throw DomainError("class " + std::to_string(class_i) + " is empty");
  if (rows_j.empty()) throw DomainError("class " + std::to_string(class_j) + " is empty");
  return pair_divergence(features, rows_i, rows_j, n_bins);
}

DivergenceMatrix::DivergenceMatrix(int n_classes, std::size_t bin_count, std::string extractor_id,
                                   std::vector<double> values)
    : n_classes_(n_classes), bin_count_(bin_count), extractor_id_(std::move(extractor_id)), values_(std::move(values)) {
  if (n_classes_ < 1 || values_.size() != static_cast<std::size_t>(n_classes_) * n_classes_) {
    throw FormatError("divergence matrix needs n_classes^2 values");
  }
  for (const double v : values_) {
    if (!std::isfinite(v) || v < 0.0) throw FormatError("divergence entries must be finite and non-negative");
  }
}

double DivergenceMatrix::at(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_classes_ || j >= n_classes_) throw BoundsError("divergence index out of range");
  return values_[static_cast<std::size_t>(i) * n_classes_ + j];
}

std::span<const double> DivergenceMatrix::row(int i) const {
  if (i < 0 || i >= n_classes_) throw BoundsError("divergence row out of range");
  return std::span<const double>(values_).subspan(static_cast<std::size_t>(i) * n_classes_, n_classes_);
}

std::string DivergenceMatrix::serialize() const {
  std::string out = "trainwreck-divergence 1\n";
  out += "n_classes " + std::to_string(n_classes_) + "\n";
  out += "bin_count " + std::to_string(bin_count_) + "\n";
  out += "extractor_id " + extractor_id_ + "\n";
  for (int i = 0; i < n_classes_; ++i) {
    for (int j = 0; j < n_classes_; ++j) {
      if (j > 0) out += ' ';
      out += format_exact(at(i, j));
    }
    out += '\n';
  }
  return out;
}

DivergenceMatrix DivergenceMatrix::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  const auto expect = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0) {
      throw FormatError("divergence file: expected '" + key + "' line");
    }
    return line.substr(key.size() + 1);
  };
  if (expect("trainwreck-divergence") != "1") throw VersionError("unsupported divergence file version");
  int n_classes = 0;
  std::size_t bins = 0;
  try {
    n_classes = std::stoi(expect("n_classes"));
    bins = std::stoull(expect("bin_count"));
  } catch (const std::logic_error&) {
    throw FormatError("divergence file: malformed header number");
  }
  const std::string extractor = expect("extractor_id");
  if (n_classes < 1) throw FormatError("divergence file: n_classes must be positive");
  std::vector<double> values;
  for (int i = 0; i < n_classes; ++i) {
    if (!std::getline(in, line)) throw FormatError("divergence file: missing row " + std::to_string(i));
    std::istringstream row(line);
    std::string token;
    int count = 0;
    while (row >> token) {
      try {
        values.push_back(std::stod(token));
      } catch (const std::logic_error&) {
        throw FormatError("divergence file: bad value '" + token + "' in row " + std::to_string(i));
      }
      ++count;
    }
    if (count != n_classes) throw FormatError("divergence file: row " + std::to_string(i) + " has the wrong length");
  }
  return DivergenceMatrix(n_classes, bins, extractor, std::move(values));
}

void DivergenceMatrix::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

DivergenceMatrix DivergenceMatrix::load(const std::filesystem::path& path) { return parse(read_file(path)); }

DivergenceMatrix divergence_matrix(const FeatureMatrix& features, std::size_t n_bins) {
  check_bins(n_bins);
  const int k = features.n_classes();
  std::vector<std::vector<std::size_t>> rows;
  for (int c = 0; c < k; ++c) {
    rows.push_back(features.rows_of_class(c));
    if (rows.back().empty()) throw DomainError("class " + std::to_string(c) + " has no feature rows");
  }
  std::vector<double> values(static_cast<std::size_t>(k) * k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double d = pair_divergence(features, rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)], n_bins);
      values[static_cast<std::size_t>(i) * k + j] = d;
      values[static_cast<std::size_t>(j) * k + i] = d;
    }
  }
  return DivergenceMatrix(k, n_bins, features.extractor_id(), std::move(values));
}

int closest_class(const DivergenceMatrix& matrix, int attacked) {
  if (matrix.n_classes() < 2) throw DomainError("closest class needs at least two classes");
  const auto row = matrix.row(attacked);
  int best = -1;
  for (int c = 0; c < matrix.n_classes(); ++c) {
    if (c == attacked) continue;
    if (best < 0 || row[static_cast<std::size_t>(c)] < row[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

std::vector<double> min_divergence(const DivergenceMatrix& matrix) {
  std::vector<double> mins;
  for (int c = 0; c < matrix.n_classes(); ++c) {
    mins.push_back(matrix.at(c, closest_class(matrix, c)));
  }
  return mins;
}

}  // namespace trainwreck::divergence
