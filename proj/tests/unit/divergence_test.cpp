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


#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "gtest/gtest.h"
#include "jsd_oracle.hpp"
#include "test_support.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/random.hpp"
#include "trainwreck/divergence/divergence.hpp"
#include "trainwreck/divergence/features.hpp"

namespace trainwreck::divergence {
namespace {

FeatureMatrix one_feature(const std::vector<std::vector<float>>& classes) {
  std::vector<float> values;
  std::vector<int> labels;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const float v : classes[c]) {
      values.push_back(v);
      labels.push_back(static_cast<int>(c));
    }
  }
  return FeatureMatrix(values, 1, labels, static_cast<int>(classes.size()), "test");
}

TEST(HistogramTest, TwoPointAndPooledExamples) {
  const auto uniform = class_histograms(one_feature({{0.0f, 1.0f}}), {}, 2);
  EXPECT_EQ(std::vector<double>(uniform.histogram(0, 0).begin(), uniform.histogram(0, 0).end()),
            (std::vector<double>{0.5, 0.5}));

  const int pair[] = {0, 1};
  const auto pooled = class_histograms(one_feature({{0.0f}, {1.0f}}), pair, 2);
  EXPECT_EQ(std::vector<double>(pooled.mixed(0).begin(), pooled.mixed(0).end()), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(pooled.histogram(0, 0)[0], 1.0);
  EXPECT_EQ(pooled.histogram(1, 0)[1], 1.0);

  // Pooled counts, not the mean of the two histograms.
  const auto uneven = class_histograms(one_feature({{0.0f}, {1.0f, 1.0f, 1.0f}}), pair, 2);
  EXPECT_DOUBLE_EQ(uneven.mixed(0)[0], 0.25);
  EXPECT_DOUBLE_EQ(uneven.mixed(0)[1], 0.75);
}

TEST(HistogramTest, RandomClassMatchesBruteForceBinning) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    std::vector<float> values(100);
    for (auto& v : values) {
      v = static_cast<float>(rng.uniform(-3.0, 3.0));
      if (seed % 2 == 0) v = std::round(v * 4.0f) / 4.0f;
    }
    const auto set = class_histograms(one_feature({values}), {}, 10);
    const std::vector<long double> wide(values.begin(), values.end());
    const auto lo = *std::min_element(wide.begin(), wide.end());
    const auto hi = *std::max_element(wide.begin(), wide.end());
    const auto expected = testing::oracle_histogram(wide, lo, hi, 10);
    double sum = 0.0;
    for (std::size_t b = 0; b < 10; ++b) {
      EXPECT_EQ(set.histogram(0, 0)[b], static_cast<double>(expected[b])) << "seed " << seed << " bin " << b;
      EXPECT_GE(set.histogram(0, 0)[b], 0.0);
      sum += set.histogram(0, 0)[b];
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(HistogramTest, ConstantFeatureIsDegenerate) {
  const FeatureMatrix features({2.0f, 0.0f, 2.0f, 1.0f}, 2, {0, 1}, 2, "test");
  const auto set = class_histograms(features, {}, 4);
  EXPECT_TRUE(set.degenerate[0]);
  EXPECT_FALSE(set.degenerate[1]);
  EXPECT_EQ(set.histogram(0, 0)[0], 1.0);
  EXPECT_EQ(set.histogram(1, 0)[0], 1.0);
  EXPECT_EQ(jsd_pair(features, 0, 1, 4), jsd_pair(FeatureMatrix({0.0f, 1.0f}, 1, {0, 1}, 2, "x"), 0, 1, 4));
}

TEST(HistogramTest, Errors) {
  const auto features = one_feature({{0.0f}, {}});
  EXPECT_THROW(class_histograms(features, {}, 2), DomainError);
  const int bad[] = {0, 5};
  EXPECT_THROW(class_histograms(one_feature({{0.0f}, {1.0f}}), bad, 2), DomainError);
  EXPECT_THROW(class_histograms(one_feature({{0.0f}, {1.0f}}), {}, 1), DomainError);
}

TEST(JsdTest, IdenticalClassesAreZeroAndDisjointAreLn2) {
  EXPECT_NEAR(jsd_pair(one_feature({{0.1f, 0.5f, 0.7f}, {0.7f, 0.1f, 0.5f}}), 0, 1, 8), 0.0, 1e-6);
  EXPECT_NEAR(jsd_pair(one_feature({{0.0f, 0.0f}, {1.0f, 1.0f}}), 0, 1, 2), std::log(2.0), 1e-9);
}

TEST(JsdTest, SmallRandomInstanceMatchesOracle) {
  Rng rng(77);
  std::vector<float> values;
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 20; ++r) {
      for (int f = 0; f < 3; ++f) values.push_back(static_cast<float>(rng.uniform(0.0, 1.0) + 0.2 * c * f));
      labels.push_back(c);
    }
  }
  const FeatureMatrix features(values, 3, labels, 2, "test");
  const double d = jsd_pair(features, 0, 1, 5);
  EXPECT_NEAR(d, static_cast<double>(testing::oracle_jsd(features, 0, 1, 5)), 1e-9);
  EXPECT_GT(d, 0.0);
  EXPECT_TRUE(std::isfinite(d));
}

TEST(JsdTest, Errors) {
  const auto features = one_feature({{0.0f}, {1.0f}, {}});
  EXPECT_THROW(jsd_pair(features, 1, 1, 4), DomainError);
  EXPECT_THROW(jsd_pair(features, 0, 3, 4), DomainError);
  EXPECT_THROW(jsd_pair(features, 0, 2, 4), DomainError);
  EXPECT_THROW(jsd_pair(features, 0, 1, 1), DomainError);
  EXPECT_THROW(divergence_matrix(features, 4), DomainError);
}

TEST(JsdTest, TranslationAwayNeverDecreasesDivergenceOnDenseClasses) {
  const std::pair<int, std::size_t> cases[] = {{100, 2}, {100, 6}, {1000, 2}, {1000, 6}, {1000, 64}};
  for (const auto& [n, bins] : cases) {
    double previous = -1.0;
    for (int step = 0; step <= 200; ++step) {
      std::vector<float> a, b;
      for (int i = 0; i < n; ++i) {
        a.push_back((static_cast<float>(i) + 0.5f) / static_cast<float>(n));
        b.push_back(a.back() + 0.01f * static_cast<float>(step));
      }
      const auto features = one_feature({a, b});
      const double d = jsd_pair(features, 0, 1, bins);
      if (step % 20 == 0) EXPECT_NEAR(d, static_cast<double>(testing::oracle_jsd(features, 0, 1, bins)), 1e-9);
      EXPECT_GE(d, previous - 1e-12) << n << " points, " << bins << " bins, step " << step;
      previous = d;
    }
    EXPECT_NEAR(previous, std::log(2.0), 1e-9);
  }
}

// Few points per bin: the shifting pooled bin edges make the estimate noisy
// under translation, but it still agrees with the oracle and stays in
// [0, ln 2].
TEST(JsdTest, SparseTranslationsMatchOracleAndStayBounded) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<float> a(15), b(15);
    for (auto& v : a) v = static_cast<float>(rng.uniform(0.0, 1.0));
    for (auto& v : b) v = static_cast<float>(rng.uniform(0.0, 1.0));
    for (int step = 0; step <= 40; ++step) {
      std::vector<float> moved = b;
      for (auto& v : moved) v += 0.05f * static_cast<float>(step);
      const auto features = one_feature({a, moved});
      const double d = jsd_pair(features, 0, 1, 6);
      EXPECT_NEAR(d, static_cast<double>(testing::oracle_jsd(features, 0, 1, 6)), 1e-9);
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, std::log(2.0) + 1e-9);
    }
  }
}

TEST(MatrixTest, RandomInstancesMatchOracle) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto features = testing::random_features(seed);
    const std::size_t bins = 2 + seed % 7;
    const auto matrix = divergence_matrix(features, bins);
    ASSERT_EQ(matrix.n_classes(), features.n_classes());
    EXPECT_EQ(matrix.bin_count(), bins);
    EXPECT_EQ(matrix.extractor_id(), "oracle");
    for (int i = 0; i < matrix.n_classes(); ++i) {
      EXPECT_EQ(matrix.at(i, i), 0.0);
      for (int j = 0; j < matrix.n_classes(); ++j) {
        EXPECT_GE(matrix.at(i, j), 0.0);
        EXPECT_LE(std::abs(matrix.at(i, j) - matrix.at(j, i)), 1e-9);
        if (i == j) continue;
        EXPECT_NEAR(matrix.at(i, j), static_cast<double>(testing::oracle_jsd(features, i, j, bins)), 1e-9)
            << "seed " << seed;
        EXPECT_EQ(matrix.at(i, j), jsd_pair(features, i, j, bins));
      }
    }
  }
}

TEST(MatrixTest, IdenticalAndDisjointClasses) {
  const auto twins = divergence_matrix(one_feature({{0.1f, 0.9f}, {0.9f, 0.1f}}), 4);
  EXPECT_EQ(std::vector<double>(twins.values().begin(), twins.values().end()), (std::vector<double>(4, 0.0)));

  const auto three = divergence_matrix(one_feature({{0.1f, 0.2f}, {0.2f, 0.1f}, {5.0f, 5.1f}}), 8);
  EXPECT_NEAR(three.at(0, 1), 0.0, 1e-12);
  EXPECT_GT(three.at(0, 2), three.at(0, 1));
  EXPECT_DOUBLE_EQ(three.at(0, 2), three.at(1, 2));
  EXPECT_EQ(closest_class(three, 0), 1);
  EXPECT_EQ(closest_class(three, 2), 0);
}

TEST(MatrixTest, RowOrderDoesNotMatter) {
  const auto features = testing::random_features(99);
  std::vector<std::size_t> order(features.rows());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(3);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<float> values;
  std::vector<int> labels;
  for (const std::size_t r : order) {
    values.insert(values.end(), features.row(r).begin(), features.row(r).end());
    labels.push_back(features.labels()[r]);
  }
  const FeatureMatrix shuffled(values, features.n_features(), labels, features.n_classes(), "oracle");
  EXPECT_EQ(divergence_matrix(shuffled, 6), divergence_matrix(features, 6));
}

TEST(MatrixTest, SerializationRoundTripsExactly) {
  const auto matrix = divergence_matrix(testing::random_features(4), 5);
  EXPECT_EQ(DivergenceMatrix::parse(matrix.serialize()), matrix);
  testing::TempDir dir;
  matrix.save(dir.path() / "d.txt");
  EXPECT_EQ(DivergenceMatrix::load(dir.path() / "d.txt"), matrix);

  std::string text = matrix.serialize();
  EXPECT_THROW(DivergenceMatrix::parse("trainwreck-divergence 2\n" + text.substr(text.find('\n') + 1)),
               VersionError);
  EXPECT_THROW(DivergenceMatrix::parse(text.substr(0, text.rfind('\n', text.size() - 2) + 1)), FormatError);
  EXPECT_THROW(DivergenceMatrix::parse("trainwreck-divergence 1\nn_classes 2\nbin_count 4\nextractor_id x\n"
                                       "0 1\n1 nan\n"),
               FormatError);
  EXPECT_THROW(DivergenceMatrix::parse("trainwreck-divergence 1\nn_classes 2\nbin_count 4\nextractor_id x\n"
                                       "0 1 2\n1 0\n"),
               FormatError);
}

DivergenceMatrix from_rows(int k, std::vector<double> values) { return DivergenceMatrix(k, 4, "test", values); }

TEST(ClosestClassTest, ArgminWithLowestIndexTieBreak) {
  EXPECT_EQ(closest_class(from_rows(3, {0, 3.0, 1.5, 3.0, 0, 1, 1.5, 1, 0}), 0), 2);
  EXPECT_EQ(closest_class(from_rows(3, {0, 2.0, 2.0, 2.0, 0, 1, 2.0, 1, 0}), 0), 1);
  EXPECT_THROW(closest_class(from_rows(1, {0.0}), 0), DomainError);
  EXPECT_THROW(closest_class(from_rows(2, {0, 1, 1, 0}), 2), BoundsError);
}

TEST(ClosestClassTest, RandomMatrixMatchesLinearScanAndIgnoresLogBase) {
  Rng rng(12);
  const int k = 10;
  std::vector<double> values(k * k, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double v = static_cast<double>(rng.uniform_index(6));
      values[i * k + j] = values[j * k + i] = v;
    }
  }
  std::vector<double> bits = values;
  for (auto& v : bits) v /= std::log(2.0);
  const auto nats = from_rows(k, values);
  const auto base2 = from_rows(k, bits);
  const auto mins = min_divergence(nats);
  for (int c = 0; c < k; ++c) {
    int expected = -1;
    for (int j = 0; j < k; ++j) {
      if (j != c && (expected < 0 || values[c * k + j] < values[c * k + expected])) expected = j;
    }
    EXPECT_EQ(closest_class(nats, c), expected);
    EXPECT_EQ(closest_class(base2, c), expected);
    EXPECT_EQ(mins[c], values[c * k + expected]);
  }
}

TEST(FeatureTest, PixelExtractorFlattensImages) {
  const data::ImageDataset two("two", data::Split::kTrain, {1, 2, 2}, 2, {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f},
                               {1, 0});
  const auto features = extract_features(two, PixelExtractor());
  EXPECT_EQ(features.rows(), 2u);
  EXPECT_EQ(features.n_features(), 4u);
  EXPECT_EQ(std::vector<float>(features.values().begin(), features.values().end()),
            std::vector<float>(two.pixels().begin(), two.pixels().end()));
  EXPECT_EQ(std::vector<int>(features.labels().begin(), features.labels().end()), (std::vector<int>{1, 0}));
  EXPECT_EQ(features.extractor_id(), "pixels");
}

TEST(FeatureTest, NetworkExtractorIsDeterministicPenultimateLayer) {
  const auto source = testing::toy_source(3, 12, 4, 8, 2);
  const auto train = testing::toy_split(source, data::Split::kTrain);
  const auto test = testing::toy_split(source, data::Split::kTest);
  auto model = std::make_shared<const adversarial::Classifier>(testing::toy_classifier(train, test, "cnn-small", 2));
  const NetworkExtractor extractor(model, "trained:cnn-small");
  const auto first = extract_features(train, extractor);
  const auto second = extract_features(train, extractor);
  EXPECT_EQ(first, second);
  EXPECT_EQ(first.rows(), train.size());
  const auto& net = model->network();
  EXPECT_EQ(first.n_features(), net.shape_after(net.head_layer() - 1).pixels());
  EXPECT_THROW(NetworkExtractor(nullptr, "none"), ConfigurationError);
}

TEST(FeatureTest, MatrixRejectsBadValues) {
  EXPECT_THROW(FeatureMatrix({0.0f, std::numeric_limits<float>::infinity()}, 1, {0, 1}, 2, "x"), NumericalError);
  EXPECT_THROW(FeatureMatrix({0.0f, 1.0f, 2.0f}, 2, {0, 1}, 2, "x"), FormatError);
  EXPECT_THROW(FeatureMatrix({0.0f, 1.0f}, 1, {0, 2}, 2, "x"), FormatError);
}

}  // namespace
}  // namespace trainwreck::divergence
