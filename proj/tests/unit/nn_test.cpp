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
#include <functional>
#include <memory>
#include <limits>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "test_support.hpp"
#include "trainwreck/adversarial/classifier.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/random.hpp"
#include "trainwreck/nn/network.hpp"
#include "trainwreck/nn/trainer.hpp"

namespace trainwreck::nn {
namespace {

double total_loss(const Network& net, const Batch& batch, const std::vector<int>& targets) {
  double sum = 0.0;
  for (const double l : softmax_cross_entropy(net.forward(batch), targets, nullptr, 1.0f)) sum += l;
  return sum;
}

struct Analytic {
  Gradients params;
  Batch input;
};

Analytic analytic_gradients(const Network& net, const Batch& batch, const std::vector<int>& targets) {
  const auto tape = net.forward_tape(batch);
  Batch grad_logits;
  softmax_cross_entropy(tape.logits(), targets, &grad_logits, 1.0f);
  Analytic out;
  out.params = net.zero_gradients();
  out.input = net.backward(tape, grad_logits, &out.params, true);
  return out;
}

Batch random_batch(std::size_t n, const Shape& shape, std::uint64_t seed) {
  Batch batch(n, shape);
  Rng rng(seed);
  for (auto& v : batch.values) v = static_cast<float>(rng.uniform(0.05, 0.95));
  return batch;
}

// Central differences at step h; the loss is re-evaluated in float, as the
// network computes it.
double central(const std::function<double(float)>& loss_at, float x, float h) {
  return (loss_at(x + h) - loss_at(x - h)) / (2.0 * static_cast<double>(h));
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    norm += b[k] * b[k];
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-12);
}

// Which side of every kink the forward pass lies on: the sign of each relu
// input and the argmax of each pooling window.
std::vector<int> kink_pattern(const Network& net, const Batch& batch) {
  const auto tape = net.forward_tape(batch);
  std::vector<int> pattern;
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Batch& in = tape.activations[l];
    if (net.layer(l).name() == "relu") {
      for (const float v : in.values) pattern.push_back(v > 0.0f);
    } else if (net.layer(l).name() == "maxpool2") {
      const auto [h, w, c] = in.shape;
      for (std::size_t n = 0; n < in.count; ++n) {
        const auto item = in.item(n);
        for (int y = 0; y + 1 < h; y += 2) {
          for (int x = 0; x + 1 < w; x += 2) {
            for (int ch = 0; ch < c; ++ch) {
              int arg = 0;
              float best = item[(y * w + x) * c + ch];
              for (int d = 1; d < 4; ++d) {
                const float v = item[((y + d / 2) * w + x + d % 2) * c + ch];
                if (v > best) best = v, arg = d;
              }
              pattern.push_back(best > 0.0f ? arg : -1);
            }
          }
        }
      }
    }
  }
  return pattern;
}

// Central differences over every parameter and input component whose +-h
// perturbation keeps the kink pattern; the rest are not differentiable at
// that step and are left out. At least half must remain.
void check_network_gradients(const std::string& architecture, const Shape& shape, int n_classes, std::uint64_t seed,
                             double tolerance, float h) {
  const Batch batch = random_batch(2, shape, 17);
  std::vector<int> targets;
  for (int i = 0; i < 2; ++i) targets.push_back(i % n_classes);
  Network net = make_network(architecture, shape, n_classes);
  net.initialize(seed);
  const Analytic analytic = analytic_gradients(net, batch, targets);
  const std::vector<int> base = kink_pattern(net, batch);

  std::vector<double> a, fd;
  std::size_t total = 0;
  const auto probe = [&](double analytic_value, const std::function<void(float)>& shift,
                         const std::function<double()>& loss, const std::function<std::vector<int>()>& pattern) {
    ++total;
    shift(h);
    const double up = loss();
    const bool up_same = pattern() == base;
    shift(-h);
    const double down = loss();
    const bool down_same = pattern() == base;
    shift(0.0f);
    if (!up_same || !down_same) return;
    a.push_back(analytic_value);
    fd.push_back((up - down) / (2.0 * static_cast<double>(h)));
  };

  for (std::size_t layer = 0; layer < net.layer_count(); ++layer) {
    const auto params = net.layer_parameters(layer);
    for (std::size_t k = 0; k < params.size(); ++k) {
      const float saved = params[k];
      probe(
          analytic.params[layer][k], [&](float d) { net.layer_parameters(layer)[k] = saved + d; },
          [&] { return total_loss(net, batch, targets); }, [&] { return kink_pattern(net, batch); });
    }
  }
  EXPECT_LT(relative_error(a, fd), tolerance) << architecture << " parameter gradient";
  EXPECT_GE(2 * a.size(), total) << architecture << " parameters near kinks";

  a.clear();
  fd.clear();
  total = 0;
  Batch shifted = batch;
  for (std::size_t k = 0; k < batch.values.size(); ++k) {
    probe(
        analytic.input.values[k], [&](float d) { shifted.values[k] = batch.values[k] + d; },
        [&] { return total_loss(net, shifted, targets); }, [&] { return kink_pattern(net, shifted); });
  }
  EXPECT_LT(relative_error(a, fd), tolerance) << architecture << " input gradient";
  EXPECT_GE(2 * a.size(), total) << architecture << " inputs near kinks";
}

TEST(GradientTest, FiveParameterToyMatchesFiniteDifferencesPerComponent) {
  const Shape shape{2, 2, 1};
  Network net = make_network("logit1", shape, 2);
  ASSERT_EQ(net.parameter_count(), 5u);
  net.initialize(3);
  const Batch batch = random_batch(4, shape, 21);
  const std::vector<int> targets{0, 1, 1, 0};
  const Analytic analytic = analytic_gradients(net, batch, targets);
  const std::size_t layer = net.head_layer();
  constexpr float kStep = 1e-2f;
  for (std::size_t k = 0; k < 5; ++k) {
    const float saved = net.layer_parameters(layer)[k];
    const double fd = central(
        [&](float v) {
          net.layer_parameters(layer)[k] = v;
          const double l = total_loss(net, batch, targets);
          net.layer_parameters(layer)[k] = saved;
          return l;
        },
        saved, kStep);
    const double g = analytic.params[layer][k];
    EXPECT_LE(std::abs(g - fd), 1e-3 * std::max(std::abs(g), std::abs(fd))) << "parameter " << k;
  }
}

TEST(GradientTest, LinearAndMlpMatchFiniteDifferences) {
  check_network_gradients("linear", {2, 2, 2}, 3, 1, 1e-3, 1e-2f);
  check_network_gradients("mlp", {2, 2, 1}, 3, 2, 5e-3, 1e-3f);
}

TEST(GradientTest, ConvolutionalNetworksMatchFiniteDifferences) {
  check_network_gradients("cnn-small", {4, 4, 2}, 3, 4, 1e-2, 1e-3f);
  check_network_gradients("cnn-deep", {8, 8, 1}, 2, 5, 1e-2, 1e-3f);
}

TEST(GradientTest, IndependentOfHeapLayout) {
  const Shape shape{32, 32, 3};
  Network net = make_network("cnn-small", shape, 10);
  net.initialize(5);
  const Batch batch = random_batch(8, shape, 1);
  const std::vector<int> targets{0, 1, 2, 3, 4, 5, 6, 7};
  const Analytic reference = analytic_gradients(net, batch, targets);
  std::vector<std::unique_ptr<char[]>> padding;
  for (int rep = 1; rep < 20; ++rep) {
    padding.emplace_back(new char[static_cast<std::size_t>(rep * 4 + 100000 * (rep % 3))]);
    const Analytic again = analytic_gradients(net, batch, targets);
    ASSERT_EQ(again.params, reference.params) << "rep " << rep;
    ASSERT_EQ(again.input.values, reference.input.values) << "rep " << rep;
  }
}

TEST(NetworkTest, ShapesParametersAndCopies) {
  Network net = make_network("cnn-small", {8, 8, 3}, 10);
  net.initialize(9);
  EXPECT_EQ(net.output_size(), 10u);
  Network copy = net;
  EXPECT_EQ(copy.flat_parameters(), net.flat_parameters());
  auto params = net.flat_parameters();
  params[0] += 1.0f;
  copy.load_parameters(params);
  EXPECT_NE(copy.flat_parameters(), net.flat_parameters());
  EXPECT_THROW(copy.load_parameters(std::vector<float>(3)), Error);
  EXPECT_THROW(make_network("resnet", {8, 8, 3}, 10), ConfigurationError);
  EXPECT_THROW(make_network("cnn-deep", {4, 4, 3}, 10), ConfigurationError);
  EXPECT_THROW(make_network("logit1", {4, 4, 3}, 3), ConfigurationError);
  const Batch batch = random_batch(2, {8, 8, 3}, 1);
  EXPECT_THROW(net.forward(random_batch(2, {4, 4, 3}, 1)), ConfigurationError);
  EXPECT_EQ(net.forward(batch).values, net.forward(batch).values);
}

TEST(SoftmaxTest, LossesAndGradientsMatchClosedForm) {
  Batch logits(1, {1, 1, 3});
  logits.values = {1.0f, 2.0f, 0.5f};
  Batch grad;
  const auto losses = softmax_cross_entropy(logits, std::vector<int>{1}, &grad, 1.0f);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(0.5);
  EXPECT_NEAR(losses[0], -std::log(std::exp(2.0) / z), 1e-6);
  EXPECT_NEAR(grad.values[0], std::exp(1.0) / z, 1e-6);
  EXPECT_NEAR(grad.values[1], std::exp(2.0) / z - 1.0, 1e-6);
  EXPECT_EQ(argmax_rows(logits), std::vector<int>{1});
}

TEST(TrainerTest, LearnsToyDataDeterministically) {
  const auto source = testing::toy_source(4, 30, 10, 8, 3);
  const auto train_set = testing::toy_split(source, data::Split::kTrain);
  const auto test_set = testing::toy_split(source, data::Split::kTest);
  Network a = make_network("mlp", train_set.shape(), 4);
  Network b = make_network("mlp", train_set.shape(), 4);
  a.initialize(1);
  b.initialize(1);
  std::vector<std::size_t> epochs_seen;
  train(a, train_set, testing::quick_training(5), [&](std::size_t e, const Network&) { epochs_seen.push_back(e); });
  train(b, train_set, testing::quick_training(5));
  EXPECT_EQ(epochs_seen, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(a.flat_parameters(), b.flat_parameters());
  EXPECT_GT(accuracy(a, test_set), 0.9);
}

TEST(TrainerTest, HeadOnlyFreezesTheBackbone) {
  const auto train_set = testing::toy_split(testing::toy_source(3, 10, 2), data::Split::kTrain);
  Network net = make_network("mlp", train_set.shape(), 3);
  net.initialize(2);
  const auto before = net.flat_parameters();
  std::vector<std::vector<float>> layers;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    layers.emplace_back(net.layer_parameters(i).begin(), net.layer_parameters(i).end());
  }
  auto config = testing::quick_training(2);
  config.head_only = true;
  train(net, train_set, config);
  EXPECT_NE(net.flat_parameters(), before);
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    if (i == net.head_layer()) continue;
    const auto now = net.layer_parameters(i);
    EXPECT_EQ(std::vector<float>(now.begin(), now.end()), layers[i]) << "layer " << i;
  }
}

TEST(TrainerTest, RejectsBadConfigAndReportsDivergence) {
  const auto train_set = testing::toy_split(testing::toy_source(3, 10, 2), data::Split::kTrain);
  Network net = make_network("mlp", train_set.shape(), 3);
  net.initialize(2);
  auto zero = testing::quick_training(0);
  EXPECT_THROW(train(net, train_set, zero), ConfigurationError);
  auto wild = testing::quick_training(3);
  wild.learning_rate = 1e30;
  wild.cosine_schedule = false;
  try {
    train(net, train_set, wild);
    FAIL() << "expected divergence";
  } catch (const TrainingDivergedError& e) {
    EXPECT_GE(e.epoch(), 1u);
  }
}

TEST(ClassifierTest, CheckpointRoundTrip) {
  testing::TempDir dir;
  const auto source = testing::toy_source(3, 10, 4);
  const auto model = testing::toy_classifier(testing::toy_split(source, data::Split::kTrain),
                                             testing::toy_split(source, data::Split::kTest), "cnn-small", 2);
  model.save(dir / "m.twckpt");
  EXPECT_TRUE(std::filesystem::exists(dir / "m.twckpt.meta.json"));
  const auto back = adversarial::Classifier::load(dir / "m.twckpt");
  EXPECT_EQ(back.network().flat_parameters(), model.network().flat_parameters());
  EXPECT_EQ(back.metadata().architecture_id, "cnn-small");
  EXPECT_EQ(back.metadata().test_accuracy, model.metadata().test_accuracy);
  EXPECT_EQ(back.n_classes(), 3);
  EXPECT_THROW(adversarial::Classifier::load(dir / "missing"), NotFoundError);
}

}  // namespace
}  // namespace trainwreck::nn
