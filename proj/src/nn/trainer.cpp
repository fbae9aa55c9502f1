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

#include "trainwreck/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "trainwreck/common/error.hpp"

namespace trainwreck::nn {

Batch make_batch(const data::ImageDataset& dataset, std::span<const std::size_t> indices) {
  Batch batch(indices.size(), dataset.shape());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto image = dataset.image(indices[k]);
    std::copy(image.begin(), image.end(), batch.item(k).begin());
  }
  return batch;
}

void train(Network& network, const data::ImageDataset& dataset, const TrainingConfig& config,
           const EpochCallback& on_epoch) {
  if (config.epochs == 0) throw ConfigurationError("training needs at least one epoch");
  if (config.batch_size == 0) throw ConfigurationError("batch size must be positive");
  if (!(dataset.shape() == network.input_shape())) {
    throw ConfigurationError("dataset images " + data::to_string(dataset.shape()) +
                             " do not match network input " + data::to_string(network.input_shape()));
  }
  if (static_cast<std::size_t>(dataset.n_classes()) > network.output_size()) {
    throw ConfigurationError("network has fewer outputs than the dataset has classes");
  }
  if (dataset.size() == 0) throw ConfigurationError("cannot train on an empty dataset");

  Rng rng(config.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t steps_per_epoch = (dataset.size() + config.batch_size - 1) / config.batch_size;
  const double total_steps = static_cast<double>(steps_per_epoch * config.epochs);
  const std::size_t head = network.head_layer();

  Gradients grads = network.zero_gradients();
  Gradients velocity = network.zero_gradients();
  std::vector<int> targets;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> chosen(order.data() + start, end - start);
      targets.clear();
      for (const std::size_t i : chosen) targets.push_back(dataset.label(i));

      const auto tape = network.forward_tape(make_batch(dataset, chosen));
      Batch grad_logits;
      const auto losses = softmax_cross_entropy(tape.logits(), targets, &grad_logits,
                                                1.0f / static_cast<float>(chosen.size()));
      const double mean_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / losses.size();
      if (!std::isfinite(mean_loss)) throw TrainingDivergedError("training loss is not finite", epoch);

      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0f);
      network.backward(tape, grad_logits, &grads, false);

      double lr = config.learning_rate;
      if (config.cosine_schedule) {
        lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      }
      for (std::size_t layer = 0; layer < network.layer_count(); ++layer) {
        if (config.head_only && layer != head) continue;
        auto params = network.layer_parameters(layer);
        auto& g = grads[layer];
        auto& v = velocity[layer];
        for (std::size_t k = 0; k < params.size(); ++k) {
          const float d = g[k] + static_cast<float>(config.weight_decay) * params[k];
          v[k] = static_cast<float>(config.momentum) * v[k] + d;
          params[k] -= static_cast<float>(lr) * v[k];
        }
      }
      ++step;
    }
    if (on_epoch) on_epoch(epoch, network);
  }
}

std::vector<int> predict(const Network& network, const data::ImageDataset& dataset,
                         std::size_t batch_size) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  std::vector<std::size_t> chunk;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(dataset.size(), start + batch_size); ++i) chunk.push_back(i);
    const auto predicted = argmax_rows(network.forward(make_batch(dataset, chunk)));
    labels.insert(labels.end(), predicted.begin(), predicted.end());
  }
  return labels;
}

double accuracy(const Network& network, const data::ImageDataset& dataset) {
  if (dataset.size() == 0) return 0.0;
  const auto predicted = predict(network, dataset);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) correct += predicted[i] == dataset.label(i) ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace trainwreck::nn
