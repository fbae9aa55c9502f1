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

#ifndef TRAINWRECK_NN_TRAINER_HPP_
#define TRAINWRECK_NN_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "trainwreck/data/image_dataset.hpp"
#include "trainwreck/nn/network.hpp"

namespace trainwreck::nn {

// Momentum SGD with cosine learning-rate decay over all steps.
struct TrainingConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool cosine_schedule = true;
  // Only the classification head is updated (finetuning).
  bool head_only = false;
  std::uint64_t seed = 0;
};

// Called after every epoch with the 1-based epoch number.
using EpochCallback = std::function<void(std::size_t epoch, const Network& network)>;

// Throws ConfigurationError for zero epochs or a shape mismatch and
// TrainingDivergedError when the loss becomes non-finite.
void train(Network& network, const data::ImageDataset& dataset, const TrainingConfig& config,
           const EpochCallback& on_epoch = {});

Batch make_batch(const data::ImageDataset& dataset, std::span<const std::size_t> indices);

std::vector<int> predict(const Network& network, const data::ImageDataset& dataset,
                         std::size_t batch_size = 256);

// Top-1 accuracy in [0, 1].
double accuracy(const Network& network, const data::ImageDataset& dataset);

}  // namespace trainwreck::nn

#endif  // TRAINWRECK_NN_TRAINER_HPP_
