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

#ifndef TRAINWRECK_ADVERSARIAL_CLASSIFIER_HPP_
#define TRAINWRECK_ADVERSARIAL_CLASSIFIER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trainwreck/data/image_dataset.hpp"
#include "trainwreck/nn/network.hpp"
#include "trainwreck/nn/trainer.hpp"

namespace trainwreck::adversarial {

struct ClassifierMetadata {
  std::string architecture_id;
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double test_accuracy = 0.0;
  bool head_only = false;
};

// A trained image classifier. Inference and gradient queries are const and
// safe to share between threads; training goes through a mutable network.
class Classifier {
 public:
  Classifier(nn::Network network, int n_classes, ClassifierMetadata metadata);

  const nn::Network& network() const { return network_; }
  nn::Network& mutable_network() { return network_; }
  int n_classes() const { return n_classes_; }
  const data::ImageShape& input_shape() const { return network_.input_shape(); }
  const ClassifierMetadata& metadata() const { return metadata_; }
  ClassifierMetadata& mutable_metadata() { return metadata_; }

  int predict(std::span<const float> image) const;
  std::vector<int> predict(const data::ImageDataset& dataset) const;

  struct LossGradient {
    std::vector<double> losses;
    nn::Batch input_gradient;
  };
  // Cross-entropy of each input against `classes` and its gradient with
  // respect to the input pixels.
  LossGradient loss_gradient(const nn::Batch& inputs, std::span<const int> classes) const;

  // Binary parameter file plus a "<path>.meta.json" metadata sidecar.
  void save(const std::filesystem::path& path) const;
  static Classifier load(const std::filesystem::path& path);

 private:
  nn::Network network_;
  int n_classes_;
  ClassifierMetadata metadata_;
};

struct TrainedClassifier {
  Classifier classifier;
  double test_accuracy;
};

// Trains `architecture_id` from scratch on `train` and reports clean top-1
// accuracy on `test`. Throws ConfigurationError on shape/class mismatches,
// unknown architectures or zero epochs.
TrainedClassifier train_surrogate(const data::ImageDataset& train, const data::ImageDataset& test,
                                  const std::string& architecture_id,
                                  const nn::TrainingConfig& config);

}  // namespace trainwreck::adversarial

#endif  // TRAINWRECK_ADVERSARIAL_CLASSIFIER_HPP_
