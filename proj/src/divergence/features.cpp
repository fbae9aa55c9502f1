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

#include "trainwreck/divergence/features.hpp"

#include <cmath>

#include "trainwreck/common/error.hpp"
#include "trainwreck/nn/trainer.hpp"

namespace trainwreck::divergence {

FeatureMatrix::FeatureMatrix(std::vector<float> values, std::size_t n_features, std::vector<int> labels,
                             int n_classes, std::string extractor_id)
    : values_(std::move(values)),
      n_features_(n_features),
      labels_(std::move(labels)),
      n_classes_(n_classes),
      extractor_id_(std::move(extractor_id)) {
  if (n_features_ == 0) throw FormatError("feature matrix has no features");
  if (values_.size() != labels_.size() * n_features_) {
    throw FormatError("feature matrix has " + std::to_string(values_.size()) + " values for " +
                      std::to_string(labels_.size()) + " rows of " + std::to_string(n_features_));
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw NumericalError("non-finite feature in row " + std::to_string(k / n_features_), k / n_features_);
    }
  }
  for (const int label : labels_) {
    if (label < 0 || label >= n_classes_) throw FormatError("feature label out of range");
  }
}

std::vector<std::size_t> FeatureMatrix::rows_of_class(int c) const {
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < labels_.size(); ++r) {
    if (labels_[r] == c) rows.push_back(r);
  }
  return rows;
}

std::vector<float> PixelExtractor::features(const data::ImageDataset& dataset, std::size_t& n_features) const {
  n_features = dataset.shape().pixels();
  return std::vector<float>(dataset.pixels().begin(), dataset.pixels().end());
}

NetworkExtractor::NetworkExtractor(std::shared_ptr<const adversarial::Classifier> model, std::string id)
    : model_(std::move(model)), id_(std::move(id)) {
  if (!model_) throw ConfigurationError("network extractor without a model");
}

std::vector<float> NetworkExtractor::features(const data::ImageDataset& dataset, std::size_t& n_features) const {
  const nn::Network& net = model_->network();
  const std::size_t head = net.head_layer();
  n_features = (head == 0 ? net.input_shape() : net.shape_after(head - 1)).pixels();
  std::vector<float> out;
  out.reserve(dataset.size() * n_features);
  constexpr std::size_t kChunk = 256;
  std::vector<std::size_t> chunk;
  for (std::size_t start = 0; start < dataset.size(); start += kChunk) {
    chunk.clear();
    for (std::size_t i = start; i < std::min(dataset.size(), start + kChunk); ++i) chunk.push_back(i);
    const nn::Batch activations = net.forward_until(nn::make_batch(dataset, chunk), head);
    out.insert(out.end(), activations.values.begin(), activations.values.end());
  }
  return out;
}

FeatureMatrix extract_features(const data::ImageDataset& dataset, const FeatureExtractor& extractor) {
  std::size_t n_features = 0;
  std::vector<float> values;
  try {
    values = extractor.features(dataset, n_features);
  } catch (const Error& e) {
    throw Error("feature extractor '" + extractor.id() + "' failed: " + e.what());
  }
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!std::isfinite(values[k])) {
      const std::size_t image = n_features == 0 ? 0 : k / n_features;
      throw NumericalError("feature extractor '" + extractor.id() + "' produced a non-finite value for image " +
                               std::to_string(image), image);
    }
  }
  return FeatureMatrix(std::move(values), n_features,
                       std::vector<int>(dataset.labels().begin(), dataset.labels().end()), dataset.n_classes(),
                       extractor.id());
}

}  // namespace trainwreck::divergence
