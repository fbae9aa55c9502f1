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

#ifndef TRAINWRECK_DIVERGENCE_FEATURES_HPP_
#define TRAINWRECK_DIVERGENCE_FEATURES_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trainwreck/adversarial/classifier.hpp"
#include "trainwreck/data/image_dataset.hpp"

namespace trainwreck::divergence {

// Auxiliary features, one row per training record in dataset order.
class FeatureMatrix {
 public:
  FeatureMatrix(std::vector<float> values, std::size_t n_features, std::vector<int> labels,
                int n_classes, std::string extractor_id);

  std::size_t rows() const { return labels_.size(); }
  std::size_t n_features() const { return n_features_; }
  int n_classes() const { return n_classes_; }
  const std::string& extractor_id() const { return extractor_id_; }
  std::span<const float> values() const { return values_; }
  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(values_).subspan(r * n_features_, n_features_);
  }
  float at(std::size_t r, std::size_t f) const { return values_[r * n_features_ + f]; }
  std::span<const int> labels() const { return labels_; }
  std::vector<std::size_t> rows_of_class(int c) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::vector<float> values_;
  std::size_t n_features_;
  std::vector<int> labels_;
  int n_classes_;
  std::string extractor_id_;
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  // One row per image; deterministic.
  virtual std::vector<float> features(const data::ImageDataset& dataset, std::size_t& n_features) const = 0;
};

// Flattened pixels.
class PixelExtractor final : public FeatureExtractor {
 public:
  std::string id() const override { return "pixels"; }
  std::vector<float> features(const data::ImageDataset& dataset, std::size_t& n_features) const override;
};

// Penultimate activations (everything below the classification head) of a
// trained classifier.
class NetworkExtractor final : public FeatureExtractor {
 public:
  NetworkExtractor(std::shared_ptr<const adversarial::Classifier> model, std::string id);
  std::string id() const override { return id_; }
  std::vector<float> features(const data::ImageDataset& dataset, std::size_t& n_features) const override;

 private:
  std::shared_ptr<const adversarial::Classifier> model_;
  std::string id_;
};

// Propagates extractor failures as Error with the failing image index.
FeatureMatrix extract_features(const data::ImageDataset& dataset, const FeatureExtractor& extractor);

}  // namespace trainwreck::divergence

#endif  // TRAINWRECK_DIVERGENCE_FEATURES_HPP_
