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

#include "trainwreck/data/image_dataset.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "trainwreck/common/error.hpp"

namespace trainwreck::data {

std::string_view to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  throw FormatError("unknown split '" + std::string(text) + "'");
}

std::string_view to_string(StoragePrecision precision) {
  return precision == StoragePrecision::kUint8 ? "uint8" : "float32";
}

StoragePrecision parse_precision(std::string_view text) {
  if (text == "uint8") return StoragePrecision::kUint8;
  if (text == "float32") return StoragePrecision::kFloat32;
  throw FormatError("unknown storage precision '" + std::string(text) + "'");
}

std::string to_string(const ImageShape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels);
}

ImageDataset::ImageDataset(std::string id, Split split, ImageShape shape, int n_classes,
                           std::vector<float> pixels, std::vector<int> labels,
                           StoragePrecision precision,
                           std::vector<std::uint32_t> record_ids)
    : id_(std::move(id)),
      split_(split),
      shape_(shape),
      n_classes_(n_classes),
      pixels_(std::move(pixels)),
      labels_(std::move(labels)),
      precision_(precision),
      record_ids_(std::move(record_ids)) {
  if (shape_.height <= 0 || shape_.width <= 0 || shape_.channels <= 0) {
    throw FormatError("dataset '" + id_ + "': invalid image shape " + to_string(shape_));
  }
  if (n_classes_ <= 0) throw FormatError("dataset '" + id_ + "': n_classes must be positive");
  if (pixels_.size() != labels_.size() * shape_.pixels()) {
    throw FormatError("dataset '" + id_ + "': " + std::to_string(labels_.size()) +
                      " labels but pixel buffer holds " +
                      std::to_string(pixels_.size()) + " values");
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= n_classes_) {
      throw FormatError("dataset '" + id_ + "': record " + std::to_string(i) +
                        " has label " + std::to_string(labels_[i]) + " outside [0, " +
                        std::to_string(n_classes_) + ")");
    }
  }
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    const float v = pixels_[i];
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw FormatError("dataset '" + id_ + "': record " +
                        std::to_string(i / shape_.pixels()) +
                        " has a pixel outside [0, 1]");
    }
  }
  if (record_ids_.empty()) {
    record_ids_.resize(labels_.size());
    std::iota(record_ids_.begin(), record_ids_.end(), 0u);
  } else if (record_ids_.size() != labels_.size()) {
    throw FormatError("dataset '" + id_ + "': record id count mismatch");
  }
}

std::span<const float> ImageDataset::image(std::size_t index) const {
  if (index >= size()) {
    throw BoundsError("image index " + std::to_string(index) + " out of range for " +
                      std::to_string(size()) + " records");
  }
  return std::span<const float>(pixels_).subspan(index * shape_.pixels(), shape_.pixels());
}

std::string ImageDataset::record_key(std::size_t index) const {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%08u", record_ids_.at(index));
  return std::string(to_string(split_)) + "/" + buffer;
}

std::vector<std::size_t> ImageDataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_classes_), 0);
  for (const int label : labels_) ++counts[static_cast<std::size_t>(label)];
  return counts;
}

std::vector<std::vector<std::size_t>> ImageDataset::indices_by_class() const {
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes_));
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    by_class[static_cast<std::size_t>(labels_[i])].push_back(i);
  }
  return by_class;
}

ImageDataset ImageDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<float> pixels;
  std::vector<int> labels;
  std::vector<std::uint32_t> ids;
  pixels.reserve(indices.size() * shape_.pixels());
  for (const std::size_t index : indices) {
    const auto img = image(index);
    pixels.insert(pixels.end(), img.begin(), img.end());
    labels.push_back(labels_[index]);
    ids.push_back(record_ids_[index]);
  }
  return ImageDataset(id_, split_, shape_, n_classes_, std::move(pixels), std::move(labels),
                      precision_, std::move(ids));
}

ImageDataset ImageDataset::with_id(std::string id) const {
  ImageDataset copy = *this;
  copy.id_ = std::move(id);
  return copy;
}

ImageDataset ImageDataset::with_pixels(std::vector<float> pixels,
                                       StoragePrecision precision) const {
  return ImageDataset(id_, split_, shape_, n_classes_, std::move(pixels), labels_, precision,
                      record_ids_);
}

ImageDataset take_per_class(const ImageDataset& dataset, std::size_t per_class,
                            const std::string& id) {
  std::vector<std::size_t> taken_per_class(static_cast<std::size_t>(dataset.n_classes()), 0);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    auto& taken = taken_per_class[static_cast<std::size_t>(dataset.label(i))];
    if (taken < per_class) {
      keep.push_back(i);
      ++taken;
    }
  }
  return dataset.subset(keep).with_id(id);
}

}  // namespace trainwreck::data
