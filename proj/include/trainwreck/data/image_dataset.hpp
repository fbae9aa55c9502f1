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

#ifndef TRAINWRECK_DATA_IMAGE_DATASET_HPP_
#define TRAINWRECK_DATA_IMAGE_DATASET_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trainwreck::data {

enum class Split { kTrain, kTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

// Precision the records were stored at before loading. Hashing quantizes to
// this precision so a lossless save/load cycle cannot change a digest.
enum class StoragePrecision { kUint8, kFloat32 };

std::string_view to_string(StoragePrecision precision);
StoragePrecision parse_precision(std::string_view text);

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;

  std::size_t pixels() const {
    return static_cast<std::size_t>(height) * width * channels;
  }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

std::string to_string(const ImageShape& shape);

// Labeled images, channel-last (n x H x W x C), pixel values in [0, 1] and
// labels in [0, n_classes). Immutable once constructed; the constructor
// enforces every invariant.
class ImageDataset {
 public:
  ImageDataset(std::string id, Split split, ImageShape shape, int n_classes,
               std::vector<float> pixels, std::vector<int> labels,
               StoragePrecision precision = StoragePrecision::kFloat32,
               std::vector<std::uint32_t> record_ids = {});

  const std::string& id() const { return id_; }
  Split split() const { return split_; }
  const ImageShape& shape() const { return shape_; }
  int n_classes() const { return n_classes_; }
  std::size_t size() const { return labels_.size(); }
  StoragePrecision precision() const { return precision_; }

  std::span<const float> pixels() const { return pixels_; }
  std::span<const float> image(std::size_t index) const;
  std::span<const int> labels() const { return labels_; }
  int label(std::size_t index) const { return labels_.at(index); }

  // Stable identity of a record, preserved by subset() so that deleting a
  // record does not renumber the others.
  std::uint32_t record_id(std::size_t index) const { return record_ids_.at(index); }
  std::span<const std::uint32_t> record_ids() const { return record_ids_; }
  std::string record_key(std::size_t index) const;

  std::vector<std::size_t> class_counts() const;
  std::vector<std::vector<std::size_t>> indices_by_class() const;

  ImageDataset subset(std::span<const std::size_t> indices) const;
  ImageDataset with_id(std::string id) const;
  // Same records and labels with replaced pixel content.
  ImageDataset with_pixels(std::vector<float> pixels, StoragePrecision precision) const;

 private:
  std::string id_;
  Split split_;
  ImageShape shape_;
  int n_classes_;
  std::vector<float> pixels_;
  std::vector<int> labels_;
  StoragePrecision precision_;
  std::vector<std::uint32_t> record_ids_;
};

// The first `per_class` records of every class in index order; used for the
// desk-scale profile so subsets are reproducible without a seed.
ImageDataset take_per_class(const ImageDataset& dataset, std::size_t per_class,
                            const std::string& id);

}  // namespace trainwreck::data

#endif  // TRAINWRECK_DATA_IMAGE_DATASET_HPP_
