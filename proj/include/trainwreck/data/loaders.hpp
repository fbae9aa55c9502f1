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

#ifndef TRAINWRECK_DATA_LOADERS_HPP_
#define TRAINWRECK_DATA_LOADERS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "trainwreck/data/image_dataset.hpp"

namespace trainwreck::data {

// Environment variable naming the directory that holds registry datasets
// (cifar-10-batches-bin/, cifar-100-binary/).
inline constexpr const char* kDataDirEnv = "TRAINWRECK_DATA_DIR";

// Resolves `source`:
//   "cifar10" / "cifar100"      registry names under $TRAINWRECK_DATA_DIR
//   "synthetic:k=v,..."         generated toy data (see SyntheticSpec)
//   directory                   CIFAR-10 or CIFAR-100 binary batches
//   *.twds file                  native container written by save_dataset
// Throws NotFoundError for missing sources and FormatError naming the
// offending record for corrupt ones.
ImageDataset load_dataset(std::string_view source, Split split);

// Filesystem location behind `source`; empty for generated data.
std::optional<std::filesystem::path> source_path(std::string_view source);

// Native container; pixels stored losslessly at the dataset's precision.
void save_dataset(const ImageDataset& dataset, const std::filesystem::path& path);

// CIFAR-10 binary layout (label byte + planar RGB), pixels rounded to the
// nearest 8-bit level.
void export_cifar10_binary(const ImageDataset& dataset, const std::filesystem::path& path);

std::uint8_t quantize_to_uint8(float value);

// Parameters of the "synthetic:" registry. Every class owns a smooth random
// prototype; records are prototype + gaussian noise. `twin_pairs` makes
// classes 2k and 2k+1 share a prototype up to a small offset, giving data with
// known similar-class structure.
struct SyntheticSpec {
  int classes = 10;
  int train_per_class = 50;
  int test_per_class = 10;
  int height = 8;
  int width = 8;
  int channels = 3;
  double noise = 0.08;
  double twin_offset = 0.0;
  bool twin_pairs = false;
  std::uint64_t seed = 1;

  static SyntheticSpec parse(std::string_view text);
  std::string id() const;
};

ImageDataset make_synthetic(const SyntheticSpec& spec, Split split);

}  // namespace trainwreck::data

#endif  // TRAINWRECK_DATA_LOADERS_HPP_
