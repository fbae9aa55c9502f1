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

#ifndef TRAINWRECK_DEFENSE_MANIFEST_HPP_
#define TRAINWRECK_DEFENSE_MANIFEST_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trainwreck/data/image_dataset.hpp"

namespace trainwreck::defense {

inline constexpr const char* kDefaultAlgorithm = "sha256";
inline constexpr int kManifestVersion = 1;

bool is_weak_algorithm(std::string_view algorithm);

// Throws WeakAlgorithmError for md5/sha1-class digests unless
// `allow_insecure`, ConfigurationError for unknown names.
void check_algorithm(std::string_view algorithm, bool allow_insecure);

struct HashManifest {
  std::string dataset_id;
  std::string algorithm = kDefaultAlgorithm;
  // Entries in record order.
  std::vector<std::pair<std::string, std::string>> entries;

  // Three comment lines followed by "<key> <hex>" lines.
  std::string serialize() const;
  static HashManifest parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static HashManifest load(const std::filesystem::path& path);

  friend bool operator==(const HashManifest&, const HashManifest&) = default;
};

// Header (magic, height, width, channels as little-endian u32), the pixels as
// little-endian float32 after quantization to the record's storage precision,
// and the label as little-endian i32. Records with equal values produce equal
// bytes whatever precision the container declares.
std::string canonical_record_bytes(const data::ImageDataset& dataset, std::size_t index);

HashManifest build_manifest(const data::ImageDataset& dataset, std::string_view algorithm = kDefaultAlgorithm,
                            bool allow_insecure = false);

// One entry per regular file below `root`, keyed by its relative path with
// forward slashes, sorted.
HashManifest build_tree_manifest(const std::filesystem::path& root, std::string_view dataset_id,
                                 std::string_view algorithm = kDefaultAlgorithm, bool allow_insecure = false);

struct VerificationReport {
  std::size_t checked = 0;
  std::vector<std::string> mismatched;
  // In the manifest but absent from the data.
  std::vector<std::string> missing;
  // In the data but absent from the manifest.
  std::vector<std::string> unexpected;

  bool pass() const { return mismatched.empty() && missing.empty() && unexpected.empty(); }
};

VerificationReport verify_manifest(const data::ImageDataset& dataset, const HashManifest& manifest,
                                   bool allow_insecure = false);
VerificationReport verify_tree(const std::filesystem::path& root, const HashManifest& manifest,
                               bool allow_insecure = false);

}  // namespace trainwreck::defense

#endif  // TRAINWRECK_DEFENSE_MANIFEST_HPP_
