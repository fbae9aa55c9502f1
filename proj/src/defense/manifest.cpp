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

#include "trainwreck/defense/manifest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "trainwreck/common/digest.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/io.hpp"
#include "trainwreck/data/loaders.hpp"

namespace trainwreck::defense {

namespace {

constexpr std::array<std::string_view, 6> kWeak = {"md4", "md5", "sha1", "md5-sha1", "ripemd160", "mdc2"};

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out += static_cast<char>((v >> shift) & 0xff);
}

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_lower_hex(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); });
}

VerificationReport compare(const std::vector<std::pair<std::string, std::string>>& actual,
                           const HashManifest& manifest) {
  VerificationReport report;
  std::map<std::string, std::string> expected(manifest.entries.begin(), manifest.entries.end());
  std::set<std::string> seen;
  for (const auto& [key, digest] : actual) {
    seen.insert(key);
    const auto it = expected.find(key);
    if (it == expected.end()) {
      report.unexpected.push_back(key);
      continue;
    }
    ++report.checked;
    if (it->second != digest) report.mismatched.push_back(key);
  }
  for (const auto& [key, digest] : manifest.entries) {
    if (!seen.count(key)) report.missing.push_back(key);
  }
  return report;
}

std::vector<std::pair<std::string, std::string>> tree_entries(const std::filesystem::path& root,
                                                              std::string_view algorithm) {
  if (!std::filesystem::is_directory(root)) throw NotFoundError("directory '" + root.string() + "' not found");
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string key = std::filesystem::relative(entry.path(), root).generic_string();
    entries.emplace_back(key, hex_digest(algorithm, read_file(entry.path())));
  }
  std::sort(entries.begin(), entries.end());
  return entries;
}

}  // namespace

bool is_weak_algorithm(std::string_view algorithm) {
  const std::string name = lower(algorithm);
  return std::find(kWeak.begin(), kWeak.end(), name) != kWeak.end();
}

void check_algorithm(std::string_view algorithm, bool allow_insecure) {
  if (is_weak_algorithm(algorithm) && !allow_insecure) {
    throw WeakAlgorithmError("digest '" + std::string(algorithm) +
                             "' has practical collision attacks, so a tampered record could keep its hash; "
                             "use sha256 or stronger, or pass the insecure override");
  }
  if (digest_size(algorithm) == 0) throw ConfigurationError("unknown digest algorithm '" + std::string(algorithm) + "'");
}

std::string HashManifest::serialize() const {
  std::string out = "# algorithm: " + algorithm + "\n";
  out += "# dataset_id: " + dataset_id + "\n";
  out += "# version: " + std::to_string(kManifestVersion) + "\n";
  for (const auto& [key, digest] : entries) out += key + " " + digest + "\n";
  return out;
}

HashManifest HashManifest::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  const auto header = [&](const std::string& field) {
    const std::string prefix = "# " + field + ": ";
    if (!std::getline(in, line) || line.rfind(prefix, 0) != 0) {
      throw FormatError("manifest: expected '" + prefix + "...' header line");
    }
    return line.substr(prefix.size());
  };
  HashManifest manifest;
  manifest.algorithm = header("algorithm");
  manifest.dataset_id = header("dataset_id");
  if (header("version") != std::to_string(kManifestVersion)) throw VersionError("unsupported manifest version");
  const std::size_t hex_length = 2 * digest_size(manifest.algorithm);
  if (hex_length == 0) throw FormatError("manifest: unknown algorithm '" + manifest.algorithm + "'");
  std::set<std::string> keys;
  std::size_t line_number = 3;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t space = line.find(' ');
    if (space == std::string::npos || space == 0 || line.find(' ', space + 1) != std::string::npos) {
      throw FormatError("manifest line " + std::to_string(line_number) + " is not '<key> <digest>'");
    }
    std::string key = line.substr(0, space);
    std::string digest = line.substr(space + 1);
    if (digest.size() != hex_length || !is_lower_hex(digest)) {
      throw FormatError("manifest line " + std::to_string(line_number) + ": digest is not " +
                        std::to_string(hex_length) + " lowercase hex characters");
    }
    if (!keys.insert(key).second) throw FormatError("manifest: duplicate key '" + key + "'");
    manifest.entries.emplace_back(std::move(key), std::move(digest));
  }
  return manifest;
}

void HashManifest::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

HashManifest HashManifest::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::string canonical_record_bytes(const data::ImageDataset& dataset, std::size_t index) {
  const auto image = dataset.image(index);
  const auto& shape = dataset.shape();
  std::string out = "TWREC1";
  out.reserve(out.size() + 12 + 4 * image.size() + 4);
  put_u32(out, static_cast<std::uint32_t>(shape.height));
  put_u32(out, static_cast<std::uint32_t>(shape.width));
  put_u32(out, static_cast<std::uint32_t>(shape.channels));
  const bool quantize = dataset.precision() == data::StoragePrecision::kUint8;
  for (float v : image) {
    if (quantize) v = static_cast<float>(data::quantize_to_uint8(v)) / 255.0f;
    if (v == 0.0f) v = 0.0f;  // fold -0
    put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, static_cast<std::uint32_t>(dataset.label(index)));
  return out;
}

HashManifest build_manifest(const data::ImageDataset& dataset, std::string_view algorithm, bool allow_insecure) {
  check_algorithm(algorithm, allow_insecure);
  HashManifest manifest;
  manifest.dataset_id = dataset.id();
  manifest.algorithm = std::string(algorithm);
  manifest.entries.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    manifest.entries.emplace_back(dataset.record_key(i), hex_digest(algorithm, canonical_record_bytes(dataset, i)));
  }
  return manifest;
}

HashManifest build_tree_manifest(const std::filesystem::path& root, std::string_view dataset_id,
                                 std::string_view algorithm, bool allow_insecure) {
  check_algorithm(algorithm, allow_insecure);
  HashManifest manifest;
  manifest.dataset_id = std::string(dataset_id);
  manifest.algorithm = std::string(algorithm);
  manifest.entries = tree_entries(root, algorithm);
  return manifest;
}

VerificationReport verify_manifest(const data::ImageDataset& dataset, const HashManifest& manifest,
                                   bool allow_insecure) {
  const HashManifest actual = build_manifest(dataset, manifest.algorithm, allow_insecure);
  return compare(actual.entries, manifest);
}

VerificationReport verify_tree(const std::filesystem::path& root, const HashManifest& manifest,
                               bool allow_insecure) {
  check_algorithm(manifest.algorithm, allow_insecure);
  return compare(tree_entries(root, manifest.algorithm), manifest);
}

}  // namespace trainwreck::defense
