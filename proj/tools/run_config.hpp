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

#ifndef TRAINWRECK_TOOLS_RUN_CONFIG_HPP_
#define TRAINWRECK_TOOLS_RUN_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trainwreck/attacks/attacks.hpp"
#include "trainwreck/evaluation/evaluation.hpp"

namespace trainwreck::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitPipeline = 2;
inline constexpr int kExitTampered = 3;

struct RunConfig {
  std::string train_source;
  std::string test_source;
  std::filesystem::path output_dir = "trainwreck-out";
  std::uint64_t seed = 0;
  std::string profile = "desk";
  attacks::AttackConfig attack;
  std::vector<double> poison_rates{0.25};
  std::optional<std::size_t> surrogate_epochs;
  evaluation::TargetSpec target;
  std::optional<std::size_t> target_epochs;
  std::optional<std::filesystem::path> recipe;
  std::optional<std::filesystem::path> poisoned;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> tree;
  std::string digest = "sha256";
  bool allow_insecure_digest = false;
  std::size_t jobs = 1;
  bool dry_run = false;
};

// Flags that override config values.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> poison_rates;
  std::optional<std::string> epsilon;
  std::optional<std::string> profile;
  std::optional<std::size_t> jobs;
  bool dry_run = false;
  bool unsafe_pi = false;
};

// Parses a JSON config; relative paths resolve against `base_dir`. Unknown
// keys and malformed values raise ConfigurationError.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

void apply_overrides(RunConfig& config, const Overrides& overrides);

std::vector<double> parse_rate_list(std::string_view text);

// Fills derived fields (epochs from the profile, seeds) and checks that every
// input path exists. Throws ConfigurationError.
void finalize(RunConfig& config);

// Directory that must never receive outputs: where the clean data lives.
std::optional<std::filesystem::path> source_directory(const std::string& source);

// Throws ConfigurationError if `output` is inside a dataset source directory.
void check_output_path(const RunConfig& config, const std::filesystem::path& output);

// Resolved configuration as JSON, for --dry-run.
std::string describe(const RunConfig& config);

}  // namespace trainwreck::cli

#endif  // TRAINWRECK_TOOLS_RUN_CONFIG_HPP_
