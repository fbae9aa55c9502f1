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

#ifndef TRAINWRECK_EVALUATION_EVALUATION_HPP_
#define TRAINWRECK_EVALUATION_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trainwreck/adversarial/classifier.hpp"
#include "trainwreck/attacks/attacks.hpp"
#include "trainwreck/data/image_dataset.hpp"
#include "trainwreck/nn/trainer.hpp"

namespace trainwreck::evaluation {

inline constexpr std::size_t kReportWindow = 10;

struct EvaluationReport {
  // Id of the clean dataset the training split derives from.
  std::string dataset_id;
  std::string attack_name = "clean";
  double poison_rate = 0.0;
  std::string architecture_id;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  bool head_only = false;
  int n_classes = 0;
  std::vector<double> accuracy_curve;
  double reported_accuracy = 0.0;
  // NaN until a clean baseline is attached.
  double clean_reference_accuracy = std::numeric_limits<double>::quiet_NaN();
  double delta_perf = std::numeric_limits<double>::quiet_NaN();
  double wall_clock_seconds = 0.0;
  bool failed = false;
  std::string failure;
  std::size_t failed_epoch = 0;

  double random_guess() const { return n_classes > 0 ? 1.0 / n_classes : 0.0; }
};

// Best value over the last `window` entries (all entries if fewer).
double windowed_best(std::span<const double> curve, std::size_t window = kReportWindow);

struct TargetSpec {
  std::string architecture_id = "cnn-deep";
  nn::TrainingConfig training;
  // Finetune mode: start from this network's parameters and train only the
  // classification head.
  std::optional<std::filesystem::path> backbone;
};

// Trains the target from scratch (or finetunes) on `train` and records test
// accuracy after every epoch. A diverging run is returned marked failed.
EvaluationReport evaluate_target(const data::ImageDataset& train, const data::ImageDataset& test,
                                 const TargetSpec& target, std::string_view clean_dataset_id = {},
                                 std::string_view attack_name = "clean", double poison_rate = 0.0);

// Sets clean_reference_accuracy and delta_perf of `report` from `clean`.
void attach_reference(EvaluationReport& report, const EvaluationReport& clean);

// Throws ComparisonError unless both runs share dataset, architecture and
// epoch count.
double delta_perf(const EvaluationReport& clean, const EvaluationReport& attacked);

double surrogate_total_cost(double delta_perf, double duration);

struct CostSample {
  double time = 0.0;
  double cost = 0.0;
};

// Trapezoidal integral of the sampled cost curve over [0, duration].
double total_cost(std::span<const CostSample> samples, double duration);

struct EvaluationProfile {
  std::string name;
  // 0 keeps every image.
  std::size_t train_per_class = 0;
  std::size_t test_per_class = 0;
  std::size_t epochs = 0;
  std::string target_architecture;
};

EvaluationProfile desk_profile();
EvaluationProfile full_profile();
EvaluationProfile profile_by_name(std::string_view name);

// Applies the profile's subsampling.
std::pair<data::ImageDataset, data::ImageDataset> apply_profile(const EvaluationProfile& profile,
                                                                const data::ImageDataset& train,
                                                                const data::ImageDataset& test);

struct SweepConfig {
  attacks::AttackConfig attack;
  std::vector<double> poison_rates;
  TargetSpec target;
  // Concurrent training runs.
  std::size_t jobs = 1;
};

struct SweepResult {
  EvaluationReport clean;
  std::vector<EvaluationReport> runs;
};

// One recipe and one training run per poison rate plus a clean baseline.
// Failed runs are recorded and the sweep continues. The test split is
// verified against a manifest taken before the first run.
SweepResult poison_rate_sweep(const data::ImageDataset& train, const data::ImageDataset& test,
                              const SweepConfig& config, attacks::AttackContext& context);

// One JSON object per line.
std::string report_to_json_line(const EvaluationReport& report);
std::string results_table(std::span<const EvaluationReport> reports);
// Accuracy against poison rate, with the clean and random-guess levels.
std::string sweep_plot_svg(const SweepResult& result);

}  // namespace trainwreck::evaluation

#endif  // TRAINWRECK_EVALUATION_EVALUATION_HPP_
