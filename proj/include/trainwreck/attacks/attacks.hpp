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

#ifndef TRAINWRECK_ATTACKS_ATTACKS_HPP_
#define TRAINWRECK_ATTACKS_ATTACKS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trainwreck/adversarial/classifier.hpp"
#include "trainwreck/common/rational.hpp"
#include "trainwreck/data/image_dataset.hpp"
#include "trainwreck/data/recipe.hpp"
#include "trainwreck/divergence/divergence.hpp"
#include "trainwreck/nn/trainer.hpp"

namespace trainwreck::attacks {

enum class AttackName { kTrainwreck, kRandomSwap, kJsdSwap, kAdvReplace };

std::string to_string(AttackName name);
AttackName parse_attack_name(std::string_view text);
bool is_swap_attack(AttackName name);

// Soft poison-rate ranges: swap attacks up to 0.25, perturbation attacks on
// [0.25, 1]. A rate of 0 (the clean baseline) is always accepted.
inline constexpr double kMaxSwapRate = 0.25;
inline constexpr double kMinPerturbationRate = 0.25;

struct AttackConfig {
  AttackName attack = AttackName::kTrainwreck;
  double poison_rate = 0.25;
  Rational epsilon = default_epsilon();
  std::uint64_t seed = 0;
  std::size_t n_iter_cpup = 1;
  std::size_t n_iter_pgd = 10;
  // "trained:<architecture>" or "pixels".
  std::string extractor_id = "trained:cnn-small";
  std::string surrogate_architecture = "cnn-small";
  std::size_t n_bins = divergence::kDefaultBinCount;
  nn::TrainingConfig surrogate_training;
  // Surrogates below factor / n_classes test accuracy raise a warning.
  double min_surrogate_accuracy_factor = 2.0;
  bool unsafe_pi = false;

  // Throws DomainError for a rate outside [0, 1] or outside the attack's
  // range without `unsafe_pi`, ConfigurationError for other bad fields.
  void validate() const;
};

// Surrogates and divergence matrices keyed by everything they depend on, so
// a poison-rate sweep trains them once. With a cache directory the artifacts
// also persist across processes.
class AttackContext {
 public:
  explicit AttackContext(std::optional<std::filesystem::path> cache_dir = {});
  // Directory from TRAINWRECK_CACHE_DIR, if set.
  static AttackContext from_environment();

  std::shared_ptr<const adversarial::Classifier> surrogate(const data::ImageDataset& train,
                                                           const data::ImageDataset& test,
                                                           const AttackConfig& config);
  // Feature network behind a "trained:<architecture>" extractor id, seeded
  // independently of the surrogate.
  std::shared_ptr<const adversarial::Classifier> extractor(const data::ImageDataset& train,
                                                           const AttackConfig& config);
  std::shared_ptr<const divergence::DivergenceMatrix> divergence(const data::ImageDataset& train,
                                                                 const AttackConfig& config);

  const std::vector<std::string>& warnings() const { return warnings_; }
  void warn(std::string message);

 private:
  std::shared_ptr<const adversarial::Classifier> trained(const data::ImageDataset& train,
                                                         const data::ImageDataset* test,
                                                         const std::string& architecture,
                                                         const nn::TrainingConfig& training,
                                                         const std::string& role);
  std::optional<std::filesystem::path> cache_dir_;
  std::map<std::string, std::shared_ptr<const adversarial::Classifier>> models_;
  std::map<std::string, std::shared_ptr<const divergence::DivergenceMatrix>> matrices_;
  std::vector<std::string> warnings_;
};

inline constexpr const char* kCacheDirEnv = "TRAINWRECK_CACHE_DIR";

// Extracts features with the configured extractor and builds D.
divergence::DivergenceMatrix compute_divergence(const data::ImageDataset& train, const AttackConfig& config,
                                                AttackContext& context);

// Per attacked class: the closest class under D, a class-pair universal
// perturbation crafted from every image of the class and perturb edits
// applying it to floor(rate * n_class) uniformly drawn images.
data::PoisonRecipe trainwreck_attack(const data::ImageDataset& train, const data::ImageDataset& test,
                                     const AttackConfig& config, AttackContext& context);

// Up to floor(rate * n / 2) swaps between images of different classes, no
// image used twice.
data::PoisonRecipe random_swap_attack(const data::ImageDataset& train, const AttackConfig& config);

// Classes in ascending order of their smallest divergence each swap
// floor(rate * n_class / 2) random images with random images of their closest
// class, within the global floor(rate * n / 2) budget.
data::PoisonRecipe jsd_swap_attack(const data::ImageDataset& train, const AttackConfig& config,
                                   const divergence::DivergenceMatrix& matrix);

// Images drawn as for trainwreck_attack are replaced by untargeted PGD
// adversarial images against the surrogate.
data::PoisonRecipe adv_replace_attack(const data::ImageDataset& train, const AttackConfig& config,
                                      const adversarial::Classifier& surrogate);

// Dispatches on config.attack.
data::PoisonRecipe run_attack(const data::ImageDataset& train, const data::ImageDataset& test,
                              const AttackConfig& config, AttackContext& context);

struct StealthReport {
  bool count_preserved = false;
  bool per_class_counts_preserved = false;
  double max_linf = 0.0;
  bool linf_pass = false;
  // Swap edits displace whole images and are outside the perturbation bound.
  bool linf_exempt = false;
  // Largest pixel change a swap edit makes, for information.
  double swap_linf = 0.0;
  std::vector<std::string> violations;

  bool pass() const { return count_preserved && per_class_counts_preserved && linf_pass; }
};

// Never throws for violations; they are listed in the report.
StealthReport verify_stealth(const data::ImageDataset& clean, const data::PoisonRecipe& recipe,
                             const Rational& bound = default_epsilon());

}  // namespace trainwreck::attacks

#endif  // TRAINWRECK_ATTACKS_ATTACKS_HPP_
