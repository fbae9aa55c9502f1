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

#include "trainwreck/attacks/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "trainwreck/adversarial/cpup.hpp"
#include "trainwreck/adversarial/pgd.hpp"
#include "trainwreck/common/digest.hpp"
#include "trainwreck/common/error.hpp"
#include "trainwreck/common/random.hpp"
#include "trainwreck/data/poisoning.hpp"
#include "trainwreck/divergence/features.hpp"

namespace trainwreck::attacks {

namespace {

constexpr std::uint64_t kSurrogateStream = 11;
constexpr std::uint64_t kExtractorStream = 12;
constexpr std::uint64_t kTargetStream = 13;
constexpr std::uint64_t kSwapStream = 14;

constexpr std::string_view kTrainedPrefix = "trained:";

std::string training_key(const nn::TrainingConfig& t) {
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), "e%zu,b%zu,lr%.17g,m%.17g,wd%.17g,cos%d,head%d,s%llu", t.epochs,
                t.batch_size, t.learning_rate, t.momentum, t.weight_decay, t.cosine_schedule ? 1 : 0,
                t.head_only ? 1 : 0, static_cast<unsigned long long>(t.seed));
  return buffer;
}

data::PoisonRecipe empty_recipe(const data::ImageDataset& train, const AttackConfig& config) {
  data::PoisonRecipe recipe;
  recipe.dataset_id = train.id();
  recipe.attack_name = to_string(config.attack);
  recipe.poison_rate = config.poison_rate;
  recipe.epsilon = config.epsilon;
  recipe.seed = config.seed;
  return recipe;
}

void require_nonempty_classes(const data::ImageDataset& train) {
  const auto counts = train.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) throw DomainError("class " + std::to_string(c) + " has no training images");
  }
}

void require_kind(const AttackConfig& config, AttackName expected) {
  if (config.attack != expected) {
    throw ConfigurationError("config names attack '" + to_string(config.attack) + "', expected '" +
                             to_string(expected) + "'");
  }
}

std::vector<std::size_t> flatten_sorted(const std::vector<std::vector<std::size_t>>& per_class) {
  std::vector<std::size_t> all;
  for (const auto& indices : per_class) all.insert(all.end(), indices.begin(), indices.end());
  std::sort(all.begin(), all.end());
  return all;
}

// Removes and returns a uniformly drawn element.
std::size_t take_random(std::vector<std::size_t>& pool, Rng& rng) {
  const std::size_t slot = rng.uniform_index(pool.size());
  const std::size_t value = pool[slot];
  pool[slot] = pool.back();
  pool.pop_back();
  return value;
}

}  // namespace

std::string to_string(AttackName name) {
  switch (name) {
    case AttackName::kTrainwreck:
      return "trainwreck";
    case AttackName::kRandomSwap:
      return "random_swap";
    case AttackName::kJsdSwap:
      return "jsd_swap";
    case AttackName::kAdvReplace:
      return "adv_replace";
  }
  return "unknown";
}

AttackName parse_attack_name(std::string_view text) {
  for (const AttackName name :
       {AttackName::kTrainwreck, AttackName::kRandomSwap, AttackName::kJsdSwap, AttackName::kAdvReplace}) {
    if (text == to_string(name)) return name;
  }
  throw ConfigurationError("unknown attack '" + std::string(text) +
                           "' (expected trainwreck, random_swap, jsd_swap or adv_replace)");
}

bool is_swap_attack(AttackName name) { return name == AttackName::kRandomSwap || name == AttackName::kJsdSwap; }

void AttackConfig::validate() const {
  if (!(poison_rate >= 0.0 && poison_rate <= 1.0)) {
    throw DomainError("poison rate " + std::to_string(poison_rate) + " outside [0, 1]");
  }
  if (poison_rate > 0.0 && !unsafe_pi) {
    if (is_swap_attack(attack) && poison_rate > kMaxSwapRate) {
      throw DomainError(to_string(attack) + " accepts poison rates up to 0.25 (got " + std::to_string(poison_rate) +
                        "); pass the unsafe override to go beyond");
    }
    if (!is_swap_attack(attack) && poison_rate < kMinPerturbationRate) {
      throw DomainError(to_string(attack) + " accepts poison rates in [0.25, 1] (got " +
                        std::to_string(poison_rate) + "); pass the unsafe override to go below");
    }
  }
  if (epsilon.numerator() <= 0) throw ConfigurationError("epsilon must be positive");
  if (n_iter_cpup == 0 || n_iter_pgd == 0) throw ConfigurationError("iteration counts must be positive");
  if (n_bins < 2) throw ConfigurationError("at least two histogram bins are needed");
  if (extractor_id != "pixels" && extractor_id.rfind(kTrainedPrefix, 0) != 0) {
    throw ConfigurationError("unknown extractor '" + extractor_id + "' (expected pixels or trained:<architecture>)");
  }
  if (extractor_id != "pixels" &&
      !nn::is_known_architecture(extractor_id.substr(kTrainedPrefix.size()))) {
    throw ConfigurationError("unknown extractor architecture in '" + extractor_id + "'");
  }
  if (!nn::is_known_architecture(surrogate_architecture)) {
    throw ConfigurationError("unknown surrogate architecture '" + surrogate_architecture + "'");
  }
}

AttackContext::AttackContext(std::optional<std::filesystem::path> cache_dir) : cache_dir_(std::move(cache_dir)) {
  if (cache_dir_) std::filesystem::create_directories(*cache_dir_);
}

AttackContext AttackContext::from_environment() {
  const char* dir = std::getenv(kCacheDirEnv);
  if (dir == nullptr || *dir == '\0') return AttackContext();
  return AttackContext(std::filesystem::path(dir));
}

void AttackContext::warn(std::string message) {
  std::fprintf(stderr, "warning: %s\n", message.c_str());
  warnings_.push_back(std::move(message));
}

std::shared_ptr<const adversarial::Classifier> AttackContext::trained(const data::ImageDataset& train,
                                                                      const data::ImageDataset* test,
                                                                      const std::string& architecture,
                                                                      const nn::TrainingConfig& training,
                                                                      const std::string& role) {
  const std::string key = role + "|" + train.id() + "|" + architecture + "|" + training_key(training);
  if (const auto it = models_.find(key); it != models_.end()) return it->second;
  std::optional<std::filesystem::path> file;
  if (cache_dir_) file = *cache_dir_ / (role + "-" + hex_digest("sha256", key).substr(0, 24) + ".twckpt");
  std::shared_ptr<const adversarial::Classifier> model;
  if (file && std::filesystem::exists(*file)) {
    model = std::make_shared<const adversarial::Classifier>(adversarial::Classifier::load(*file));
  } else {
    auto result = adversarial::train_surrogate(train, test != nullptr ? *test : train, architecture, training);
    model = std::make_shared<const adversarial::Classifier>(std::move(result.classifier));
    if (file) model->save(*file);
  }
  models_.emplace(key, model);
  return model;
}

std::shared_ptr<const adversarial::Classifier> AttackContext::surrogate(const data::ImageDataset& train,
                                                                        const data::ImageDataset& test,
                                                                        const AttackConfig& config) {
  nn::TrainingConfig training = config.surrogate_training;
  training.seed = derive_seed(config.seed, kSurrogateStream);
  auto model = trained(train, &test, config.surrogate_architecture, training, "surrogate");
  const double floor = config.min_surrogate_accuracy_factor / static_cast<double>(train.n_classes());
  if (model->metadata().test_accuracy < floor) {
    warn("surrogate '" + config.surrogate_architecture + "' reaches test accuracy " +
         std::to_string(model->metadata().test_accuracy) + ", below the quality floor " + std::to_string(floor));
  }
  return model;
}

std::shared_ptr<const adversarial::Classifier> AttackContext::extractor(const data::ImageDataset& train,
                                                                        const AttackConfig& config) {
  if (config.extractor_id.rfind(kTrainedPrefix, 0) != 0) {
    throw ConfigurationError("extractor '" + config.extractor_id + "' is not a trained network");
  }
  nn::TrainingConfig training = config.surrogate_training;
  training.seed = derive_seed(config.seed, kExtractorStream);
  // Trained on the training split alone; its metadata accuracy is a training
  // accuracy.
  return trained(train, nullptr, config.extractor_id.substr(kTrainedPrefix.size()), training, "extractor");
}

std::shared_ptr<const divergence::DivergenceMatrix> AttackContext::divergence(const data::ImageDataset& train,
                                                                              const AttackConfig& config) {
  std::string key = train.id() + "|" + config.extractor_id + "|bins" + std::to_string(config.n_bins);
  if (config.extractor_id != "pixels") key += "|" + training_key(config.surrogate_training) + "|" +
                                              std::to_string(config.seed);
  if (const auto it = matrices_.find(key); it != matrices_.end()) return it->second;
  std::optional<std::filesystem::path> file;
  if (cache_dir_) file = *cache_dir_ / ("divergence-" + hex_digest("sha256", key).substr(0, 24) + ".txt");
  std::shared_ptr<const divergence::DivergenceMatrix> matrix;
  if (file && std::filesystem::exists(*file)) {
    matrix = std::make_shared<const divergence::DivergenceMatrix>(divergence::DivergenceMatrix::load(*file));
  } else {
    matrix = std::make_shared<const divergence::DivergenceMatrix>(compute_divergence(train, config, *this));
    if (file) matrix->save(*file);
  }
  matrices_.emplace(key, matrix);
  return matrix;
}

divergence::DivergenceMatrix compute_divergence(const data::ImageDataset& train, const AttackConfig& config,
                                                AttackContext& context) {
  require_nonempty_classes(train);
  if (config.extractor_id == "pixels") {
    return divergence::divergence_matrix(divergence::extract_features(train, divergence::PixelExtractor()),
                                         config.n_bins);
  }
  auto model = context.extractor(train, config);
  const divergence::NetworkExtractor extractor(model, config.extractor_id);
  return divergence::divergence_matrix(divergence::extract_features(train, extractor), config.n_bins);
}

data::PoisonRecipe trainwreck_attack(const data::ImageDataset& train, const data::ImageDataset& test,
                                     const AttackConfig& config, AttackContext& context) {
  require_kind(config, AttackName::kTrainwreck);
  config.validate();
  require_nonempty_classes(train);
  data::PoisonRecipe recipe = empty_recipe(train, config);
  const auto targets = data::sample_poison_targets(train, config.poison_rate,
                                                   derive_seed(config.seed, kTargetStream));
  if (std::all_of(targets.begin(), targets.end(), [](const auto& t) { return t.empty(); })) return recipe;

  const auto matrix = context.divergence(train, config);
  if (matrix->n_classes() != train.n_classes()) {
    throw DomainError("divergence matrix has " + std::to_string(matrix->n_classes()) + " classes, dataset has " +
                      std::to_string(train.n_classes()));
  }
  const auto surrogate = context.surrogate(train, test, config);
  adversarial::CpupConfig cpup;
  cpup.epsilon = config.epsilon;
  cpup.cpup_iterations = config.n_iter_cpup;
  cpup.pgd_iterations = config.n_iter_pgd;

  std::vector<std::string> tensor_of(train.size());
  for (int attacked = 0; attacked < train.n_classes(); ++attacked) {
    const auto& chosen = targets[static_cast<std::size_t>(attacked)];
    if (chosen.empty()) continue;
    const int closest = divergence::closest_class(*matrix, attacked);
    const std::string name = "cpup/" + std::to_string(attacked);
    recipe.add_tensor(name, adversarial::craft_cpup(train, attacked, closest, *surrogate, cpup));
    for (const std::size_t index : chosen) tensor_of[index] = name;
  }
  for (const std::size_t index : flatten_sorted(targets)) {
    recipe.edits.emplace_back(data::PerturbEdit{index, tensor_of[index]});
  }
  data::validate_recipe(recipe);
  return recipe;
}

data::PoisonRecipe random_swap_attack(const data::ImageDataset& train, const AttackConfig& config) {
  require_kind(config, AttackName::kRandomSwap);
  config.validate();
  if (train.n_classes() < 2) throw DomainError("swap attacks need at least two classes");
  data::PoisonRecipe recipe = empty_recipe(train, config);
  const std::size_t budget = data::poison_count(config.poison_rate, train.size()) / 2;
  auto pools = train.indices_by_class();
  std::size_t remaining = train.size();
  Rng rng(derive_seed(config.seed, kSwapStream));
  while (recipe.edits.size() < budget) {
    // First image uniform over all unused ones, partner uniform over the
    // unused images of the other classes.
    std::size_t pick = rng.uniform_index(remaining);
    std::size_t first_class = 0;
    while (pick >= pools[first_class].size()) pick -= pools[first_class++].size();
    const std::size_t eligible = remaining - pools[first_class].size();
    if (eligible == 0) break;
    std::size_t partner_pick = rng.uniform_index(eligible);
    std::size_t second_class = 0;
    while (second_class == first_class || partner_pick >= pools[second_class].size()) {
      if (second_class != first_class) partner_pick -= pools[second_class].size();
      ++second_class;
    }
    auto& a_pool = pools[first_class];
    auto& b_pool = pools[second_class];
    const std::size_t a = a_pool[pick];
    a_pool[pick] = a_pool.back();
    a_pool.pop_back();
    const std::size_t b = b_pool[partner_pick];
    b_pool[partner_pick] = b_pool.back();
    b_pool.pop_back();
    remaining -= 2;
    recipe.edits.emplace_back(data::SwapEdit{std::min(a, b), std::max(a, b)});
  }
  data::validate_recipe(recipe);
  return recipe;
}

data::PoisonRecipe jsd_swap_attack(const data::ImageDataset& train, const AttackConfig& config,
                                   const divergence::DivergenceMatrix& matrix) {
  require_kind(config, AttackName::kJsdSwap);
  config.validate();
  if (train.n_classes() < 2) throw DomainError("swap attacks need at least two classes");
  if (matrix.n_classes() != train.n_classes()) {
    throw DomainError("divergence matrix has " + std::to_string(matrix.n_classes()) + " classes, dataset has " +
                      std::to_string(train.n_classes()));
  }
  data::PoisonRecipe recipe = empty_recipe(train, config);
  const std::size_t budget = data::poison_count(config.poison_rate, train.size()) / 2;
  const auto minima = divergence::min_divergence(matrix);
  std::vector<int> order(static_cast<std::size_t>(train.n_classes()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return minima[static_cast<std::size_t>(a)] < minima[static_cast<std::size_t>(b)];
  });
  auto pools = train.indices_by_class();
  const auto counts = train.class_counts();
  Rng rng(derive_seed(config.seed, kSwapStream));
  for (const int c : order) {
    if (recipe.edits.size() >= budget) break;
    const int partner = divergence::closest_class(matrix, c);
    auto& own = pools[static_cast<std::size_t>(c)];
    auto& other = pools[static_cast<std::size_t>(partner)];
    std::size_t quota = data::poison_count(config.poison_rate, counts[static_cast<std::size_t>(c)]) / 2;
    quota = std::min({quota, budget - recipe.edits.size(), own.size(), other.size()});
    for (std::size_t k = 0; k < quota; ++k) {
      const std::size_t a = take_random(own, rng);
      const std::size_t b = take_random(other, rng);
      recipe.edits.emplace_back(data::SwapEdit{std::min(a, b), std::max(a, b)});
    }
  }
  data::validate_recipe(recipe);
  return recipe;
}

data::PoisonRecipe adv_replace_attack(const data::ImageDataset& train, const AttackConfig& config,
                                      const adversarial::Classifier& surrogate) {
  require_kind(config, AttackName::kAdvReplace);
  config.validate();
  require_nonempty_classes(train);
  data::PoisonRecipe recipe = empty_recipe(train, config);
  const auto chosen = flatten_sorted(data::sample_poison_targets(train, config.poison_rate,
                                                                 derive_seed(config.seed, kTargetStream)));
  adversarial::PgdConfig pgd;
  pgd.epsilon = config.epsilon;
  pgd.iterations = config.n_iter_pgd;
  pgd.mode = adversarial::PgdMode::kUntargeted;
  constexpr std::size_t kChunk = 128;
  for (std::size_t start = 0; start < chosen.size(); start += kChunk) {
    const std::span<const std::size_t> chunk =
        std::span<const std::size_t>(chosen).subspan(start, std::min(kChunk, chosen.size() - start));
    std::vector<int> labels;
    for (const std::size_t index : chunk) labels.push_back(train.label(index));
    auto deltas = adversarial::pgd_attack_batch(nn::make_batch(train, chunk), labels, surrogate, pgd);
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      char name[32];
      std::snprintf(name, sizeof(name), "adv/%08zu", chunk[k]);
      recipe.add_tensor(name, std::move(deltas[k]));
      recipe.edits.emplace_back(data::PerturbEdit{chunk[k], name});
    }
  }
  data::validate_recipe(recipe);
  return recipe;
}

data::PoisonRecipe run_attack(const data::ImageDataset& train, const data::ImageDataset& test,
                              const AttackConfig& config, AttackContext& context) {
  config.validate();
  switch (config.attack) {
    case AttackName::kTrainwreck:
      return trainwreck_attack(train, test, config, context);
    case AttackName::kRandomSwap:
      return random_swap_attack(train, config);
    case AttackName::kJsdSwap:
      if (data::poison_count(config.poison_rate, train.size()) < 2) {
        if (train.n_classes() < 2) throw DomainError("swap attacks need at least two classes");
        return empty_recipe(train, config);
      }
      return jsd_swap_attack(train, config, *context.divergence(train, config));
    case AttackName::kAdvReplace: {
      require_nonempty_classes(train);
      const auto counts = train.class_counts();
      if (std::all_of(counts.begin(), counts.end(),
                      [&](std::size_t n) { return data::poison_count(config.poison_rate, n) == 0; })) {
        return empty_recipe(train, config);
      }
      return adv_replace_attack(train, config, *context.surrogate(train, test, config));
    }
  }
  throw ConfigurationError("unhandled attack");
}

StealthReport verify_stealth(const data::ImageDataset& clean, const data::PoisonRecipe& recipe,
                             const Rational& bound) {
  StealthReport report;
  std::optional<data::ImageDataset> materialized;
  try {
    const data::ImageDataset& poisoned = materialized.emplace(data::materialize_poisoned(clean, recipe));
    report.count_preserved = poisoned.size() == clean.size();
    if (!report.count_preserved) {
      report.violations.push_back("record count changed from " + std::to_string(clean.size()) + " to " +
                                  std::to_string(poisoned.size()));
    }
    const auto before = clean.class_counts();
    const auto after = poisoned.class_counts();
    report.per_class_counts_preserved = before == after;
    for (std::size_t c = 0; c < std::min(before.size(), after.size()); ++c) {
      if (before[c] != after[c]) {
        report.violations.push_back("class " + std::to_string(c) + " count changed from " +
                                    std::to_string(before[c]) + " to " + std::to_string(after[c]));
      }
    }
  } catch (const Error& e) {
    report.violations.push_back(std::string("recipe does not apply: ") + e.what());
  }
  const float ceiling = bound.float_floor();
  report.linf_pass = true;
  for (const data::Edit& edit : recipe.edits) {
    if (const auto* swap = std::get_if<data::SwapEdit>(&edit)) {
      report.linf_exempt = true;
      if (swap->first < clean.size() && swap->second < clean.size()) {
        const auto a = clean.image(swap->first);
        const auto b = clean.image(swap->second);
        for (std::size_t k = 0; k < a.size(); ++k) {
          report.swap_linf = std::max(report.swap_linf, static_cast<double>(std::abs(a[k] - b[k])));
        }
      }
      continue;
    }
    const auto& perturb = std::get<data::PerturbEdit>(edit);
    if (!recipe.has_tensor(perturb.tensor)) {
      report.linf_pass = false;
      report.violations.push_back("edit on record " + std::to_string(perturb.index) + " names missing tensor '" +
                                  perturb.tensor + "'");
      continue;
    }
    double linf = recipe.tensor(perturb.tensor).linf();
    if (materialized && perturb.index < clean.size()) {
      const auto a = clean.image(perturb.index);
      const auto b = materialized->image(perturb.index);
      for (std::size_t k = 0; k < a.size(); ++k) {
        linf = std::max(linf, static_cast<double>(std::abs(static_cast<long double>(b[k]) - a[k])));
      }
    }
    report.max_linf = std::max(report.max_linf, linf);
    if (!(linf <= static_cast<double>(ceiling))) {
      report.linf_pass = false;
      report.violations.push_back("edit on record " + std::to_string(perturb.index) + " (tensor '" +
                                  perturb.tensor + "') has l-inf " + std::to_string(linf * 255.0) +
                                  "/255, above " + bound.to_string());
    }
  }
  return report;
}

}  // namespace trainwreck::attacks
