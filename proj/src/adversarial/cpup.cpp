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

#include "trainwreck/adversarial/cpup.hpp"

#include <algorithm>

#include "trainwreck/adversarial/pgd.hpp"
#include "trainwreck/common/error.hpp"

namespace trainwreck::adversarial {

data::Perturbation craft_cpup(const data::ImageDataset& train, int attacked, int closest,
                              const Classifier& surrogate, const CpupConfig& config, CpupStats* stats) {
  if (attacked == closest) throw DomainError("CPUP attacked and closest class are both " + std::to_string(attacked));
  if (attacked < 0 || attacked >= train.n_classes() || closest < 0 || closest >= train.n_classes()) {
    throw DomainError("CPUP class index out of range");
  }
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.label(i) == attacked) members.push_back(i);
  }
  if (members.empty()) throw DomainError("class " + std::to_string(attacked) + " has no training images");

  PgdConfig pgd;
  pgd.epsilon = config.epsilon;
  pgd.iterations = config.pgd_iterations;
  pgd.step_size = config.pgd_step_size;
  pgd.mode = PgdMode::kTargeted;

  data::Perturbation cpup(train.shape(), config.epsilon);
  auto accumulated = cpup.mutable_delta();
  const float bound = config.epsilon.float_floor();
  std::vector<float> composite(train.shape().pixels());
  CpupStats local;
  for (std::size_t pass = 0; pass < config.cpup_iterations; ++pass) {
    for (const std::size_t index : members) {
      const auto image = train.image(index);
      for (std::size_t k = 0; k < composite.size(); ++k) {
        composite[k] = std::clamp(image[k] + accumulated[k], 0.0f, 1.0f);
      }
      ++local.visited;
      if (surrogate.predict(composite) != attacked) continue;
      const auto step = config.pgd_from_composite
                            ? pgd_attack(composite, closest, surrogate, pgd)
                            : pgd_attack(image, closest, surrogate, pgd);
      const auto delta = step.delta();
      for (std::size_t k = 0; k < accumulated.size(); ++k) {
        accumulated[k] = std::clamp(accumulated[k] + delta[k], -bound, bound);
      }
      ++local.updates;
    }
  }
  if (stats != nullptr) *stats = local;
  return cpup;
}

}  // namespace trainwreck::adversarial
