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

#ifndef TRAINWRECK_ADVERSARIAL_PGD_HPP_
#define TRAINWRECK_ADVERSARIAL_PGD_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "trainwreck/adversarial/classifier.hpp"
#include "trainwreck/common/rational.hpp"
#include "trainwreck/data/perturbation.hpp"

namespace trainwreck::adversarial {

enum class PgdMode { kTargeted, kUntargeted };

struct PgdConfig {
  Rational epsilon = default_epsilon();
  std::size_t iterations = 10;
  // Defaults to 2 * epsilon / iterations, which lets the iterate cross the
  // whole ball.
  std::optional<double> step_size;
  PgdMode mode = PgdMode::kTargeted;

  double effective_step_size() const;
  // Throws ConfigurationError unless epsilon > 0, iterations >= 1, step > 0.
  void validate() const;
};

// L-infinity PGD from a zero start. Each iteration takes a signed gradient
// step (descending the loss towards `target` in targeted mode, ascending the
// loss of the true label `target` in untargeted mode), clips the delta onto
// the epsilon ball and then so that image + delta stays in [0, 1].
// `true_label`, when given in targeted mode, must differ from `target`.
data::Perturbation pgd_attack(std::span<const float> image, int target, const Classifier& model,
                              const PgdConfig& config, std::optional<int> true_label = {});

// Batched variant; images are independent, so results equal per-image calls.
std::vector<data::Perturbation> pgd_attack_batch(const nn::Batch& images, std::span<const int> targets,
                                                 const Classifier& model, const PgdConfig& config);

}  // namespace trainwreck::adversarial

#endif  // TRAINWRECK_ADVERSARIAL_PGD_HPP_
