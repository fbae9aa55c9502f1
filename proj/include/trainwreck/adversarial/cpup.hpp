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

#ifndef TRAINWRECK_ADVERSARIAL_CPUP_HPP_
#define TRAINWRECK_ADVERSARIAL_CPUP_HPP_

#include <cstddef>
#include <optional>

#include "trainwreck/adversarial/classifier.hpp"
#include "trainwreck/common/rational.hpp"
#include "trainwreck/data/image_dataset.hpp"
#include "trainwreck/data/perturbation.hpp"

namespace trainwreck::adversarial {

struct CpupConfig {
  Rational epsilon = default_epsilon();
  std::size_t cpup_iterations = 1;
  std::size_t pgd_iterations = 10;
  std::optional<double> pgd_step_size;
  // Run the targeted PGD on clip(x + cpup) rather than on the clean image.
  bool pgd_from_composite = false;
};

struct CpupStats {
  // Number of images whose guard fired and contributed a PGD delta.
  std::size_t updates = 0;
  std::size_t visited = 0;
};

// Class-pair universal perturbation pushing class `attacked` towards class
// `closest`. Passes over the attacked class in ascending index order; an
// image whose composite clip(x + cpup, 0, 1) is still classified as
// `attacked` contributes its targeted PGD delta, and the accumulated
// perturbation is clipped onto [-epsilon, epsilon] after every update.
data::Perturbation craft_cpup(const data::ImageDataset& train, int attacked, int closest,
                              const Classifier& surrogate, const CpupConfig& config,
                              CpupStats* stats = nullptr);

}  // namespace trainwreck::adversarial

#endif  // TRAINWRECK_ADVERSARIAL_CPUP_HPP_
