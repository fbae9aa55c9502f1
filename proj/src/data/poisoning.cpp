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

#include "trainwreck/data/poisoning.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "trainwreck/common/error.hpp"
#include "trainwreck/common/random.hpp"

namespace trainwreck::data {

std::size_t poison_count(double poison_rate, std::size_t count) {
  if (!(poison_rate >= 0.0 && poison_rate <= 1.0)) {
    throw DomainError("poison rate " + std::to_string(poison_rate) + " outside [0, 1]");
  }
  const double scaled = poison_rate * static_cast<double>(count);
  // Products within a relative 1e-9 of an integer are treated as that
  // integer, absorbing decimal representation error in the rate.
  return std::min(count, static_cast<std::size_t>(std::floor(scaled * (1.0 + 1e-9) + 1e-12)));
}

std::vector<std::vector<std::size_t>> sample_poison_targets(const ImageDataset& dataset,
                                                            double poison_rate,
                                                            std::uint64_t seed) {
  if (!(poison_rate >= 0.0 && poison_rate <= 1.0)) {
    throw DomainError("poison rate " + std::to_string(poison_rate) + " outside [0, 1]");
  }
  if (dataset.split() != Split::kTrain) {
    throw DomainError("poison targets are drawn from a train split, got '" +
                      std::string(to_string(dataset.split())) + "'");
  }
  Rng rng(seed);
  auto by_class = dataset.indices_by_class();
  std::vector<std::vector<std::size_t>> targets(by_class.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    targets[c] = rng.sample(by_class[c], poison_count(poison_rate, by_class[c].size()));
    std::sort(targets[c].begin(), targets[c].end());
  }
  return targets;
}

namespace {

// The rounded sum may land up to half an ulp beyond x + d; step it back so
// the stored change never exceeds |d|.
float apply_delta(float x, float d) {
  float v = std::clamp(x + d, 0.0f, 1.0f);
  const long double limit = std::abs(static_cast<long double>(d));
  while (std::abs(static_cast<long double>(v) - static_cast<long double>(x)) > limit) {
    v = std::nextafter(v, x);
  }
  return v;
}

}  // namespace

ImageDataset materialize_poisoned(const ImageDataset& dataset, const PoisonRecipe& recipe) {
  if (recipe.dataset_id != dataset.id()) {
    throw IdentityError("recipe for dataset '" + recipe.dataset_id +
                        "' cannot be applied to '" + dataset.id() + "'");
  }
  const std::size_t stride = dataset.shape().pixels();
  std::unordered_set<std::size_t> touched;
  for (const std::size_t index : recipe.touched_indices()) {
    if (index >= dataset.size()) {
      throw BoundsError("edit index " + std::to_string(index) + " out of range for " +
                        std::to_string(dataset.size()) + " records");
    }
    if (!touched.insert(index).second) {
      throw DomainError("record " + std::to_string(index) + " is edited more than once");
    }
  }
  std::vector<float> pixels(dataset.pixels().begin(), dataset.pixels().end());
  bool perturbed = false;
  for (const Edit& edit : recipe.edits) {
    if (const auto* perturb = std::get_if<PerturbEdit>(&edit)) {
      const Perturbation& p = recipe.tensor(perturb->tensor);
      if (!(p.shape() == dataset.shape())) {
        throw FormatError("tensor '" + perturb->tensor + "' has shape " +
                          to_string(p.shape()) + ", dataset images are " +
                          to_string(dataset.shape()));
      }
      float* image = pixels.data() + perturb->index * stride;
      const auto delta = p.delta();
      for (std::size_t k = 0; k < stride; ++k) {
        image[k] = apply_delta(image[k], delta[k]);
      }
      perturbed = true;
    } else {
      const auto& swap = std::get<SwapEdit>(edit);
      std::swap_ranges(pixels.begin() + static_cast<std::ptrdiff_t>(swap.first * stride),
                       pixels.begin() + static_cast<std::ptrdiff_t>((swap.first + 1) * stride),
                       pixels.begin() + static_cast<std::ptrdiff_t>(swap.second * stride));
    }
  }
  const auto precision = perturbed ? StoragePrecision::kFloat32 : dataset.precision();
  return dataset.with_pixels(std::move(pixels), precision);
}

}  // namespace trainwreck::data
