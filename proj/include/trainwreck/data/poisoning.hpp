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

#ifndef TRAINWRECK_DATA_POISONING_HPP_
#define TRAINWRECK_DATA_POISONING_HPP_

#include <cstdint>
#include <vector>

#include "trainwreck/data/image_dataset.hpp"
#include "trainwreck/data/recipe.hpp"

namespace trainwreck::data {

// floor(rate * count), guarded against representation error so that e.g.
// 0.29 * 100 yields 29.
std::size_t poison_count(double poison_rate, std::size_t count);

// For each class, floor(rate * n_class) distinct indices of that class drawn
// uniformly without replacement, sorted ascending. Pure in (dataset, rate,
// seed).
std::vector<std::vector<std::size_t>> sample_poison_targets(
    const ImageDataset& dataset, double poison_rate, std::uint64_t seed);

// Applies a recipe: perturb edits produce clip(x + delta, 0, 1), swap edits
// exchange images in place. Untouched records are bit-identical.
ImageDataset materialize_poisoned(const ImageDataset& dataset, const PoisonRecipe& recipe);

}  // namespace trainwreck::data

#endif  // TRAINWRECK_DATA_POISONING_HPP_
