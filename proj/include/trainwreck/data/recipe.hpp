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

#ifndef TRAINWRECK_DATA_RECIPE_HPP_
#define TRAINWRECK_DATA_RECIPE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "trainwreck/common/rational.hpp"
#include "trainwreck/data/perturbation.hpp"

namespace trainwreck::data {

inline constexpr int kRecipeFormatVersion = 1;

// Adds the named perturbation tensor to one training image.
struct PerturbEdit {
  std::size_t index = 0;
  std::string tensor;
  friend bool operator==(const PerturbEdit&, const PerturbEdit&) = default;
};

// Exchanges two training images; labels stay where they are.
struct SwapEdit {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const SwapEdit&, const SwapEdit&) = default;
};

using Edit = std::variant<PerturbEdit, SwapEdit>;

// Serializable edit list that reproduces a poisoned training set from its
// clean counterpart.
struct PoisonRecipe {
  std::string dataset_id;
  std::string attack_name;
  double poison_rate = 0.0;
  Rational epsilon = default_epsilon();
  std::uint64_t seed = 0;
  std::vector<Edit> edits;
  // Insertion-ordered so serialization is deterministic.
  std::vector<std::pair<std::string, Perturbation>> tensors;

  const Perturbation& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
  void add_tensor(std::string name, Perturbation perturbation);

  std::size_t perturb_edit_count() const;
  std::size_t swap_edit_count() const;
  // Every index touched by an edit, in edit order.
  std::vector<std::size_t> touched_indices() const;

  friend bool operator==(const PoisonRecipe&, const PoisonRecipe&) = default;
};

// Throws DomainError / FormatError when an invariant is broken: poison rate
// outside [0, 1], an index touched twice, a dangling tensor reference, a
// tensor exceeding epsilon or a shape mismatch between tensors.
void validate_recipe(const PoisonRecipe& recipe);

// Byte layout is documented in docs/recipe_format.md.
std::string serialize_recipe(const PoisonRecipe& recipe);
PoisonRecipe parse_recipe(std::string_view bytes);

void write_recipe(const PoisonRecipe& recipe, const std::filesystem::path& destination);
PoisonRecipe read_recipe(const std::filesystem::path& source);

}  // namespace trainwreck::data

#endif  // TRAINWRECK_DATA_RECIPE_HPP_
