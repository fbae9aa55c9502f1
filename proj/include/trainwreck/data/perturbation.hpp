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

#ifndef TRAINWRECK_DATA_PERTURBATION_HPP_
#define TRAINWRECK_DATA_PERTURBATION_HPP_

#include <span>
#include <vector>

#include "trainwreck/common/rational.hpp"
#include "trainwreck/data/image_dataset.hpp"

namespace trainwreck::data {

// Additive image delta bounded by epsilon in the l-infinity norm.
class Perturbation {
 public:
  Perturbation() = default;
  Perturbation(ImageShape shape, Rational epsilon);
  Perturbation(ImageShape shape, Rational epsilon, std::vector<float> delta);

  const ImageShape& shape() const { return shape_; }
  const Rational& epsilon() const { return epsilon_; }
  std::span<const float> delta() const { return delta_; }
  std::span<float> mutable_delta() { return delta_; }

  double linf() const;
  bool within_budget() const;
  bool is_zero() const;

  // Elementwise clip onto [-epsilon, epsilon].
  void clip_to_budget();

  friend bool operator==(const Perturbation&, const Perturbation&) = default;

 private:
  ImageShape shape_;
  Rational epsilon_;
  std::vector<float> delta_;
};

}  // namespace trainwreck::data

#endif  // TRAINWRECK_DATA_PERTURBATION_HPP_
