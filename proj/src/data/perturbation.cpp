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

#include "trainwreck/data/perturbation.hpp"

#include <algorithm>
#include <cmath>

#include "trainwreck/common/error.hpp"

namespace trainwreck::data {

Perturbation::Perturbation(ImageShape shape, Rational epsilon)
    : shape_(shape), epsilon_(epsilon), delta_(shape.pixels(), 0.0f) {}

Perturbation::Perturbation(ImageShape shape, Rational epsilon, std::vector<float> delta)
    : shape_(shape), epsilon_(epsilon), delta_(std::move(delta)) {
  if (delta_.size() != shape_.pixels()) {
    throw FormatError("perturbation holds " + std::to_string(delta_.size()) +
                      " values for shape " + to_string(shape_));
  }
  for (const float v : delta_) {
    if (!std::isfinite(v)) throw NumericalError("non-finite perturbation value", 0);
  }
}

double Perturbation::linf() const {
  double norm = 0.0;
  for (const float v : delta_) norm = std::max(norm, static_cast<double>(std::fabs(v)));
  return norm;
}

bool Perturbation::within_budget() const {
  // Exact: |v| * den <= num, evaluated in long double where both sides are
  // exact for float v and small budgets.
  const auto num = static_cast<long double>(epsilon_.numerator());
  const auto den = static_cast<long double>(epsilon_.denominator());
  return std::all_of(delta_.begin(), delta_.end(), [&](float v) {
    return static_cast<long double>(std::fabs(v)) * den <= num;
  });
}

bool Perturbation::is_zero() const {
  return std::all_of(delta_.begin(), delta_.end(), [](float v) { return v == 0.0f; });
}

void Perturbation::clip_to_budget() {
  const float bound = epsilon_.float_floor();
  for (float& v : delta_) v = std::clamp(v, -bound, bound);
}

}  // namespace trainwreck::data
