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

#ifndef TRAINWRECK_COMMON_RATIONAL_HPP_
#define TRAINWRECK_COMMON_RATIONAL_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace trainwreck {

// Exact perturbation budget such as "8/255". Budgets are kept rational so the
// value written into recipe headers is never subject to decimal rounding.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t numerator, std::int64_t denominator);

  // Accepts "p/q", an integer "p", or a decimal such as "0.03125" (converted
  // to an exact fraction over a power of ten).
  static Rational parse(std::string_view text);

  std::int64_t numerator() const { return numerator_; }
  std::int64_t denominator() const { return denominator_; }
  double value() const;

  // Largest float that does not exceed the exact value, so a float clip
  // against this bound never overshoots the rational budget.
  float float_floor() const;

  std::string to_string() const;

  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  std::int64_t numerator_ = 0;
  std::int64_t denominator_ = 1;
};

// The stealth ceiling on perturbation strength.
inline Rational default_epsilon() { return Rational(8, 255); }

}  // namespace trainwreck

#endif  // TRAINWRECK_COMMON_RATIONAL_HPP_
