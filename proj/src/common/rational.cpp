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

#include "trainwreck/common/rational.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "trainwreck/common/error.hpp"

namespace trainwreck {

namespace {

std::int64_t parse_int(std::string_view text, std::string_view whole) {
  std::int64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && text.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) {
    throw FormatError("malformed rational '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Rational::Rational(std::int64_t numerator, std::int64_t denominator) {
  if (denominator == 0) throw DomainError("rational with zero denominator");
  if (denominator < 0) {
    numerator = -numerator;
    denominator = -denominator;
  }
  const std::int64_t g = std::gcd(numerator, denominator);
  numerator_ = numerator / (g == 0 ? 1 : g);
  denominator_ = denominator / (g == 0 ? 1 : g);
}

Rational Rational::parse(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(text.substr(0, slash), text),
                    parse_int(text.substr(slash + 1), text));
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view fraction = text.substr(dot + 1);
    if (fraction.size() > 15) {
      throw FormatError("too many decimal places in '" + std::string(text) + "'");
    }
    std::string digits(text.substr(0, dot));
    digits += fraction;
    if (digits.empty() || digits == "-" || digits == "+") {
      throw FormatError("malformed rational '" + std::string(text) + "'");
    }
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < fraction.size(); ++i) scale *= 10;
    return Rational(parse_int(digits, text), scale);
  }
  return Rational(parse_int(text, text), 1);
}

double Rational::value() const {
  return static_cast<double>(numerator_) / static_cast<double>(denominator_);
}

float Rational::float_floor() const {
  float candidate = static_cast<float>(value());
  // candidate * denominator is exact in long double for budgets of practical
  // size, so this comparison decides the rounding direction exactly.
  const auto exceeds = [this](float f) {
    return static_cast<long double>(f) * static_cast<long double>(denominator_) >
           static_cast<long double>(numerator_);
  };
  while (exceeds(candidate)) {
    candidate = std::nextafter(candidate, -std::numeric_limits<float>::infinity());
  }
  return candidate;
}

std::string Rational::to_string() const {
  return std::to_string(numerator_) + "/" + std::to_string(denominator_);
}

}  // namespace trainwreck
