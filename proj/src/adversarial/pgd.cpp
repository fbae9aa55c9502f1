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

#include "trainwreck/adversarial/pgd.hpp"

#include <algorithm>
#include <cmath>

#include "trainwreck/common/error.hpp"

namespace trainwreck::adversarial {

double PgdConfig::effective_step_size() const {
  return step_size.value_or(2.0 * epsilon.value() / static_cast<double>(iterations));
}

void PgdConfig::validate() const {
  if (epsilon.numerator() <= 0) throw ConfigurationError("PGD epsilon must be positive");
  if (iterations == 0) throw ConfigurationError("PGD needs at least one iteration");
  if (!(effective_step_size() > 0.0)) throw ConfigurationError("PGD step size must be positive");
}

std::vector<data::Perturbation> pgd_attack_batch(const nn::Batch& images, std::span<const int> targets,
                                                 const Classifier& model, const PgdConfig& config) {
  config.validate();
  if (!(images.shape == model.input_shape())) {
    throw ConfigurationError("PGD images are " + data::to_string(images.shape) + ", model expects " +
                             data::to_string(model.input_shape()));
  }
  if (targets.size() != images.count) throw ConfigurationError("one PGD class per image is required");
  for (const float v : images.values) {
    if (!(v >= 0.0f && v <= 1.0f)) throw DomainError("PGD input image has pixels outside [0, 1]");
  }
  for (const int t : targets) {
    if (t < 0 || t >= model.n_classes()) throw DomainError("PGD class " + std::to_string(t) + " out of range");
  }

  const float bound = config.epsilon.float_floor();
  const auto step = static_cast<float>(config.effective_step_size());
  // Targeted mode walks down the loss towards the target, untargeted mode
  // walks up the loss of the true label.
  const float direction = config.mode == PgdMode::kTargeted ? -1.0f : 1.0f;

  nn::Batch delta(images.count, images.shape);
  nn::Batch composite(images.count, images.shape);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    for (std::size_t k = 0; k < composite.values.size(); ++k) {
      composite.values[k] = images.values[k] + delta.values[k];
    }
    const auto result = model.loss_gradient(composite, targets);
    const auto& grad = result.input_gradient.values;
    for (std::size_t k = 0; k < delta.values.size(); ++k) {
      const float g = grad[k];
      if (!std::isfinite(g)) throw NumericalError("non-finite PGD gradient", it);
      const float sign = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
      float d = std::clamp(delta.values[k] + direction * step * sign, -bound, bound);
      const float x = images.values[k];
      d = std::clamp(d, -x, 1.0f - x);
      delta.values[k] = d;
    }
  }

  std::vector<data::Perturbation> out;
  out.reserve(images.count);
  for (std::size_t n = 0; n < images.count; ++n) {
    const auto item = delta.item(n);
    out.emplace_back(images.shape, config.epsilon, std::vector<float>(item.begin(), item.end()));
  }
  return out;
}

data::Perturbation pgd_attack(std::span<const float> image, int target, const Classifier& model,
                              const PgdConfig& config, std::optional<int> true_label) {
  if (config.mode == PgdMode::kTargeted && true_label && *true_label == target) {
    throw DomainError("targeted PGD towards the image's own class " + std::to_string(target));
  }
  nn::Batch batch(1, model.input_shape());
  if (image.size() != batch.values.size()) {
    throw ConfigurationError("PGD image has " + std::to_string(image.size()) + " values, model expects " +
                             std::to_string(batch.values.size()));
  }
  std::copy(image.begin(), image.end(), batch.values.begin());
  const int targets[1] = {target};
  return std::move(pgd_attack_batch(batch, targets, model, config).front());
}

}  // namespace trainwreck::adversarial
