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

#include "trainwreck/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "trainwreck/common/error.hpp"

namespace trainwreck::nn {

Network::Network(Shape input, std::vector<std::unique_ptr<Layer>> layers)
    : input_shape_(input), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigurationError("network has no layers");
  shapes_.push_back(input_shape_);
  for (const auto& layer : layers_) shapes_.push_back(layer->output_shape(shapes_.back()));
}

Network::Network(const Network& other)
    : input_shape_(other.input_shape_), shapes_(other.shapes_) {
  layers_.reserve(other.layers_.size());
  for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) {
    Network copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& layer : layers_) layer->initialize(rng);
}

Batch Network::forward(const Batch& input) const {
  return forward_until(input, layers_.size());
}

Batch Network::forward_until(const Batch& input, std::size_t end_layer) const {
  if (!(input.shape == input_shape_)) {
    throw ConfigurationError("network expects input " + data::to_string(input_shape_) + ", got " +
                             data::to_string(input.shape));
  }
  Batch current = input;
  Batch next;
  for (std::size_t i = 0; i < std::min(end_layer, layers_.size()); ++i) {
    layers_[i]->forward(current, next);
    std::swap(current, next);
  }
  return current;
}

Network::Tape Network::forward_tape(Batch input) const {
  if (!(input.shape == input_shape_)) {
    throw ConfigurationError("network expects input " + data::to_string(input_shape_) + ", got " +
                             data::to_string(input.shape));
  }
  Tape tape;
  tape.activations.reserve(layers_.size() + 1);
  tape.activations.push_back(std::move(input));
  for (const auto& layer : layers_) {
    Batch out;
    layer->forward(tape.activations.back(), out);
    tape.activations.push_back(std::move(out));
  }
  return tape;
}

Batch Network::backward(const Tape& tape, const Batch& grad_logits, Gradients* param_grads,
                        bool need_input_grad) const {
  Batch grad = grad_logits;
  Batch grad_below;
  // Layers below the lowest parameterized layer only need input gradients
  // when the caller asked for them.
  std::size_t lowest_needed = 0;
  if (!need_input_grad) {
    lowest_needed = layers_.size();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (param_grads != nullptr && !layers_[i]->parameters().empty()) {
        lowest_needed = i;
        break;
      }
    }
  }
  for (std::size_t i = layers_.size(); i-- > lowest_needed;) {
    std::span<float> pg;
    if (param_grads != nullptr) pg = (*param_grads)[i];
    const bool propagate = i > lowest_needed || need_input_grad;
    layers_[i]->backward(tape.activations[i], tape.activations[i + 1], grad,
                         propagate ? &grad_below : nullptr, pg);
    if (propagate) std::swap(grad, grad_below);
  }
  return need_input_grad ? grad : Batch();
}

Gradients Network::zero_gradients() const {
  Gradients grads;
  grads.reserve(layers_.size());
  for (const auto& layer : layers_) {
    grads.emplace_back(static_cast<const Layer&>(*layer).parameters().size(), 0.0f);
  }
  return grads;
}

std::size_t Network::parameter_count() const {
  std::size_t count = 0;
  for (const auto& layer : layers_) count += static_cast<const Layer&>(*layer).parameters().size();
  return count;
}

std::vector<float> Network::flat_parameters() const {
  std::vector<float> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) {
    const auto p = static_cast<const Layer&>(*layer).parameters();
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return flat;
}

void Network::load_parameters(std::span<const float> flat) {
  if (flat.size() != parameter_count()) {
    throw FormatError("parameter buffer holds " + std::to_string(flat.size()) + " values, network has " +
                      std::to_string(parameter_count()));
  }
  std::size_t offset = 0;
  for (auto& layer : layers_) {
    auto p = layer->parameters();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), p.size(), p.begin());
    offset += p.size();
  }
}

std::size_t Network::head_layer() const {
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (!static_cast<const Layer&>(*layers_[i]).parameters().empty()) return i;
  }
  throw ConfigurationError("network has no parameterized layer");
}

std::vector<double> softmax_cross_entropy(const Batch& logits, std::span<const int> targets,
                                          Batch* grad, float scale) {
  const std::size_t k = logits.stride();
  if (targets.size() != logits.count) throw ConfigurationError("target count does not match batch");
  std::vector<double> losses(logits.count);
  if (grad != nullptr) *grad = Batch(logits.count, logits.shape);
  std::vector<double> probs(k);
  for (std::size_t n = 0; n < logits.count; ++n) {
    const auto row = logits.item(n);
    const int target = targets[n];
    if (target < 0 || static_cast<std::size_t>(target) >= k) {
      throw ConfigurationError("target class " + std::to_string(target) + " outside the logit range");
    }
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs[j] = std::exp(static_cast<double>(row[j]) - peak);
      total += probs[j];
    }
    losses[n] = std::log(total) + peak - static_cast<double>(row[static_cast<std::size_t>(target)]);
    if (grad != nullptr) {
      auto g = grad->item(n);
      for (std::size_t j = 0; j < k; ++j) {
        const double p = probs[j] / total - (j == static_cast<std::size_t>(target) ? 1.0 : 0.0);
        g[j] = static_cast<float>(scale * p);
      }
    }
  }
  return losses;
}

std::vector<int> argmax_rows(const Batch& logits) {
  std::vector<int> labels(logits.count);
  for (std::size_t n = 0; n < logits.count; ++n) {
    const auto row = logits.item(n);
    labels[n] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return labels;
}

namespace {

template <typename T, typename... Args>
void add(std::vector<std::unique_ptr<Layer>>& layers, Args&&... args) {
  layers.push_back(std::make_unique<T>(std::forward<Args>(args)...));
}

}  // namespace

bool is_known_architecture(std::string_view id) {
  return id == "linear" || id == "logit1" || id == "mlp" || id == "cnn-small" || id == "cnn-deep";
}

Network make_network(std::string_view id, const Shape& input, int n_classes) {
  if (n_classes < 2) throw ConfigurationError("a classifier needs at least two classes");
  if (input.pixels() == 0) throw ConfigurationError("empty input shape");
  std::vector<std::unique_ptr<Layer>> layers;
  const auto classes = static_cast<std::size_t>(n_classes);
  const auto pooled = [](int side, int times) {
    for (int t = 0; t < times; ++t) side /= 2;
    return side;
  };
  if (id == "linear") {
    add<Linear>(layers, input.pixels(), classes);
  } else if (id == "logit1") {
    if (n_classes != 2) throw ConfigurationError("logit1 is a two-class architecture");
    add<Linear>(layers, input.pixels(), std::size_t{1});
    add<BinaryLogit>(layers);
  } else if (id == "mlp") {
    add<Linear>(layers, input.pixels(), std::size_t{64});
    add<Relu>(layers);
    add<Linear>(layers, std::size_t{64}, classes);
  } else if (id == "cnn-small") {
    if (pooled(input.height, 2) < 1 || pooled(input.width, 2) < 1) {
      throw ConfigurationError("cnn-small needs images of at least 4x4, got " + data::to_string(input));
    }
    add<Conv2d>(layers, input.channels, 16, 3, 1);
    add<Relu>(layers);
    add<MaxPool2>(layers);
    add<Conv2d>(layers, 16, 32, 3, 1);
    add<Relu>(layers);
    add<MaxPool2>(layers);
    const auto flat = static_cast<std::size_t>(pooled(input.height, 2)) * pooled(input.width, 2) * 32;
    add<Linear>(layers, flat, std::size_t{64});
    add<Relu>(layers);
    add<Linear>(layers, std::size_t{64}, classes);
  } else if (id == "cnn-deep") {
    if (pooled(input.height, 3) < 1 || pooled(input.width, 3) < 1) {
      throw ConfigurationError("cnn-deep needs images of at least 8x8, got " + data::to_string(input));
    }
    add<Conv2d>(layers, input.channels, 32, 5, 2);
    add<Relu>(layers);
    add<MaxPool2>(layers);
    add<Conv2d>(layers, 32, 32, 3, 1);
    add<Relu>(layers);
    add<MaxPool2>(layers);
    add<Conv2d>(layers, 32, 64, 3, 1);
    add<Relu>(layers);
    add<MaxPool2>(layers);
    const auto flat = static_cast<std::size_t>(pooled(input.height, 3)) * pooled(input.width, 3) * 64;
    add<Linear>(layers, flat, classes);
  } else {
    throw ConfigurationError("unknown architecture '" + std::string(id) + "'");
  }
  return Network(input, std::move(layers));
}

}  // namespace trainwreck::nn
