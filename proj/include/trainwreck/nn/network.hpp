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

#ifndef TRAINWRECK_NN_NETWORK_HPP_
#define TRAINWRECK_NN_NETWORK_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trainwreck/nn/layers.hpp"

namespace trainwreck::nn {

// One buffer per layer, sized like that layer's parameters.
using Gradients = std::vector<FloatBuffer>;

class Network {
 public:
  Network(Shape input, std::vector<std::unique_ptr<Layer>> layers);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const Shape& input_shape() const { return input_shape_; }
  std::size_t output_size() const { return shapes_.back().pixels(); }
  std::size_t layer_count() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }
  Shape shape_after(std::size_t layer) const { return shapes_.at(layer + 1); }

  void initialize(std::uint64_t seed);

  // Activations of every layer; activations[0] is the input batch.
  struct Tape {
    std::vector<Batch> activations;
    const Batch& logits() const { return activations.back(); }
  };

  Batch forward(const Batch& input) const;
  Batch forward_until(const Batch& input, std::size_t end_layer) const;
  Tape forward_tape(Batch input) const;

  // Backpropagates dL/dlogits. Parameter gradients are accumulated into
  // `param_grads` when non-null; the input gradient is returned when
  // `need_input_grad` is set (otherwise an empty batch).
  Batch backward(const Tape& tape, const Batch& grad_logits, Gradients* param_grads,
                 bool need_input_grad) const;

  Gradients zero_gradients() const;
  std::size_t parameter_count() const;
  std::span<float> layer_parameters(std::size_t i) { return layers_.at(i)->parameters(); }
  std::span<const float> layer_parameters(std::size_t i) const {
    return static_cast<const Layer&>(*layers_.at(i)).parameters();
  }
  std::vector<float> flat_parameters() const;
  void load_parameters(std::span<const float> flat);

  // Index of the last layer owning parameters (the classification head).
  std::size_t head_layer() const;

 private:
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Shape> shapes_;
};

// Per-item softmax cross-entropy. Writes scale * dL_i/dlogits into `grad`
// when non-null and returns the per-item losses (natural log).
std::vector<double> softmax_cross_entropy(const Batch& logits, std::span<const int> targets,
                                          Batch* grad, float scale);

std::vector<int> argmax_rows(const Batch& logits);

// Known architectures:
//   linear     flatten -> linear
//   logit1     flatten -> linear(1) -> binary logit (two classes only)
//   mlp        flatten -> linear(64) -> relu -> linear
//   cnn-small  [conv3x3(16) relu pool] [conv3x3(32) relu pool] linear(64) relu linear
//   cnn-deep   [conv5x5(32) relu pool] [conv3x3(32) relu pool]
//              [conv3x3(64) relu pool] linear
Network make_network(std::string_view architecture_id, const Shape& input, int n_classes);
bool is_known_architecture(std::string_view architecture_id);

}  // namespace trainwreck::nn

#endif  // TRAINWRECK_NN_NETWORK_HPP_
