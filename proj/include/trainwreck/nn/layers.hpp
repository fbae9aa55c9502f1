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

#ifndef TRAINWRECK_NN_LAYERS_HPP_
#define TRAINWRECK_NN_LAYERS_HPP_

#include <cstddef>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

#include "trainwreck/common/random.hpp"
#include "trainwreck/data/image_dataset.hpp"

namespace trainwreck::nn {

using Shape = data::ImageShape;

// Vectorized kernels choose their summation order from a buffer's address,
// so every buffer they read starts on the same 64-byte boundary.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using FloatBuffer = std::vector<float, AlignedAllocator<float>>;

// A batch of channel-last activations (count x H x W x C).
struct Batch {
  std::size_t count = 0;
  Shape shape;
  FloatBuffer values;

  Batch() = default;
  Batch(std::size_t n, Shape s) : count(n), shape(s), values(n * s.pixels(), 0.0f) {}

  std::size_t stride() const { return shape.pixels(); }
  std::span<float> item(std::size_t i) { return std::span<float>(values).subspan(i * stride(), stride()); }
  std::span<const float> item(std::size_t i) const {
    return std::span<const float>(values).subspan(i * stride(), stride());
  }
};

// Layers are stateless apart from their parameters: forward and backward are
// const, so one network can serve concurrent read-only callers.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string name() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual void forward(const Batch& in, Batch& out) const = 0;
  // Accumulates dL/dparams into `param_grad` when it is non-empty and writes
  // dL/din into `grad_in` when it is non-null.
  virtual void backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                        std::span<float> param_grad) const = 0;

  virtual std::span<const float> parameters() const { return {}; }
  virtual std::span<float> parameters() { return {}; }
  virtual void initialize(Rng& /*rng*/) {}
  virtual std::unique_ptr<Layer> clone() const = 0;
};

// Square kernel, stride 1, zero padding.
class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int padding);

  std::string name() const override;
  Shape output_shape(const Shape& input) const override;
  void forward(const Batch& in, Batch& out) const override;
  void backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                std::span<float> param_grad) const override;
  std::span<const float> parameters() const override { return params_; }
  std::span<float> parameters() override { return params_; }
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv2d>(*this); }

 private:
  std::size_t patch_size() const { return static_cast<std::size_t>(kernel_) * kernel_ * in_channels_; }
  void im2col(std::span<const float> image, const Shape& in, const Shape& out, FloatBuffer& col) const;

  int in_channels_, out_channels_, kernel_, padding_;
  // out_channels x (kernel * kernel * in_channels) weights, then biases.
  FloatBuffer params_;
};

class Linear final : public Layer {
 public:
  Linear(std::size_t in_features, std::size_t out_features);

  std::string name() const override;
  Shape output_shape(const Shape& input) const override;
  void forward(const Batch& in, Batch& out) const override;
  void backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                std::span<float> param_grad) const override;
  std::span<const float> parameters() const override { return params_; }
  std::span<float> parameters() override { return params_; }
  void initialize(Rng& rng) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Linear>(*this); }

 private:
  std::size_t in_, out_;
  FloatBuffer params_;
};

class Relu final : public Layer {
 public:
  std::string name() const override { return "relu"; }
  Shape output_shape(const Shape& input) const override { return input; }
  void forward(const Batch& in, Batch& out) const override;
  void backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                std::span<float> param_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Relu>(*this); }
};

// 2x2 window, stride 2; odd trailing rows/columns are dropped.
class MaxPool2 final : public Layer {
 public:
  std::string name() const override { return "maxpool2"; }
  Shape output_shape(const Shape& input) const override;
  void forward(const Batch& in, Batch& out) const override;
  void backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                std::span<float> param_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool2>(*this); }
};

// Maps a single score z to the two-class logits [0, z], so softmax yields the
// logistic model sigmoid(z) for class 1.
class BinaryLogit final : public Layer {
 public:
  std::string name() const override { return "binary-logit"; }
  Shape output_shape(const Shape& input) const override;
  void forward(const Batch& in, Batch& out) const override;
  void backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                std::span<float> param_grad) const override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<BinaryLogit>(*this); }
};

}  // namespace trainwreck::nn

#endif  // TRAINWRECK_NN_LAYERS_HPP_
