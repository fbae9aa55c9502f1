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

#include "trainwreck/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "trainwreck/common/error.hpp"

namespace trainwreck::nn {

namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::RowVectorXf>;
using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXf>;

// He-uniform initialization suits the ReLU stacks used here.
void he_uniform(std::span<float> weights, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (float& w : weights) w = static_cast<float>(rng.uniform(-bound, bound));
}

}  // namespace

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int padding)
    : in_channels_(in_channels), out_channels_(out_channels), kernel_(kernel), padding_(padding) {
  if (in_channels <= 0 || out_channels <= 0 || kernel <= 0 || padding < 0) {
    throw ConfigurationError("invalid convolution geometry");
  }
  params_.assign(static_cast<std::size_t>(out_channels) * patch_size() + out_channels, 0.0f);
}

std::string Conv2d::name() const {
  return "conv" + std::to_string(kernel_) + "x" + std::to_string(kernel_) + "(" +
         std::to_string(out_channels_) + ")";
}

Shape Conv2d::output_shape(const Shape& input) const {
  if (input.channels != in_channels_) {
    throw ConfigurationError(name() + " expects " + std::to_string(in_channels_) +
                             " input channels, got " + std::to_string(input.channels));
  }
  const int h = input.height + 2 * padding_ - kernel_ + 1;
  const int w = input.width + 2 * padding_ - kernel_ + 1;
  if (h <= 0 || w <= 0) throw ConfigurationError(name() + " does not fit input " + data::to_string(input));
  return Shape{h, w, out_channels_};
}

void Conv2d::im2col(std::span<const float> image, const Shape& in, const Shape& out,
                    FloatBuffer& col) const {
  const std::size_t patch = patch_size();
  col.assign(static_cast<std::size_t>(out.height) * out.width * patch, 0.0f);
  const std::size_t run = static_cast<std::size_t>(in_channels_);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      float* dst = col.data() + (static_cast<std::size_t>(y) * out.width + x) * patch;
      for (int ky = 0; ky < kernel_; ++ky) {
        const int sy = y + ky - padding_;
        if (sy < 0 || sy >= in.height) continue;
        for (int kx = 0; kx < kernel_; ++kx) {
          const int sx = x + kx - padding_;
          if (sx < 0 || sx >= in.width) continue;
          const float* src = image.data() + (static_cast<std::size_t>(sy) * in.width + sx) * run;
          std::copy(src, src + run, dst + (static_cast<std::size_t>(ky) * kernel_ + kx) * run);
        }
      }
    }
  }
}

void Conv2d::forward(const Batch& in, Batch& out) const {
  const Shape out_shape = output_shape(in.shape);
  out = Batch(in.count, out_shape);
  const std::size_t positions = static_cast<std::size_t>(out_shape.height) * out_shape.width;
  const std::size_t patch = patch_size();
  ConstMatrixMap weights(params_.data(), out_channels_, static_cast<Eigen::Index>(patch));
  ConstVectorMap bias(params_.data() + out_channels_ * patch, out_channels_);
  FloatBuffer col;
  for (std::size_t n = 0; n < in.count; ++n) {
    im2col(in.item(n), in.shape, out_shape, col);
    ConstMatrixMap cols(col.data(), static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(patch));
    MatrixMap result(out.item(n).data(), static_cast<Eigen::Index>(positions), out_channels_);
    result.noalias() = cols * weights.transpose();
    result.rowwise() += bias;
  }
}

void Conv2d::backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                      std::span<float> param_grad) const {
  const Shape& out_shape = out.shape;
  const std::size_t positions = static_cast<std::size_t>(out_shape.height) * out_shape.width;
  const std::size_t patch = patch_size();
  ConstMatrixMap weights(params_.data(), out_channels_, static_cast<Eigen::Index>(patch));
  if (grad_in != nullptr) *grad_in = Batch(in.count, in.shape);
  FloatBuffer col;
  FloatBuffer grad_col(positions * patch);
  const std::size_t run = static_cast<std::size_t>(in_channels_);
  for (std::size_t n = 0; n < in.count; ++n) {
    ConstMatrixMap dout(grad_out.item(n).data(), static_cast<Eigen::Index>(positions), out_channels_);
    if (!param_grad.empty()) {
      im2col(in.item(n), in.shape, out_shape, col);
      ConstMatrixMap cols(col.data(), static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(patch));
      MatrixMap dweights(param_grad.data(), out_channels_, static_cast<Eigen::Index>(patch));
      VectorMap dbias(param_grad.data() + out_channels_ * patch, out_channels_);
      dweights.noalias() += dout.transpose() * cols;
      dbias += dout.colwise().sum();
    }
    if (grad_in != nullptr) {
      MatrixMap dcols(grad_col.data(), static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(patch));
      dcols.noalias() = dout * weights;
      float* dimage = grad_in->item(n).data();
      for (int y = 0; y < out_shape.height; ++y) {
        for (int x = 0; x < out_shape.width; ++x) {
          const float* src = grad_col.data() + (static_cast<std::size_t>(y) * out_shape.width + x) * patch;
          for (int ky = 0; ky < kernel_; ++ky) {
            const int sy = y + ky - padding_;
            if (sy < 0 || sy >= in.shape.height) continue;
            for (int kx = 0; kx < kernel_; ++kx) {
              const int sx = x + kx - padding_;
              if (sx < 0 || sx >= in.shape.width) continue;
              float* dst = dimage + (static_cast<std::size_t>(sy) * in.shape.width + sx) * run;
              const float* s = src + (static_cast<std::size_t>(ky) * kernel_ + kx) * run;
              for (std::size_t c = 0; c < run; ++c) dst[c] += s[c];
            }
          }
        }
      }
    }
  }
}

void Conv2d::initialize(Rng& rng) {
  const std::size_t weights = static_cast<std::size_t>(out_channels_) * patch_size();
  he_uniform(std::span<float>(params_).first(weights), patch_size(), rng);
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(weights), params_.end(), 0.0f);
}

Linear::Linear(std::size_t in_features, std::size_t out_features)
    : in_(in_features), out_(out_features), params_(in_features * out_features + out_features, 0.0f) {
  if (in_features == 0 || out_features == 0) throw ConfigurationError("empty linear layer");
}

std::string Linear::name() const { return "linear(" + std::to_string(out_) + ")"; }

Shape Linear::output_shape(const Shape& input) const {
  if (input.pixels() != in_) {
    throw ConfigurationError(name() + " expects " + std::to_string(in_) + " features, got " +
                             std::to_string(input.pixels()));
  }
  return Shape{1, 1, static_cast<int>(out_)};
}

void Linear::forward(const Batch& in, Batch& out) const {
  out = Batch(in.count, output_shape(in.shape));
  const auto rows = static_cast<Eigen::Index>(in.count);
  ConstMatrixMap x(in.values.data(), rows, static_cast<Eigen::Index>(in_));
  ConstMatrixMap w(params_.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
  ConstVectorMap b(params_.data() + in_ * out_, static_cast<Eigen::Index>(out_));
  MatrixMap y(out.values.data(), rows, static_cast<Eigen::Index>(out_));
  y.noalias() = x * w.transpose();
  y.rowwise() += b;
}

void Linear::backward(const Batch& in, const Batch& /*out*/, const Batch& grad_out, Batch* grad_in,
                      std::span<float> param_grad) const {
  const auto rows = static_cast<Eigen::Index>(in.count);
  ConstMatrixMap dy(grad_out.values.data(), rows, static_cast<Eigen::Index>(out_));
  if (!param_grad.empty()) {
    ConstMatrixMap x(in.values.data(), rows, static_cast<Eigen::Index>(in_));
    MatrixMap dw(param_grad.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    VectorMap db(param_grad.data() + in_ * out_, static_cast<Eigen::Index>(out_));
    dw.noalias() += dy.transpose() * x;
    db += dy.colwise().sum();
  }
  if (grad_in != nullptr) {
    *grad_in = Batch(in.count, in.shape);
    ConstMatrixMap w(params_.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    MatrixMap dx(grad_in->values.data(), rows, static_cast<Eigen::Index>(in_));
    dx.noalias() = dy * w;
  }
}

void Linear::initialize(Rng& rng) {
  he_uniform(std::span<float>(params_).first(in_ * out_), in_, rng);
  std::fill(params_.begin() + static_cast<std::ptrdiff_t>(in_ * out_), params_.end(), 0.0f);
}

void Relu::forward(const Batch& in, Batch& out) const {
  out = Batch(in.count, in.shape);
  std::transform(in.values.begin(), in.values.end(), out.values.begin(),
                 [](float v) { return v > 0.0f ? v : 0.0f; });
}

void Relu::backward(const Batch& in, const Batch& /*out*/, const Batch& grad_out, Batch* grad_in,
                    std::span<float> /*param_grad*/) const {
  if (grad_in == nullptr) return;
  *grad_in = Batch(in.count, in.shape);
  for (std::size_t k = 0; k < in.values.size(); ++k) {
    grad_in->values[k] = in.values[k] > 0.0f ? grad_out.values[k] : 0.0f;
  }
}

Shape MaxPool2::output_shape(const Shape& input) const {
  if (input.height < 2 || input.width < 2) {
    throw ConfigurationError("maxpool2 does not fit input " + data::to_string(input));
  }
  return Shape{input.height / 2, input.width / 2, input.channels};
}

void MaxPool2::forward(const Batch& in, Batch& out) const {
  const Shape os = output_shape(in.shape);
  out = Batch(in.count, os);
  const std::size_t c_count = static_cast<std::size_t>(os.channels);
  for (std::size_t n = 0; n < in.count; ++n) {
    const float* src = in.item(n).data();
    float* dst = out.item(n).data();
    for (int y = 0; y < os.height; ++y) {
      for (int x = 0; x < os.width; ++x) {
        const float* a = src + ((2 * static_cast<std::size_t>(y)) * in.shape.width + 2 * x) * c_count;
        const float* b = a + c_count;
        const float* c = a + static_cast<std::size_t>(in.shape.width) * c_count;
        const float* d = c + c_count;
        float* o = dst + (static_cast<std::size_t>(y) * os.width + x) * c_count;
        for (std::size_t ch = 0; ch < c_count; ++ch) {
          o[ch] = std::max(std::max(a[ch], b[ch]), std::max(c[ch], d[ch]));
        }
      }
    }
  }
}

void MaxPool2::backward(const Batch& in, const Batch& out, const Batch& grad_out, Batch* grad_in,
                        std::span<float> /*param_grad*/) const {
  if (grad_in == nullptr) return;
  *grad_in = Batch(in.count, in.shape);
  const Shape& os = out.shape;
  const std::size_t c_count = static_cast<std::size_t>(os.channels);
  const std::size_t row = static_cast<std::size_t>(in.shape.width) * c_count;
  for (std::size_t n = 0; n < in.count; ++n) {
    const float* src = in.item(n).data();
    const float* pooled = out.item(n).data();
    const float* g = grad_out.item(n).data();
    float* dst = grad_in->item(n).data();
    for (int y = 0; y < os.height; ++y) {
      for (int x = 0; x < os.width; ++x) {
        const std::size_t base = (2 * static_cast<std::size_t>(y)) * row + 2 * static_cast<std::size_t>(x) * c_count;
        const std::size_t o = (static_cast<std::size_t>(y) * os.width + x) * c_count;
        const std::size_t offsets[4] = {0, c_count, row, row + c_count};
        for (std::size_t ch = 0; ch < c_count; ++ch) {
          // Gradient goes to the first maximal entry in scan order.
          for (const std::size_t off : offsets) {
            if (src[base + off + ch] == pooled[o + ch]) {
              dst[base + off + ch] += g[o + ch];
              break;
            }
          }
        }
      }
    }
  }
}

Shape BinaryLogit::output_shape(const Shape& input) const {
  if (input.pixels() != 1) throw ConfigurationError("binary-logit expects a single score");
  return Shape{1, 1, 2};
}

void BinaryLogit::forward(const Batch& in, Batch& out) const {
  out = Batch(in.count, output_shape(in.shape));
  for (std::size_t n = 0; n < in.count; ++n) {
    out.values[2 * n] = 0.0f;
    out.values[2 * n + 1] = in.values[n];
  }
}

void BinaryLogit::backward(const Batch& in, const Batch& /*out*/, const Batch& grad_out, Batch* grad_in,
                           std::span<float> /*param_grad*/) const {
  if (grad_in == nullptr) return;
  *grad_in = Batch(in.count, in.shape);
  for (std::size_t n = 0; n < in.count; ++n) grad_in->values[n] = grad_out.values[2 * n + 1];
}

}  // namespace trainwreck::nn
