// Copyright 2026 The Spinebound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef SPINEBOUND_MLP_HPP_
#define SPINEBOUND_MLP_HPP_

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "spinebound/rng.hpp"

namespace spinebound {

enum class OutputActivation { kLinear, kTanh };

// Fully connected network with ReLU hidden layers. The network owns only
// its layout; parameters live in a caller-owned flat vector laid out per
// layer as W (out x in, column-major) followed by b (out).
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using ConstVectorMap = Eigen::Map<const Vector>;
  using VectorMap = Eigen::Map<Vector>;

  // Pre-activations and activations of every layer for one batch.
  struct Cache {
    std::vector<Matrix> inputs;       // input of each layer
    std::vector<Matrix> activations;  // output of each layer
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, OutputActivation output)
      : sizes_(std::move(sizes)), output_(output) {
    if (sizes_.size() < 2) throw std::invalid_argument("mlp needs 2 sizes");
    for (int s : sizes_) {
      if (s < 1) throw std::invalid_argument("mlp sizes must be positive");
    }
  }

  const std::vector<int>& sizes() const { return sizes_; }
  OutputActivation output() const { return output_; }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }

  int num_params() const {
    int n = 0;
    for (int l = 0; l < num_layers(); ++l) {
      n += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    return n;
  }

  // He-scaled Gaussian weights, zero biases; the last layer is scaled by
  // `output_gain`.
  void initialize(Scalar* params, Rng& rng, double output_gain) const {
    int offset = 0;
    for (int l = 0; l < num_layers(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      double scale = std::sqrt(2.0 / in);
      if (l + 1 == num_layers()) scale = output_gain / std::sqrt(in);
      for (int i = 0; i < out * in; ++i) {
        params[offset + i] = static_cast<Scalar>(scale * rng.normal());
      }
      offset += out * in;
      for (int i = 0; i < out; ++i) params[offset + i] = Scalar(0);
      offset += out;
    }
  }

  // Batched forward pass over the columns of `x`.
  Matrix forward(const Scalar* params, const Matrix& x,
                 Cache* cache = nullptr) const {
    if (cache != nullptr) {
      cache->inputs.clear();
      cache->activations.clear();
    }
    Matrix h = x;
    int offset = 0;
    for (int l = 0; l < num_layers(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      ConstMatrixMap w(params + offset, out, in);
      ConstVectorMap b(params + offset + out * in, out);
      offset += out * in + out;
      if (cache != nullptr) cache->inputs.push_back(h);
      Matrix z = w * h;
      z.colwise() += b;
      activate(z, l);
      h = std::move(z);
      if (cache != nullptr) cache->activations.push_back(h);
    }
    return h;
  }

  // Single-sample forward pass. Uses matrix-vector products so the result
  // does not depend on how samples are batched.
  Vector forward_one(const Scalar* params, const Vector& x) const {
    Vector h = x;
    int offset = 0;
    for (int l = 0; l < num_layers(); ++l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      ConstMatrixMap w(params + offset, out, in);
      ConstVectorMap b(params + offset + out * in, out);
      offset += out * in + out;
      Vector z = w * h + b;
      activate(z, l);
      h = std::move(z);
    }
    return h;
  }

  // Accumulates d loss / d params into `grad` given d loss / d output
  // (post-activation) for every column of the cached batch. Returns
  // d loss / d input.
  Matrix backward(const Scalar* params, const Cache& cache,
                  const Matrix& grad_output, Scalar* grad) const {
    Matrix delta = grad_output;
    int offset = num_params();
    for (int l = num_layers() - 1; l >= 0; --l) {
      const int in = sizes_[l];
      const int out = sizes_[l + 1];
      offset -= out * in + out;
      const Matrix& a = cache.activations[l];
      if (l + 1 == num_layers()) {
        if (output_ == OutputActivation::kTanh) {
          delta = delta.cwiseProduct(
              (Scalar(1) - a.array().square()).matrix());
        }
      } else {
        delta = (a.array() > Scalar(0)).select(delta, Scalar(0));
      }
      MatrixMap gw(grad + offset, out, in);
      VectorMap gb(grad + offset + out * in, out);
      gw.noalias() += delta * cache.inputs[l].transpose();
      gb.noalias() += delta.rowwise().sum();
      ConstMatrixMap w(params + offset, out, in);
      Matrix next = w.transpose() * delta;
      delta = std::move(next);
    }
    return delta;
  }

 private:
  template <typename Derived>
  void activate(Eigen::MatrixBase<Derived>& z, int layer) const {
    if (layer + 1 < num_layers()) {
      z = z.cwiseMax(Scalar(0));
    } else if (output_ == OutputActivation::kTanh) {
      z = z.array().tanh().matrix();
    }
  }

  std::vector<int> sizes_;
  OutputActivation output_ = OutputActivation::kLinear;
};

}  // namespace spinebound

#endif  // SPINEBOUND_MLP_HPP_
