// Copyright 2026 The hqunet Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * Parameter-owning layers built on nn/functional.hpp.
 *
 * Modules register their parameters, buffers and children by name so that
 * checkpoints and optimizers can address every tensor with a stable dotted
 * path such as ``down1.conv.stage1.pointwise.weight``.
 */

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hqunet/nn/functional.hpp"
#include "hqunet/random.hpp"
#include "hqunet/tensor.hpp"

namespace hqunet::nn {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

class Module {
  public:
    virtual ~Module() = default;

    [[nodiscard]] std::vector<NamedTensor> named_parameters() const;
    [[nodiscard]] std::vector<NamedTensor> named_buffers() const;
    [[nodiscard]] std::size_t parameter_count() const;

    void set_training(bool flag);
    [[nodiscard]] bool training() const { return training_; }
    void zero_grad();

  protected:
    Tensor register_parameter(std::string name, Tensor value);
    Tensor register_buffer(std::string name, Tensor value);

    template <class M> std::shared_ptr<M> register_module(std::string name, std::shared_ptr<M> m) {
        children_.emplace_back(std::move(name), m);
        return m;
    }

  private:
    void collect(const std::string &prefix, bool buffers, std::vector<NamedTensor> &out) const;

    std::vector<NamedTensor> params_;
    std::vector<NamedTensor> buffers_;
    std::vector<std::pair<std::string, std::shared_ptr<Module>>> children_;
    bool training_ = true;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights.
[[nodiscard]] Tensor init_uniform(Shape shape, std::size_t fan_in, Rng &rng);

class Conv2d : public Module {
  public:
    Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
           Conv2dOptions opts, bool with_bias, Rng &rng);

    [[nodiscard]] Tensor forward(const Tensor &x) const;

    Tensor weight;
    Tensor bias;
    Conv2dOptions options;
};

class ConvTranspose2x2 : public Module {
  public:
    ConvTranspose2x2(std::size_t in_channels, std::size_t out_channels, Rng &rng);
    [[nodiscard]] Tensor forward(const Tensor &x) const;

    Tensor weight;
    Tensor bias;
};

class BatchNorm2d : public Module {
  public:
    static constexpr double kMomentum = 0.1;
    static constexpr double kEps = 1e-5;

    explicit BatchNorm2d(std::size_t channels);
    [[nodiscard]] Tensor forward(const Tensor &x);

    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
};

class Linear : public Module {
  public:
    Linear(std::size_t in_features, std::size_t out_features, Rng &rng);
    [[nodiscard]] Tensor forward(const Tensor &x) const;

    Tensor weight;
    Tensor bias;
};

/// 3x3 depthwise (groups == Cin, pad 1) followed by a 1x1 pointwise conv.
class DepthwiseSeparableConv : public Module {
  public:
    DepthwiseSeparableConv(std::size_t in_channels, std::size_t out_channels, Rng &rng);
    [[nodiscard]] Tensor forward(const Tensor &x) const;

    /// Cin*9 + Cin + Cin*Cout + Cout.
    [[nodiscard]] static std::size_t expected_parameters(std::size_t in_channels,
                                                         std::size_t out_channels);

    std::shared_ptr<Conv2d> depthwise;
    std::shared_ptr<Conv2d> pointwise;
};

/// Two (depthwise-separable conv -> BatchNorm -> ReLU) stages.
class DoubleConv : public Module {
  public:
    DoubleConv(std::size_t in_channels, std::size_t out_channels, Rng &rng);
    [[nodiscard]] Tensor forward(const Tensor &x);

    std::shared_ptr<DepthwiseSeparableConv> conv1;
    std::shared_ptr<BatchNorm2d> bn1;
    std::shared_ptr<DepthwiseSeparableConv> conv2;
    std::shared_ptr<BatchNorm2d> bn2;
};

} // namespace hqunet::nn
