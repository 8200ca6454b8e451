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

#include "hqunet/nn/modules.hpp"

#include <cmath>

#include "hqunet/ops.hpp"

namespace hqunet::nn {

std::vector<NamedTensor> Module::named_parameters() const {
    std::vector<NamedTensor> out;
    collect("", false, out);
    return out;
}

std::vector<NamedTensor> Module::named_buffers() const {
    std::vector<NamedTensor> out;
    collect("", true, out);
    return out;
}

std::size_t Module::parameter_count() const {
    std::size_t total = 0;
    for (const auto &p : named_parameters()) {
        total += p.tensor.numel();
    }
    return total;
}

void Module::set_training(bool flag) {
    training_ = flag;
    for (auto &[name, child] : children_) {
        child->set_training(flag);
    }
}

void Module::zero_grad() {
    for (auto &p : named_parameters()) {
        p.tensor.zero_grad();
    }
}

Tensor Module::register_parameter(std::string name, Tensor value) {
    value.set_requires_grad(true);
    params_.push_back({std::move(name), value});
    return value;
}

Tensor Module::register_buffer(std::string name, Tensor value) {
    buffers_.push_back({std::move(name), value});
    return value;
}

void Module::collect(const std::string &prefix, bool buffers,
                     std::vector<NamedTensor> &out) const {
    for (const auto &t : buffers ? buffers_ : params_) {
        out.push_back({prefix + t.name, t.tensor});
    }
    for (const auto &[name, child] : children_) {
        child->collect(prefix + name + ".", buffers, out);
    }
}

Tensor init_uniform(Shape shape, std::size_t fan_in, Rng &rng) {
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto &v : t.data_mut()) {
        v = rng.uniform(-bound, bound);
    }
    return t;
}

Conv2d::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               Conv2dOptions opts, bool with_bias, Rng &rng)
    : options{opts} {
    const std::size_t per_group = in_channels / opts.groups;
    weight = register_parameter(
        "weight", init_uniform({out_channels, per_group, kernel, kernel},
                               per_group * kernel * kernel, rng));
    if (with_bias) {
        bias = register_parameter("bias", Tensor({out_channels}));
    }
}

Tensor Conv2d::forward(const Tensor &x) const { return conv2d(x, weight, bias, options); }

ConvTranspose2x2::ConvTranspose2x2(std::size_t in_channels, std::size_t out_channels, Rng &rng) {
    weight = register_parameter("weight",
                                init_uniform({in_channels, out_channels, 2, 2}, out_channels * 4, rng));
    bias = register_parameter("bias", Tensor({out_channels}));
}

Tensor ConvTranspose2x2::forward(const Tensor &x) const {
    return conv_transpose_2x2(x, weight, bias);
}

BatchNorm2d::BatchNorm2d(std::size_t channels) {
    gamma = register_parameter("gamma", Tensor({channels}, 1.0));
    beta = register_parameter("beta", Tensor({channels}, 0.0));
    running_mean = register_buffer("running_mean", Tensor({channels}, 0.0));
    running_var = register_buffer("running_var", Tensor({channels}, 1.0));
}

Tensor BatchNorm2d::forward(const Tensor &x) {
    return batch_norm(x, gamma, beta, running_mean, running_var,
                      {.training = training(), .momentum = kMomentum, .eps = kEps});
}

Linear::Linear(std::size_t in_features, std::size_t out_features, Rng &rng) {
    weight = register_parameter("weight", init_uniform({out_features, in_features}, in_features, rng));
    bias = register_parameter("bias", Tensor({out_features}));
}

Tensor Linear::forward(const Tensor &x) const { return linear(x, weight, bias); }

DepthwiseSeparableConv::DepthwiseSeparableConv(std::size_t in_channels, std::size_t out_channels,
                                               Rng &rng) {
    depthwise = register_module(
        "depthwise", std::make_shared<Conv2d>(in_channels, in_channels, 3,
                                              Conv2dOptions{.stride = 1, .padding = 1,
                                                            .groups = in_channels},
                                              true, rng));
    pointwise = register_module(
        "pointwise",
        std::make_shared<Conv2d>(in_channels, out_channels, 1, Conv2dOptions{}, true, rng));
}

Tensor DepthwiseSeparableConv::forward(const Tensor &x) const {
    return pointwise->forward(depthwise->forward(x));
}

std::size_t DepthwiseSeparableConv::expected_parameters(std::size_t in_channels,
                                                        std::size_t out_channels) {
    return in_channels * 9 + in_channels + in_channels * out_channels + out_channels;
}

DoubleConv::DoubleConv(std::size_t in_channels, std::size_t out_channels, Rng &rng) {
    conv1 = register_module("conv1",
                            std::make_shared<DepthwiseSeparableConv>(in_channels, out_channels, rng));
    bn1 = register_module("bn1", std::make_shared<BatchNorm2d>(out_channels));
    conv2 = register_module("conv2",
                            std::make_shared<DepthwiseSeparableConv>(out_channels, out_channels, rng));
    bn2 = register_module("bn2", std::make_shared<BatchNorm2d>(out_channels));
}

Tensor DoubleConv::forward(const Tensor &x) {
    Tensor y = relu(bn1->forward(conv1->forward(x)));
    return relu(bn2->forward(conv2->forward(y)));
}

} // namespace hqunet::nn
