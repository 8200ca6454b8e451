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
 * Differentiable layer primitives on NCHW tensors.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hqunet/tensor.hpp"

namespace hqunet::nn {

struct Conv2dOptions {
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t groups = 1;
};

/// x [N, Cin, H, W], weight [Cout, Cin/groups, kH, kW], bias [Cout] or undefined.
[[nodiscard]] Tensor conv2d(const Tensor &x, const Tensor &weight, const Tensor &bias,
                            const Conv2dOptions &opts = {});

/// 2x2 window, stride 2. Gradient goes to the first maximum in row-major order.
[[nodiscard]] Tensor max_pool_2x2(const Tensor &x);

/// Stride-2 transposed convolution with a [Cin, Cout, 2, 2] kernel; doubles H and W.
[[nodiscard]] Tensor conv_transpose_2x2(const Tensor &x, const Tensor &weight,
                                        const Tensor &bias);

/// Cell (i, j) averages rows [floor(i*H/oh), ceil((i+1)*H/oh)) and the
/// matching columns. Only reduces: oh <= H and ow <= W.
[[nodiscard]] Tensor adaptive_avg_pool(const Tensor &x, std::size_t out_h, std::size_t out_w);

struct BatchNormOptions {
    bool training = true;
    double momentum = 0.1;
    double eps = 1e-5;
};

/// Per-channel normalization of [N, C, H, W]. In training mode the batch
/// statistics are used and the running buffers (plain leaves) are updated
/// in place; otherwise the running statistics are used.
[[nodiscard]] Tensor batch_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta,
                                Tensor &running_mean, Tensor &running_var,
                                const BatchNormOptions &opts = {});

/// x [N, in], weight [out, in], bias [out] or undefined -> [N, out].
[[nodiscard]] Tensor linear(const Tensor &x, const Tensor &weight, const Tensor &bias);

/// Concatenates 4-D tensors along the channel axis.
[[nodiscard]] Tensor concat_channels(const std::vector<Tensor> &parts);

/// Mean pixel-wise negative log-likelihood of ``targets`` (laid out
/// [N, H, W]) under softmax(logits [N, K, H, W]) over the class axis.
[[nodiscard]] Tensor softmax_cross_entropy(const Tensor &logits,
                                           std::span<const std::uint8_t> targets);

} // namespace hqunet::nn
