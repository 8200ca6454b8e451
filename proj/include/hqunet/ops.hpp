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

#pragma once

#include "hqunet/tensor.hpp"

namespace hqunet {

// Elementwise ops require equal shapes, or ``b`` shaped like one batch item
// of ``a`` (b.shape == a.shape[1:]), in which case b is broadcast over the
// leading dimension. Nothing else broadcasts.
[[nodiscard]] Tensor add(const Tensor &a, const Tensor &b);
[[nodiscard]] Tensor sub(const Tensor &a, const Tensor &b);
[[nodiscard]] Tensor mul(const Tensor &a, const Tensor &b);
[[nodiscard]] Tensor scale(const Tensor &a, double factor);

/// 2-D product: [m, k] x [k, n] -> [m, n].
[[nodiscard]] Tensor matmul(const Tensor &a, const Tensor &b);

[[nodiscard]] Tensor sum(const Tensor &a);
[[nodiscard]] Tensor mean(const Tensor &a);

[[nodiscard]] Tensor relu(const Tensor &a);
[[nodiscard]] Tensor tanh(const Tensor &a);

[[nodiscard]] Tensor reshape(const Tensor &a, Shape shape);

} // namespace hqunet
