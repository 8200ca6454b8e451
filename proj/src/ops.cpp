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

#include "hqunet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gemm.hpp"

namespace hqunet {

namespace {

enum class Broadcast { None, Batch };

Broadcast check_elementwise(const char *op, const Tensor &a, const Tensor &b) {
    if (a.shape() == b.shape()) {
        return Broadcast::None;
    }
    const auto &sa = a.shape();
    if (!sa.empty() && Shape(sa.begin() + 1, sa.end()) == b.shape()) {
        return Broadcast::Batch;
    }
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

template <class Fwd, class GradA, class GradB>
Tensor elementwise(const char *name, OpKind op, const Tensor &a, const Tensor &b, Fwd fwd,
                   GradA grad_a, GradB grad_b) {
    const Broadcast mode = check_elementwise(name, a, b);
    const std::size_t inner = b.numel();
    auto da = a.data();
    auto db = b.data();
    std::vector<double> out(da.size());
    for (std::size_t i = 0; i < da.size(); ++i) {
        out[i] = fwd(da[i], db[mode == Broadcast::Batch ? i % inner : i]);
    }
    return Tensor::from_op(
        a.shape(), std::move(out), op, {a, b},
        [a, b, inner, mode, grad_a, grad_b](std::span<const double> g, std::span<const double>,
                                            std::span<const std::span<double>> gin) {
            auto xa = a.data();
            auto xb = b.data();
            for (std::size_t i = 0; i < g.size(); ++i) {
                const std::size_t j = mode == Broadcast::Batch ? i % inner : i;
                if (!gin[0].empty()) {
                    gin[0][i] += g[i] * grad_a(xa[i], xb[j]);
                }
                if (!gin[1].empty()) {
                    gin[1][j] += g[i] * grad_b(xa[i], xb[j]);
                }
            }
        });
}

} // namespace

Tensor add(const Tensor &a, const Tensor &b) {
    return elementwise(
        "add", OpKind::Add, a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor &a, const Tensor &b) {
    return elementwise(
        "sub", OpKind::Sub, a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor &a, const Tensor &b) {
    return elementwise(
        "mul", OpKind::Mul, a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor &a, double factor) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto &v : out) {
        v *= factor;
    }
    return Tensor::from_op(a.shape(), std::move(out), OpKind::Scale, {a},
                           [factor](std::span<const double> g, std::span<const double>,
                                    std::span<const std::span<double>> gin) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   gin[0][i] += factor * g[i];
                               }
                           });
}

Tensor matmul(const Tensor &a, const Tensor &b) {
    if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0)) {
        throw std::invalid_argument("matmul: shape mismatch " + shape_str(a.shape()) + " vs " +
                                    shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0);
    const std::size_t k = a.dim(1);
    const std::size_t n = b.dim(1);
    std::vector<double> out(m * n);
    detail::gemm(false, false, m, n, k, a.data().data(), b.data().data(), out.data(), false);
    return Tensor::from_op(
        {m, n}, std::move(out), OpKind::MatMul, {a, b},
        [a, b, m, n, k](std::span<const double> g, std::span<const double>,
                        std::span<const std::span<double>> gin) {
            if (!gin[0].empty()) {
                detail::gemm(false, true, m, k, n, g.data(), b.data().data(), gin[0].data(), true);
            }
            if (!gin[1].empty()) {
                detail::gemm(true, false, k, n, m, a.data().data(), g.data(), gin[1].data(), true);
            }
        });
}

Tensor sum(const Tensor &a) {
    double total = 0.0;
    for (double v : a.data()) {
        total += v;
    }
    return Tensor::from_op({}, {total}, OpKind::Sum, {a},
                           [](std::span<const double> g, std::span<const double>,
                              std::span<const std::span<double>> gin) {
                               for (auto &v : gin[0]) {
                                   v += g[0];
                               }
                           });
}

Tensor mean(const Tensor &a) {
    if (a.numel() == 0) {
        throw std::invalid_argument("mean: empty tensor");
    }
    double total = 0.0;
    for (double v : a.data()) {
        total += v;
    }
    const double inv = 1.0 / static_cast<double>(a.numel());
    return Tensor::from_op({}, {total * inv}, OpKind::Mean, {a},
                           [inv](std::span<const double> g, std::span<const double>,
                                 std::span<const std::span<double>> gin) {
                               for (auto &v : gin[0]) {
                                   v += g[0] * inv;
                               }
                           });
}

Tensor relu(const Tensor &a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    for (auto &v : out) {
        v = v > 0.0 ? v : 0.0;
    }
    return Tensor::from_op(a.shape(), std::move(out), OpKind::Relu, {a},
                           [](std::span<const double> g, std::span<const double> y,
                              std::span<const std::span<double>> gin) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   if (y[i] > 0.0) {
                                       gin[0][i] += g[i];
                                   }
                               }
                           });
}

Tensor tanh(const Tensor &a) {
    std::vector<double> out(a.data().begin(), a.data().end());
    // Saturated doubles round to +-1; keep the output strictly inside (-1, 1).
    const double bound = std::nextafter(1.0, 0.0);
    for (auto &v : out) {
        v = std::clamp(std::tanh(v), -bound, bound);
    }
    return Tensor::from_op(a.shape(), std::move(out), OpKind::Tanh, {a},
                           [](std::span<const double> g, std::span<const double> y,
                              std::span<const std::span<double>> gin) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   gin[0][i] += g[i] * (1.0 - y[i] * y[i]);
                               }
                           });
}

Tensor reshape(const Tensor &a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                    shape_str(shape));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    return Tensor::from_op(std::move(shape), std::move(out), OpKind::Reshape, {a},
                           [](std::span<const double> g, std::span<const double>,
                              std::span<const std::span<double>> gin) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   gin[0][i] += g[i];
                               }
                           });
}

} // namespace hqunet
