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
 * Dense float64 tensor with a reverse-mode autodiff tape.
 *
 * A Tensor is a shared handle: copies alias the same storage, like the
 * handles of most deep learning frameworks. Every operation that produces a
 * Tensor from inputs that require gradients records a TapeNode holding its
 * parents and a backward rule; ``backward()`` walks that graph once in
 * reverse topological order and accumulates into ``grad``.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hqunet {

using Shape = std::vector<std::size_t>;

[[nodiscard]] std::size_t shape_numel(const Shape &shape);
[[nodiscard]] std::string shape_str(const Shape &shape);

enum class OpKind : std::uint8_t {
    Add,
    Sub,
    Mul,
    Scale,
    MatMul,
    Sum,
    Mean,
    Relu,
    Tanh,
    Reshape,
    Conv2d,
    MaxPool2x2,
    ConvTranspose2x2,
    AdaptiveAvgPool,
    BatchNorm,
    Linear,
    ConcatChannels,
    SoftmaxCrossEntropy,
    QuantumCircuit,
};

[[nodiscard]] const char *op_name(OpKind op);

class Tensor;

/// Backward rule of one recorded op. ``grad_in[i]`` is empty when input i
/// does not need a gradient; otherwise the rule adds into it.
using BackwardFn = std::function<void(std::span<const double> grad_out,
                                      std::span<const double> out_value,
                                      std::span<const std::span<double>> grad_in)>;

struct TapeNode;

namespace detail {
struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::shared_ptr<TapeNode> node;
};
} // namespace detail

class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

    /// Output of a recorded op. The node is only attached when grad mode is
    /// on and at least one input requires a gradient.
    static Tensor from_op(Shape shape, std::vector<double> values, OpKind op,
                          std::vector<Tensor> inputs, BackwardFn backward);

    [[nodiscard]] bool defined() const { return impl_ != nullptr; }
    [[nodiscard]] const Shape &shape() const;
    [[nodiscard]] std::size_t ndim() const { return shape().size(); }
    [[nodiscard]] std::size_t dim(std::size_t axis) const;
    [[nodiscard]] std::size_t numel() const;

    [[nodiscard]] std::span<const double> data() const;
    /// Mutable view of the payload. Intended for leaves (parameters, inputs).
    [[nodiscard]] std::span<double> data_mut();
    [[nodiscard]] double item() const;
    [[nodiscard]] double at(std::size_t flat_index) const { return data()[flat_index]; }

    [[nodiscard]] bool requires_grad() const;
    Tensor &set_requires_grad(bool flag);
    [[nodiscard]] bool is_leaf() const;
    [[nodiscard]] const TapeNode *node() const;

    [[nodiscard]] bool has_grad() const;
    [[nodiscard]] std::span<const double> grad() const;
    [[nodiscard]] std::span<double> grad_mut();
    void zero_grad();

    /// Copy of the payload with no graph attached.
    [[nodiscard]] Tensor detach() const;

    /// Accumulates d(this)/d(leaf) into every reachable requires_grad tensor.
    /// Gradients add up across calls until ``zero_grad``.
    void backward() const;

    [[nodiscard]] bool same_storage(const Tensor &other) const { return impl_ == other.impl_; }

  private:
    friend struct TapeNode;
    std::shared_ptr<detail::TensorImpl> impl_;
    detail::TensorImpl &impl() const;
};

struct TapeNode {
    OpKind op;
    std::vector<Tensor> inputs;
    BackwardFn backward;
};

[[nodiscard]] bool grad_enabled();

/// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard &) = delete;
    NoGradGuard &operator=(const NoGradGuard &) = delete;

  private:
    bool previous_;
};

} // namespace hqunet
