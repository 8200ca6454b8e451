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

#include "hqunet/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace hqunet {

namespace {
thread_local bool g_grad_enabled = true;
} // namespace

std::size_t shape_numel(const Shape &shape) {
    std::size_t n = 1;
    for (auto extent : shape) {
        n *= extent;
    }
    return n;
}

std::string shape_str(const Shape &shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) {
            os << ", ";
        }
        os << shape[i];
    }
    os << ']';
    return os.str();
}

const char *op_name(OpKind op) {
    switch (op) {
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Scale: return "scale";
    case OpKind::MatMul: return "matmul";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::Relu: return "relu";
    case OpKind::Tanh: return "tanh";
    case OpKind::Reshape: return "reshape";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::MaxPool2x2: return "max_pool_2x2";
    case OpKind::ConvTranspose2x2: return "conv_transpose_2x2";
    case OpKind::AdaptiveAvgPool: return "adaptive_avg_pool";
    case OpKind::BatchNorm: return "batch_norm";
    case OpKind::Linear: return "linear";
    case OpKind::ConcatChannels: return "concat_channels";
    case OpKind::SoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::QuantumCircuit: return "quantum_circuit";
    }
    return "unknown";
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_{g_grad_enabled} { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor::Tensor(Shape shape, double fill) : impl_{std::make_shared<detail::TensorImpl>()} {
    impl_->data.assign(shape_numel(shape), fill);
    impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : impl_{std::make_shared<detail::TensorImpl>()} {
    if (shape_numel(shape) != values.size()) {
        throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " needs " +
                                    std::to_string(shape_numel(shape)) + " values, got " +
                                    std::to_string(values.size()));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
}

Tensor Tensor::from_op(Shape shape, std::vector<double> values, OpKind op,
                       std::vector<Tensor> inputs, BackwardFn backward) {
    Tensor out(std::move(shape), std::move(values));
    if (!g_grad_enabled) {
        return out;
    }
    const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                   [](const Tensor &t) { return t.requires_grad(); });
    if (needs) {
        out.impl_->requires_grad = true;
        out.impl_->node = std::make_shared<TapeNode>(
            TapeNode{op, std::move(inputs), std::move(backward)});
    }
    return out;
}

detail::TensorImpl &Tensor::impl() const {
    if (!impl_) {
        throw std::logic_error("Tensor: use of an undefined tensor");
    }
    return *impl_;
}

const Shape &Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
    const auto &s = shape();
    if (axis >= s.size()) {
        throw std::out_of_range("Tensor::dim: axis " + std::to_string(axis) +
                                " out of range for shape " + shape_str(s));
    }
    return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }

std::span<const double> Tensor::data() const { return impl().data; }
std::span<double> Tensor::data_mut() { return impl().data; }

double Tensor::item() const {
    if (numel() != 1) {
        throw std::invalid_argument("Tensor::item: tensor of shape " + shape_str(shape()) +
                                    " is not a scalar");
    }
    return impl().data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor &Tensor::set_requires_grad(bool flag) {
    if (!is_leaf()) {
        throw std::logic_error("Tensor::set_requires_grad: only leaves can change this flag");
    }
    impl().requires_grad = flag;
    return *this;
}

bool Tensor::is_leaf() const { return impl().node == nullptr; }
const TapeNode *Tensor::node() const { return impl().node.get(); }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl().grad; }

std::span<double> Tensor::grad_mut() {
    auto &self = impl();
    if (self.grad.empty()) {
        self.grad.assign(self.data.size(), 0.0);
    }
    return self.grad;
}

void Tensor::zero_grad() {
    auto &self = impl();
    std::fill(self.grad.begin(), self.grad.end(), 0.0);
}

Tensor Tensor::detach() const {
    return Tensor(impl().shape, impl().data);
}

void Tensor::backward() const {
    auto &root = impl();
    if (root.data.size() != 1) {
        throw std::invalid_argument("backward: loss must have exactly one element, got shape " +
                                    shape_str(root.shape));
    }
    if (!root.requires_grad) {
        throw std::logic_error("backward: loss does not depend on any tensor requiring grad");
    }

    // Iterative post-order DFS; reversing it yields a topological order
    // from the loss back to the leaves.
    std::vector<detail::TensorImpl *> order;
    std::unordered_set<const detail::TensorImpl *> visited;
    std::vector<std::pair<detail::TensorImpl *, std::size_t>> stack;
    stack.emplace_back(&root, 0);
    visited.insert(&root);
    while (!stack.empty()) {
        auto &[cur, next_child] = stack.back();
        if (cur->node && next_child < cur->node->inputs.size()) {
            auto *child = cur->node->inputs[next_child++].impl_.get();
            if (child->requires_grad && visited.insert(child).second) {
                stack.emplace_back(child, 0);
            }
            continue;
        }
        order.push_back(cur);
        stack.pop_back();
    }

    for (auto *t : order) {
        if (t->node) {
            t->grad.assign(t->data.size(), 0.0);
        } else if (t->grad.empty()) {
            t->grad.assign(t->data.size(), 0.0);
        }
    }
    root.grad[0] += 1.0;

    std::vector<std::span<double>> grad_in;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        auto *t = *it;
        if (!t->node) {
            continue;
        }
        grad_in.clear();
        for (auto &input : t->node->inputs) {
            auto &in = *input.impl_;
            grad_in.emplace_back(in.requires_grad ? std::span<double>(in.grad)
                                                  : std::span<double>{});
        }
        t->node->backward(t->grad, t->data, grad_in);
    }
}

} // namespace hqunet
