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

#include "hqunet/optim.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace hqunet {

void AdamOptions::validate() const {
    if (!(lr > 0.0)) {
        throw std::invalid_argument("optimizer.lr: must be positive, got " + std::to_string(lr));
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0)) {
        throw std::invalid_argument("optimizer.beta1: must lie in [0, 1)");
    }
    if (!(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("optimizer.beta2: must lie in [0, 1)");
    }
    if (!(eps > 0.0)) {
        throw std::invalid_argument("optimizer.eps: must be positive");
    }
}

void to_json(nlohmann::json &j, const AdamOptions &o) {
    j = {{"lr", o.lr}, {"beta1", o.beta1}, {"beta2", o.beta2}, {"eps", o.eps}};
}

void from_json(const nlohmann::json &j, AdamOptions &o) {
    o.lr = j.value("lr", o.lr);
    o.beta1 = j.value("beta1", o.beta1);
    o.beta2 = j.value("beta2", o.beta2);
    o.eps = j.value("eps", o.eps);
}

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::size_t step, const AdamOptions &opts) {
    if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size()) {
        throw std::invalid_argument("adam_update: parameter has " + std::to_string(param.size()) +
                                    " entries but gradient has " + std::to_string(grad.size()) +
                                    " and moments " + std::to_string(m.size()) + "/" +
                                    std::to_string(v.size()));
    }
    if (step == 0) {
        throw std::invalid_argument("adam_update: step counts from 1");
    }
    const double t = static_cast<double>(step);
    const double c1 = 1.0 - std::pow(opts.beta1, t);
    const double c2 = 1.0 - std::pow(opts.beta2, t);
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * grad[i];
        v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * grad[i] * grad[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        param[i] -= opts.lr * mhat / (std::sqrt(vhat) + opts.eps);
    }
}

Adam::Adam(std::vector<nn::NamedTensor> params, AdamOptions opts)
    : params_{std::move(params)}, opts_{opts} {
    opts_.validate();
    for (const auto &p : params_) {
        m_.emplace_back(p.tensor.numel(), 0.0);
        v_.emplace_back(p.tensor.numel(), 0.0);
    }
}

void Adam::step() {
    ++step_;
    std::vector<double> zeros;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor &p = params_[i].tensor;
        std::span<const double> g;
        if (p.has_grad()) {
            g = p.grad();
        } else {
            zeros.assign(p.numel(), 0.0);
            g = zeros;
        }
        adam_update(p.data_mut(), g, m_[i], v_[i], step_, opts_);
    }
}

void Adam::zero_grad() {
    for (auto &p : params_) {
        p.tensor.zero_grad();
    }
}

namespace {

std::vector<nn::NamedTensor> export_moments(const std::vector<nn::NamedTensor> &params,
                                            const std::vector<std::vector<double>> &moments) {
    std::vector<nn::NamedTensor> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        out.push_back({params[i].name, Tensor(params[i].tensor.shape(), moments[i])});
    }
    return out;
}

void import_moments(const std::vector<nn::NamedTensor> &params,
                    const std::vector<nn::NamedTensor> &src,
                    std::vector<std::vector<double>> &moments, const char *what) {
    std::map<std::string, const Tensor *> by_name;
    for (const auto &s : src) {
        by_name[s.name] = &s.tensor;
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto it = by_name.find(params[i].name);
        if (it == by_name.end()) {
            throw std::invalid_argument(std::string("Adam: no ") + what + " state for '" +
                                        params[i].name + "'");
        }
        if (it->second->shape() != params[i].tensor.shape()) {
            throw std::invalid_argument(std::string("Adam: ") + what + " state for '" +
                                        params[i].name + "' has shape " +
                                        shape_str(it->second->shape()) + ", expected " +
                                        shape_str(params[i].tensor.shape()));
        }
        const auto d = it->second->data();
        moments[i].assign(d.begin(), d.end());
    }
}

} // namespace

std::vector<nn::NamedTensor> Adam::first_moments() const { return export_moments(params_, m_); }

std::vector<nn::NamedTensor> Adam::second_moments() const { return export_moments(params_, v_); }

void Adam::load_state(std::size_t step, const std::vector<nn::NamedTensor> &m,
                      const std::vector<nn::NamedTensor> &v) {
    auto m_new = m_;
    auto v_new = v_;
    import_moments(params_, m, m_new, "first-moment");
    import_moments(params_, v, v_new, "second-moment");
    m_ = std::move(m_new);
    v_ = std::move(v_new);
    step_ = step;
}

} // namespace hqunet
