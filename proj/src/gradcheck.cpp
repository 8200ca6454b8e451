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

#include "hqunet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hqunet {

bool gradients_agree(double analytic, double numeric, const GradCheckOptions &opts) {
    const double scale = std::max(std::abs(analytic), std::abs(numeric));
    return std::abs(analytic - numeric) <= std::max(opts.abs_floor, opts.rel_tol * scale);
}

GradCheckResult check_gradients(const std::function<Tensor()> &loss,
                                const std::vector<nn::NamedTensor> &params,
                                const GradCheckOptions &opts) {
    for (const auto &p : params) {
        Tensor t = p.tensor;
        t.zero_grad();
    }
    const Tensor value = loss();
    if (value.numel() != 1) {
        throw std::invalid_argument("check_gradients: loss must be a scalar, got shape " +
                                    shape_str(value.shape()));
    }
    value.backward();

    GradCheckResult result;
    NoGradGuard no_grad;
    for (const auto &p : params) {
        Tensor t = p.tensor;
        std::vector<double> analytic(t.numel(), 0.0);
        if (t.has_grad()) {
            const auto g = t.grad();
            analytic.assign(g.begin(), g.end());
        }
        auto data = t.data_mut();
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + opts.step;
            const double up = loss().item();
            data[i] = saved - opts.step;
            const double down = loss().item();
            data[i] = saved;
            const double numeric = (up - down) / (2.0 * opts.step);

            const double err = std::abs(analytic[i] - numeric);
            const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
            const double rel = scale > 0.0 ? err / scale : 0.0;
            ++result.checked;
            if (!gradients_agree(analytic[i], numeric, opts)) {
                ++result.failures;
            }
            result.max_abs_err = std::max(result.max_abs_err, err);
            if (err > opts.abs_floor && rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst = p.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    return result;
}

} // namespace hqunet
