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

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "hqunet/nn/modules.hpp"
#include "hqunet/tensor.hpp"

namespace hqunet {

struct GradCheckOptions {
    double step = 1e-6;     // central-difference half width
    double rel_tol = 1e-4;
    double abs_floor = 1e-7;
};

struct GradCheckResult {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double max_abs_err = 0.0;
    double max_rel_err = 0.0;
    std::string worst; // "<name>[<index>]" of the largest relative error
    [[nodiscard]] bool passed() const { return checked > 0 && failures == 0; }
};

/// |a - fd| <= max(abs_floor, rel_tol * max(|a|, |fd|)).
[[nodiscard]] bool gradients_agree(double analytic, double numeric, const GradCheckOptions &opts);

/// Compares the backward pass of ``loss`` (a scalar-valued closure that
/// reads ``params``) against central differences over every element.
[[nodiscard]] GradCheckResult check_gradients(const std::function<Tensor()> &loss,
                                              const std::vector<nn::NamedTensor> &params,
                                              const GradCheckOptions &opts = {});

} // namespace hqunet
