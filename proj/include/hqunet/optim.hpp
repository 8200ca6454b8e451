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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqunet/nn/modules.hpp"

namespace hqunet {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

void to_json(nlohmann::json &j, const AdamOptions &o);
void from_json(const nlohmann::json &j, AdamOptions &o);

/// One bias-corrected Adam update in place; ``step`` counts from 1.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, std::size_t step, const AdamOptions &opts);

/// Adam over a fixed list of parameters. Parameters without an accumulated
/// gradient are treated as having a zero gradient.
class Adam {
  public:
    Adam(std::vector<nn::NamedTensor> params, AdamOptions opts = {});

    void step();
    void zero_grad();

    [[nodiscard]] std::size_t steps() const { return step_; }
    [[nodiscard]] const AdamOptions &options() const { return opts_; }
    [[nodiscard]] const std::vector<nn::NamedTensor> &parameters() const { return params_; }

    /// Moment buffers named after their parameters.
    [[nodiscard]] std::vector<nn::NamedTensor> first_moments() const;
    [[nodiscard]] std::vector<nn::NamedTensor> second_moments() const;
    /// Restores moments by name; every parameter must be covered.
    void load_state(std::size_t step, const std::vector<nn::NamedTensor> &m,
                    const std::vector<nn::NamedTensor> &v);

  private:
    std::vector<nn::NamedTensor> params_;
    AdamOptions opts_;
    std::size_t step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

} // namespace hqunet
