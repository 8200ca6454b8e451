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
#include <vector>

#include "hqunet/random.hpp"
#include "hqunet/tensor.hpp"

namespace testing {

inline hqunet::Tensor random_tensor(hqunet::Shape shape, hqunet::Rng &rng, double lo = -1.0,
                                    double hi = 1.0, bool requires_grad = false) {
    hqunet::Tensor t(std::move(shape));
    for (auto &v : t.data_mut()) {
        v = rng.uniform(lo, hi);
    }
    if (requires_grad) {
        t.set_requires_grad(true);
    }
    return t;
}

inline std::vector<double> to_vector(const hqunet::Tensor &t) {
    return {t.data().begin(), t.data().end()};
}

} // namespace testing
