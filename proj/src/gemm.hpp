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

#include <Eigen/Core>

namespace hqunet::detail {

/// Row-major C[m x n] (+)= op(A) * op(B), op(A) is m x k and op(B) is k x n.
/// A is stored k x m when trans_a, B is stored n x k when trans_b.
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                 const double *a, const double *b, double *c, bool accumulate) {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using ConstMap = Eigen::Map<const RowMat>;
    const auto mi = static_cast<Eigen::Index>(m);
    const auto ni = static_cast<Eigen::Index>(n);
    const auto ki = static_cast<Eigen::Index>(k);
    Eigen::Map<RowMat> cm(c, mi, ni);
    if (!accumulate) {
        cm.setZero();
    }
    if (m == 0 || n == 0 || k == 0) {
        return;
    }
    if (!trans_a && !trans_b) {
        cm.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ki, ni);
    } else if (trans_a && !trans_b) {
        cm.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ki, ni);
    } else if (!trans_a && trans_b) {
        cm.noalias() += ConstMap(a, mi, ki) * ConstMap(b, ni, ki).transpose();
    } else {
        cm.noalias() += ConstMap(a, ki, mi).transpose() * ConstMap(b, ni, ki).transpose();
    }
}

} // namespace hqunet::detail
