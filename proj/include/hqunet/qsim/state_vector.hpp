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
 * Dense noiseless statevector over at most 16 qubits.
 *
 * Qubit 0 is the least-significant bit of the basis-state index. Rotations
 * follow R_A(theta) = exp(-i theta A / 2).
 */

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hqunet::qsim {

using Complex = std::complex<double>;
using Matrix2 = std::array<Complex, 4>; // row-major 2x2

enum class Axis : std::uint8_t { X, Y, Z };
enum class Basis : std::uint8_t { Z, X };

inline constexpr std::size_t kMaxQubits = 16;

[[nodiscard]] Matrix2 rotation_matrix(Axis axis, double theta);
/// Elementwise d/dtheta of rotation_matrix.
[[nodiscard]] Matrix2 rotation_derivative(Axis axis, double theta);

class StateVector {
  public:
    /// |0...0> on ``num_qubits`` qubits.
    explicit StateVector(std::size_t num_qubits);
    /// Takes a full amplitude vector; its length must be 2^n for 1 <= n <= 16.
    explicit StateVector(std::vector<Complex> amplitudes);

    [[nodiscard]] std::size_t num_qubits() const { return num_qubits_; }
    [[nodiscard]] std::size_t dim() const { return amps_.size(); }
    [[nodiscard]] std::span<const Complex> amplitudes() const { return amps_; }
    [[nodiscard]] std::span<Complex> amplitudes_mut() { return amps_; }

    StateVector &apply_rotation(Axis axis, std::size_t qubit, double theta);
    StateVector &apply_cnot(std::size_t control, std::size_t target);
    /// Arbitrary (not necessarily unitary) 2x2 operator on one qubit.
    StateVector &apply_matrix(std::size_t qubit, const Matrix2 &m);

    [[nodiscard]] double expectation(Basis basis, std::size_t qubit) const;
    /// [<Z_0>..<Z_{n-1}>, <X_0>..<X_{n-1}>]
    [[nodiscard]] std::vector<double> measure_z_then_x() const;
    [[nodiscard]] double norm_squared() const;
    /// <this| M_qubit |ket> without materialising M|ket>.
    [[nodiscard]] Complex matrix_element(std::size_t qubit, const Matrix2 &m,
                                         const StateVector &ket) const;
    /// <this|other>
    [[nodiscard]] Complex inner(const StateVector &other) const;

  private:
    void check_qubit(const char *op, std::size_t qubit) const;

    std::size_t num_qubits_;
    std::vector<Complex> amps_;
};

} // namespace hqunet::qsim
