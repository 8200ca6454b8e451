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
 * Gate lists over a StateVector, exact expectation readout, and two ways of
 * differentiating expectations with respect to rotation angles: the
 * parameter-shift rule and an adjoint (reverse) sweep.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hqunet/qsim/state_vector.hpp"

namespace hqunet::qsim {

enum class GateKind : std::uint8_t { RX, RY, RZ, CNOT };

[[nodiscard]] const char *gate_name(GateKind kind);
[[nodiscard]] bool is_rotation(GateKind kind);
[[nodiscard]] Axis rotation_axis(GateKind kind);

struct GateOp {
    GateKind kind;
    /// Rotations use ``qubit0`` only; CNOT uses (control = qubit0, target = qubit1).
    std::size_t qubit0 = 0;
    std::size_t qubit1 = 0;
    double angle = 0.0;
    /// Index of the shared parameter this angle is bound to, if any.
    std::optional<std::size_t> param;
};

struct Observable {
    Basis basis;
    std::size_t qubit;
};

class Circuit {
  public:
    explicit Circuit(std::size_t num_qubits);

    void add_rotation(GateKind kind, std::size_t qubit, double angle,
                      std::optional<std::size_t> param = std::nullopt);
    void add_cnot(std::size_t control, std::size_t target);

    /// Sets the angle of every bound gate from ``params[gate.param]``.
    void bind(std::span<const double> params);

    [[nodiscard]] std::size_t num_qubits() const { return num_qubits_; }
    [[nodiscard]] const std::vector<GateOp> &gates() const { return gates_; }
    /// One past the largest bound parameter index (0 if none).
    [[nodiscard]] std::size_t num_params() const;

    /// Runs from |0...0>.
    [[nodiscard]] StateVector run() const;
    /// Applies gates [first, last) to ``state``.
    void apply(StateVector &state, std::size_t first = 0,
               std::size_t last = static_cast<std::size_t>(-1)) const;

    /// One gate per line: ``<kind> q=<qubits> angle=<radians>``.
    [[nodiscard]] std::string dump() const;

  private:
    std::size_t num_qubits_;
    std::vector<GateOp> gates_;
};

void apply_gate(StateVector &state, const GateOp &gate);

[[nodiscard]] std::vector<double> expectations(const StateVector &state,
                                               std::span<const Observable> observables);

/// sum_q wz[q] <Z_q> + wx[q] <X_q> with weights laid out [wz..., wx...].
[[nodiscard]] double weighted_expectation(const StateVector &state,
                                          std::span<const double> weights);

/// d<O>/d(angle of gate ``gate_index``) for each observable, by evaluating
/// the circuit at angle +- pi/2.
[[nodiscard]] std::vector<double> parameter_shift_grad(const Circuit &circuit,
                                                       std::span<const Observable> observables,
                                                       std::size_t gate_index);

/// d<O>/d(param) for each observable, summing the shift rule over every
/// gate bound to ``param``.
[[nodiscard]] std::vector<double> parameter_shift_param_grad(
    const Circuit &circuit, std::span<const Observable> observables, std::size_t param);

/// Gradient of weighted_expectation(final state, weights) with respect to
/// every bound parameter [0, circuit.num_params()), by parameter shift.
[[nodiscard]] std::vector<double> parameter_shift_weighted(const Circuit &circuit,
                                                           std::span<const double> weights);

/// Same quantity by a single adjoint sweep over the gate list.
[[nodiscard]] std::vector<double> adjoint_weighted(const Circuit &circuit,
                                                   std::span<const double> weights);

} // namespace hqunet::qsim
