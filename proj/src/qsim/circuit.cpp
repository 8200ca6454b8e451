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

#include "hqunet/qsim/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace hqunet::qsim {

const char *gate_name(GateKind kind) {
    switch (kind) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
    }
    return "?";
}

bool is_rotation(GateKind kind) { return kind != GateKind::CNOT; }

Axis rotation_axis(GateKind kind) {
    switch (kind) {
    case GateKind::RX: return Axis::X;
    case GateKind::RY: return Axis::Y;
    case GateKind::RZ: return Axis::Z;
    case GateKind::CNOT: break;
    }
    throw std::invalid_argument("rotation_axis: CNOT is not a rotation");
}

Circuit::Circuit(std::size_t num_qubits) : num_qubits_{num_qubits} {
    if (num_qubits == 0 || num_qubits > kMaxQubits) {
        throw std::invalid_argument("Circuit: qubit count " + std::to_string(num_qubits) +
                                    " outside [1, 16]");
    }
}

void Circuit::add_rotation(GateKind kind, std::size_t qubit, double angle,
                           std::optional<std::size_t> param) {
    if (!is_rotation(kind)) {
        throw std::invalid_argument("Circuit::add_rotation: CNOT is not a rotation");
    }
    if (qubit >= num_qubits_) {
        throw std::out_of_range("Circuit::add_rotation: qubit " + std::to_string(qubit) +
                                " out of range");
    }
    gates_.push_back({kind, qubit, 0, angle, param});
}

void Circuit::add_cnot(std::size_t control, std::size_t target) {
    if (control >= num_qubits_ || target >= num_qubits_) {
        throw std::out_of_range("Circuit::add_cnot: qubit out of range");
    }
    if (control == target) {
        throw std::invalid_argument("Circuit::add_cnot: control equals target (" +
                                    std::to_string(control) + ")");
    }
    gates_.push_back({GateKind::CNOT, control, target, 0.0, std::nullopt});
}

void Circuit::bind(std::span<const double> params) {
    for (auto &g : gates_) {
        if (g.param) {
            if (*g.param >= params.size()) {
                throw std::out_of_range("Circuit::bind: parameter " + std::to_string(*g.param) +
                                        " not supplied");
            }
            g.angle = params[*g.param];
        }
    }
}

std::size_t Circuit::num_params() const {
    std::size_t n = 0;
    for (const auto &g : gates_) {
        if (g.param) {
            n = std::max(n, *g.param + 1);
        }
    }
    return n;
}

void apply_gate(StateVector &state, const GateOp &gate) {
    if (gate.kind == GateKind::CNOT) {
        state.apply_cnot(gate.qubit0, gate.qubit1);
    } else {
        state.apply_rotation(rotation_axis(gate.kind), gate.qubit0, gate.angle);
    }
}

StateVector Circuit::run() const {
    StateVector s(num_qubits_);
    apply(s);
    return s;
}

void Circuit::apply(StateVector &state, std::size_t first, std::size_t last) const {
    last = std::min(last, gates_.size());
    for (std::size_t i = first; i < last; ++i) {
        apply_gate(state, gates_[i]);
    }
}

std::string Circuit::dump() const {
    std::ostringstream os;
    os.precision(17);
    for (const auto &g : gates_) {
        os << gate_name(g.kind) << " q=" << g.qubit0;
        if (g.kind == GateKind::CNOT) {
            os << "," << g.qubit1 << '\n';
        } else {
            os << " angle=" << g.angle << '\n';
        }
    }
    return os.str();
}

std::vector<double> expectations(const StateVector &state,
                                 std::span<const Observable> observables) {
    std::vector<double> out;
    out.reserve(observables.size());
    for (const auto &o : observables) {
        out.push_back(state.expectation(o.basis, o.qubit));
    }
    return out;
}

double weighted_expectation(const StateVector &state, std::span<const double> weights) {
    const std::size_t n = state.num_qubits();
    if (weights.size() != 2 * n) {
        throw std::invalid_argument("weighted_expectation: expected " + std::to_string(2 * n) +
                                    " weights, got " + std::to_string(weights.size()));
    }
    double acc = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
        if (weights[q] != 0.0) {
            acc += weights[q] * state.expectation(Basis::Z, q);
        }
        if (weights[n + q] != 0.0) {
            acc += weights[n + q] * state.expectation(Basis::X, q);
        }
    }
    return acc;
}

namespace {

constexpr double kShift = std::numbers::pi / 2.0;

void check_weights(const Circuit &circuit, std::span<const double> weights) {
    if (weights.size() != 2 * circuit.num_qubits()) {
        throw std::invalid_argument("expected " + std::to_string(2 * circuit.num_qubits()) +
                                    " observable weights, got " + std::to_string(weights.size()));
    }
}

StateVector run_shifted(const Circuit &circuit, const StateVector &prefix, std::size_t gate_index,
                        double shift) {
    StateVector s = prefix;
    GateOp g = circuit.gates()[gate_index];
    g.angle += shift;
    apply_gate(s, g);
    circuit.apply(s, gate_index + 1);
    return s;
}

// H|psi> for H = sum_q wz[q] Z_q + wx[q] X_q.
StateVector apply_weighted_observable(const StateVector &psi, std::span<const double> weights) {
    const std::size_t n = psi.num_qubits();
    const auto amps = psi.amplitudes();
    std::vector<Complex> out(amps.size());
    for (std::size_t i = 0; i < amps.size(); ++i) {
        double diag = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            diag += ((i >> q) & 1U) ? -weights[q] : weights[q];
        }
        out[i] = diag * amps[i];
    }
    for (std::size_t q = 0; q < n; ++q) {
        const double wx = weights[n + q];
        if (wx == 0.0) {
            continue;
        }
        const std::size_t mask = std::size_t{1} << q;
        for (std::size_t i = 0; i < amps.size(); ++i) {
            out[i] += wx * amps[i ^ mask];
        }
    }
    return StateVector(std::move(out));
}

} // namespace

std::vector<double> parameter_shift_grad(const Circuit &circuit,
                                         std::span<const Observable> observables,
                                         std::size_t gate_index) {
    if (gate_index >= circuit.gates().size()) {
        throw std::out_of_range("parameter_shift_grad: gate index " + std::to_string(gate_index) +
                                " out of range");
    }
    if (!is_rotation(circuit.gates()[gate_index].kind)) {
        throw std::invalid_argument("parameter_shift_grad: gate " + std::to_string(gate_index) +
                                    " is a CNOT, not a rotation");
    }
    StateVector prefix(circuit.num_qubits());
    circuit.apply(prefix, 0, gate_index);
    const auto plus = expectations(run_shifted(circuit, prefix, gate_index, kShift), observables);
    const auto minus = expectations(run_shifted(circuit, prefix, gate_index, -kShift), observables);
    std::vector<double> grad(observables.size());
    for (std::size_t k = 0; k < grad.size(); ++k) {
        grad[k] = 0.5 * (plus[k] - minus[k]);
    }
    return grad;
}

std::vector<double> parameter_shift_param_grad(const Circuit &circuit,
                                               std::span<const Observable> observables,
                                               std::size_t param) {
    std::vector<double> grad(observables.size(), 0.0);
    bool found = false;
    StateVector prefix(circuit.num_qubits());
    const auto &gates = circuit.gates();
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (gates[i].param == param) {
            found = true;
            const auto plus = expectations(run_shifted(circuit, prefix, i, kShift), observables);
            const auto minus = expectations(run_shifted(circuit, prefix, i, -kShift), observables);
            for (std::size_t k = 0; k < grad.size(); ++k) {
                grad[k] += 0.5 * (plus[k] - minus[k]);
            }
        }
        apply_gate(prefix, gates[i]);
    }
    if (!found) {
        throw std::invalid_argument("parameter_shift_param_grad: no rotation bound to parameter " +
                                    std::to_string(param));
    }
    return grad;
}

std::vector<double> parameter_shift_weighted(const Circuit &circuit,
                                             std::span<const double> weights) {
    check_weights(circuit, weights);
    std::vector<double> grad(circuit.num_params(), 0.0);
    StateVector prefix(circuit.num_qubits());
    const auto &gates = circuit.gates();
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (gates[i].param) {
            const double plus =
                weighted_expectation(run_shifted(circuit, prefix, i, kShift), weights);
            const double minus =
                weighted_expectation(run_shifted(circuit, prefix, i, -kShift), weights);
            grad[*gates[i].param] += 0.5 * (plus - minus);
        }
        apply_gate(prefix, gates[i]);
    }
    return grad;
}

std::vector<double> adjoint_weighted(const Circuit &circuit, std::span<const double> weights) {
    check_weights(circuit, weights);
    std::vector<double> grad(circuit.num_params(), 0.0);
    StateVector psi = circuit.run();
    StateVector lambda = apply_weighted_observable(psi, weights);
    const auto &gates = circuit.gates();
    for (std::size_t i = gates.size(); i-- > 0;) {
        const GateOp &g = gates[i];
        if (g.kind == GateKind::CNOT) {
            psi.apply_cnot(g.qubit0, g.qubit1);
            lambda.apply_cnot(g.qubit0, g.qubit1);
            continue;
        }
        const Axis axis = rotation_axis(g.kind);
        psi.apply_rotation(axis, g.qubit0, -g.angle);
        if (g.param) {
            grad[*g.param] +=
                2.0 * lambda.matrix_element(g.qubit0, rotation_derivative(axis, g.angle), psi).real();
        }
        lambda.apply_rotation(axis, g.qubit0, -g.angle);
    }
    return grad;
}

} // namespace hqunet::qsim
