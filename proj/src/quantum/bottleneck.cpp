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

#include "hqunet/bottleneck.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "hqunet/nn/functional.hpp"
#include "hqunet/ops.hpp"

namespace hqunet::quantum {

using qsim::Axis;
using qsim::Complex;
using qsim::GateKind;
using qsim::StateVector;

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kCircuitParamBase = kEncodingAngles;

const char *layout_name(FilterLayout layout) {
    return layout == FilterLayout::Chain ? "chain" : "tile";
}

FilterLayout parse_layout(const std::string &name) {
    if (name == "chain") {
        return FilterLayout::Chain;
    }
    if (name == "tile") {
        return FilterLayout::Tile;
    }
    throw std::invalid_argument("unknown filter layout '" + name + "' (expected chain or tile)");
}

const char *gradient_name(CircuitGradient method) {
    return method == CircuitGradient::ParameterShift ? "parameter-shift" : "adjoint";
}

CircuitGradient parse_gradient(const std::string &name) {
    if (name == "parameter-shift") {
        return CircuitGradient::ParameterShift;
    }
    if (name == "adjoint") {
        return CircuitGradient::Adjoint;
    }
    throw std::invalid_argument("unknown circuit gradient '" + name +
                                "' (expected parameter-shift or adjoint)");
}

std::array<double, kCircuitAngles> QuanvAngles::flat() const {
    return {row.theta[0], row.theta[1], row.phi[0], row.phi[1],
            col.theta[0], col.theta[1], col.phi[0], col.phi[1]};
}

QuanvAngles QuanvAngles::from_flat(std::span<const double> v) {
    if (v.size() != kCircuitAngles) {
        throw std::invalid_argument("QuanvAngles: expected 8 angles, got " +
                                    std::to_string(v.size()));
    }
    return {{{v[0], v[1]}, {v[2], v[3]}}, {{v[4], v[5]}, {v[6], v[7]}}};
}

std::vector<FilterApplication> filter_schedule(FilterLayout layout) {
    const std::size_t step = layout == FilterLayout::Chain ? 1 : 2;
    std::vector<FilterApplication> out;
    for (std::size_t r = 0; r < kGrid; ++r) {
        for (std::size_t c = 0; c + 1 < kGrid; c += step) {
            out.push_back({Pass::Row, qubit_index(r, c), qubit_index(r, c + 1)});
        }
    }
    for (std::size_t c = 0; c < kGrid; ++c) {
        for (std::size_t r = 0; r + 1 < kGrid; r += step) {
            out.push_back({Pass::Column, qubit_index(r, c), qubit_index(r + 1, c)});
        }
    }
    return out;
}

namespace {

void check_features(std::span<const double> features) {
    if (features.size() != kEncodingAngles) {
        throw std::invalid_argument("encode: expected 48 features ([3, 4, 4]), got " +
                                    std::to_string(features.size()));
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (!(features[i] >= -1.0 && features[i] <= 1.0)) {
            throw std::invalid_argument("encode: feature " + std::to_string(i) + " = " +
                                        std::to_string(features[i]) + " outside [-1, 1]");
        }
    }
}

void check_register(const StateVector &state) {
    if (state.num_qubits() != kNumQubits) {
        throw std::invalid_argument("quanvolution needs 16 qubits, state has " +
                                    std::to_string(state.num_qubits()));
    }
}

} // namespace

StateVector encode(std::span<const double> features) {
    check_features(features);
    std::vector<Complex> amps{Complex{1.0, 0.0}};
    amps.reserve(std::size_t{1} << kNumQubits);
    for (std::size_t q = 0; q < kNumQubits; ++q) {
        // Single-qubit state RZ RY RX |0>.
        const auto rx = qsim::rotation_matrix(Axis::X, kPi * features[q]);
        const auto ry = qsim::rotation_matrix(Axis::Y, kPi * features[kNumQubits + q]);
        const auto rz = qsim::rotation_matrix(Axis::Z, kPi * features[2 * kNumQubits + q]);
        Complex v0 = rx[0];
        Complex v1 = rx[2];
        const Complex w0 = ry[0] * v0 + ry[1] * v1;
        const Complex w1 = ry[2] * v0 + ry[3] * v1;
        v0 = rz[0] * w0;
        v1 = rz[3] * w1;
        const std::size_t len = amps.size();
        amps.resize(2 * len);
        for (std::size_t j = 0; j < len; ++j) {
            amps[len + j] = amps[j] * v1;
            amps[j] *= v0;
        }
    }
    return StateVector(std::move(amps));
}

void apply_filter(StateVector &state, std::size_t qubit_a, std::size_t qubit_b,
                  const FilterAngles &angles) {
    if (qubit_a == qubit_b) {
        throw std::invalid_argument("apply_filter: both filter qubits are " +
                                    std::to_string(qubit_a));
    }
    state.apply_rotation(Axis::Y, qubit_a, angles.theta[0]);
    state.apply_rotation(Axis::Y, qubit_b, angles.theta[1]);
    state.apply_cnot(qubit_a, qubit_b);
    state.apply_rotation(Axis::Y, qubit_a, angles.phi[0]);
    state.apply_rotation(Axis::Y, qubit_b, angles.phi[1]);
}

void quanvolve(StateVector &state, const QuanvAngles &angles, FilterLayout layout) {
    check_register(state);
    for (const auto &app : filter_schedule(layout)) {
        apply_filter(state, app.qubit_a, app.qubit_b, app.pass == Pass::Row ? angles.row : angles.col);
    }
}

std::vector<double> measure_multibasis(const StateVector &state) {
    check_register(state);
    return state.measure_z_then_x();
}

qsim::Circuit build_circuit(std::span<const double> features, const QuanvAngles &angles,
                            FilterLayout layout) {
    check_features(features);
    qsim::Circuit circuit(kNumQubits);
    for (std::size_t q = 0; q < kNumQubits; ++q) {
        circuit.add_rotation(GateKind::RX, q, kPi * features[q], q);
        circuit.add_rotation(GateKind::RY, q, kPi * features[kNumQubits + q], kNumQubits + q);
        circuit.add_rotation(GateKind::RZ, q, kPi * features[2 * kNumQubits + q],
                             2 * kNumQubits + q);
    }
    const auto flat = angles.flat();
    for (const auto &app : filter_schedule(layout)) {
        const std::size_t base = kCircuitParamBase + (app.pass == Pass::Row ? 0 : 4);
        circuit.add_rotation(GateKind::RY, app.qubit_a, flat[base - kCircuitParamBase], base);
        circuit.add_rotation(GateKind::RY, app.qubit_b, flat[base - kCircuitParamBase + 1],
                             base + 1);
        circuit.add_cnot(app.qubit_a, app.qubit_b);
        circuit.add_rotation(GateKind::RY, app.qubit_a, flat[base - kCircuitParamBase + 2],
                             base + 2);
        circuit.add_rotation(GateKind::RY, app.qubit_b, flat[base - kCircuitParamBase + 3],
                             base + 3);
    }
    return circuit;
}

std::string describe_circuit(std::span<const double> features, const QuanvAngles &angles,
                             FilterLayout layout) {
    const auto circuit = build_circuit(features, angles, layout);
    const auto schedule = filter_schedule(layout);
    std::ostringstream os;
    os.precision(10);
    os << "# quantum bottleneck circuit: " << kNumQubits << " qubits, layout "
       << layout_name(layout) << ", " << schedule.size() << " filter applications\n";
    os << "# theta_R = (" << angles.row.theta[0] << ", " << angles.row.theta[1] << ")  phi_R = ("
       << angles.row.phi[0] << ", " << angles.row.phi[1] << ")\n";
    os << "# theta_C = (" << angles.col.theta[0] << ", " << angles.col.theta[1] << ")  phi_C = ("
       << angles.col.phi[0] << ", " << angles.col.phi[1] << ")\n";
    os << "# encoding: RX(pi f1), RY(pi f2), RZ(pi f3) per qubit 4r+c\n";
    const auto &gates = circuit.gates();
    auto gate_line = [&os](const qsim::GateOp &g) {
        os << "gate " << qsim::gate_name(g.kind);
        if (g.kind == GateKind::CNOT) {
            os << " q=" << g.qubit0 << "," << g.qubit1 << '\n';
        } else {
            os << " q=" << g.qubit0 << " angle=" << g.angle << '\n';
        }
    };
    for (std::size_t i = 0; i < kEncodingAngles; ++i) {
        gate_line(gates[i]);
    }
    for (std::size_t f = 0; f < schedule.size(); ++f) {
        const auto &app = schedule[f];
        os << "# filter " << f << " " << (app.pass == Pass::Row ? "row" : "column")
           << " pass qubits (" << app.qubit_a << ", " << app.qubit_b << ")\n";
        for (std::size_t k = 0; k < 5; ++k) {
            gate_line(gates[kEncodingAngles + 5 * f + k]);
        }
    }
    const auto m = circuit.run().measure_z_then_x();
    os << "# measurement [Z_0..Z_15, X_0..X_15]\n";
    for (std::size_t i = 0; i < m.size(); ++i) {
        os << "meas " << (i < kNumQubits ? "Z" : "X") << (i % kNumQubits) << " " << m[i] << '\n';
    }
    return os.str();
}

Tensor circuit_layer(const Tensor &features, const Tensor &circuit_angles, FilterLayout layout,
                     CircuitGradient method) {
    if (features.ndim() != 2 || features.dim(1) != kEncodingAngles) {
        throw std::invalid_argument("circuit_layer: features must be [N, 48], got " +
                                    shape_str(features.shape()));
    }
    if (circuit_angles.shape() != Shape{kCircuitAngles}) {
        throw std::invalid_argument("circuit_layer: circuit angles must be [8], got " +
                                    shape_str(circuit_angles.shape()));
    }
    const std::size_t n = features.dim(0);
    const auto angles = QuanvAngles::from_flat(circuit_angles.data());
    std::vector<double> out(n * kMeasurements);
    for (std::size_t b = 0; b < n; ++b) {
        auto state = encode(features.data().subspan(b * kEncodingAngles, kEncodingAngles));
        quanvolve(state, angles, layout);
        const auto m = state.measure_z_then_x();
        std::copy(m.begin(), m.end(), out.begin() + static_cast<std::ptrdiff_t>(b * kMeasurements));
    }
    return Tensor::from_op(
        {n, kMeasurements}, std::move(out), OpKind::QuantumCircuit, {features, circuit_angles},
        [features, angles, layout, method, n](std::span<const double> g, std::span<const double>,
                                              std::span<const std::span<double>> gin) {
            // Batch elements reduce into the shared angles in index order.
            for (std::size_t b = 0; b < n; ++b) {
                const auto f = features.data().subspan(b * kEncodingAngles, kEncodingAngles);
                const auto weights = g.subspan(b * kMeasurements, kMeasurements);
                const auto circuit = build_circuit(f, angles, layout);
                const auto grad = method == CircuitGradient::ParameterShift
                                      ? qsim::parameter_shift_weighted(circuit, weights)
                                      : qsim::adjoint_weighted(circuit, weights);
                if (!gin[0].empty()) {
                    for (std::size_t k = 0; k < kEncodingAngles; ++k) {
                        gin[0][b * kEncodingAngles + k] += kPi * grad[k];
                    }
                }
                if (!gin[1].empty()) {
                    for (std::size_t k = 0; k < kCircuitAngles; ++k) {
                        gin[1][k] += grad[kCircuitParamBase + k];
                    }
                }
            }
        });
}

QuantumBottleneck::QuantumBottleneck(std::size_t channels_, std::size_t height_,
                                     std::size_t width_, Rng &rng, BottleneckOptions options_)
    : channels{channels_}, height{height_}, width{width_}, options{options_} {
    if (height < kGrid || width < kGrid) {
        throw std::invalid_argument("QuantumBottleneck: bottleneck extent " +
                                    std::to_string(height) + "x" + std::to_string(width) +
                                    " is below the 4x4 qubit grid");
    }
    pre_conv = register_module(
        "pre_conv", std::make_shared<nn::Conv2d>(channels, kFeatureChannels, 1, nn::Conv2dOptions{},
                                                 true, rng));
    Tensor init({kCircuitAngles});
    for (auto &v : init.data_mut()) {
        v = rng.uniform(-kPi, kPi);
    }
    circuit_angles = register_parameter("circuit_angles", init);
    post_linear = register_module(
        "post_linear", std::make_shared<nn::Linear>(kMeasurements, channels * height * width, rng));
}

Tensor QuantumBottleneck::pre_q(const Tensor &x) const {
    if (x.ndim() != 4 || x.dim(1) != channels || x.dim(2) < kGrid || x.dim(3) < kGrid) {
        throw std::invalid_argument("pre_q: expected [N, " + std::to_string(channels) +
                                    ", >=4, >=4] encoder features, got " + shape_str(x.shape()));
    }
    return hqunet::tanh(pre_conv->forward(nn::adaptive_avg_pool(x, kGrid, kGrid)));
}

Tensor QuantumBottleneck::post_q(const Tensor &measurements) const {
    if (measurements.ndim() != 2 || measurements.dim(1) != kMeasurements) {
        throw std::invalid_argument("post_q: expected [N, 32] measurements, got " +
                                    shape_str(measurements.shape()));
    }
    const std::size_t n = measurements.dim(0);
    return reshape(post_linear->forward(measurements), {n, channels, height, width});
}

Tensor QuantumBottleneck::forward(const Tensor &x) const {
    if (x.ndim() == 4 && (x.dim(2) != height || x.dim(3) != width)) {
        throw std::invalid_argument("QuantumBottleneck: configured for " + std::to_string(height) +
                                    "x" + std::to_string(width) + " features, got " +
                                    shape_str(x.shape()));
    }
    const Tensor features = pre_q(x);
    const std::size_t n = features.dim(0);
    const Tensor flat = reshape(features, {n, kEncodingAngles});
    return post_q(circuit_layer(flat, circuit_angles, options.layout, options.gradient));
}

} // namespace hqunet::quantum
