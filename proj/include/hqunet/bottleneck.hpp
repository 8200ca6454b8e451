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
 * Quantum bottleneck: a 4x4 grid of encoder features mapped onto 16 qubits,
 * processed by a separable two-qubit-filter quanvolution and read out in
 * the Z and X bases.
 *
 * Layout conventions used throughout:
 *   - grid cell (r, c) lives on qubit 4r + c;
 *   - features are [3, 4, 4] (channel-major), cell (r, c) of channel k
 *     drives rotation k (RX, RY, RZ) of that qubit with angle pi * f;
 *   - the 8 circuit angles are stored
 *     [theta_R1, theta_R2, phi_R1, phi_R2, theta_C1, theta_C2, phi_C1, phi_C2];
 *   - the measurement vector is [<Z_0>..<Z_15>, <X_0>..<X_15>].
 */

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hqunet/nn/modules.hpp"
#include "hqunet/qsim/circuit.hpp"
#include "hqunet/qsim/state_vector.hpp"
#include "hqunet/random.hpp"
#include "hqunet/tensor.hpp"

namespace hqunet::quantum {

inline constexpr std::size_t kGrid = 4;
inline constexpr std::size_t kNumQubits = kGrid * kGrid;
inline constexpr std::size_t kFeatureChannels = 3;
inline constexpr std::size_t kEncodingAngles = kFeatureChannels * kNumQubits;
inline constexpr std::size_t kCircuitAngles = 8;
inline constexpr std::size_t kMeasurements = 2 * kNumQubits;

[[nodiscard]] constexpr std::size_t qubit_index(std::size_t row, std::size_t col) {
    return kGrid * row + col;
}

/// How filter applications pair neighbouring qubits within a row/column.
/// Chain: overlapping (0,1),(1,2),(2,3). Tile: disjoint (0,1),(2,3).
enum class FilterLayout { Chain, Tile };

enum class CircuitGradient { ParameterShift, Adjoint };

[[nodiscard]] const char *layout_name(FilterLayout layout);
[[nodiscard]] FilterLayout parse_layout(const std::string &name);
[[nodiscard]] const char *gradient_name(CircuitGradient method);
[[nodiscard]] CircuitGradient parse_gradient(const std::string &name);

struct FilterAngles {
    std::array<double, 2> theta{};
    std::array<double, 2> phi{};
};

struct QuanvAngles {
    FilterAngles row;
    FilterAngles col;

    [[nodiscard]] std::array<double, kCircuitAngles> flat() const;
    [[nodiscard]] static QuanvAngles from_flat(std::span<const double> values);
};

enum class Pass { Row, Column };

struct FilterApplication {
    Pass pass;
    std::size_t qubit_a; // control of the filter's CNOT
    std::size_t qubit_b;
};

/// Row pass (rows top to bottom, pairs left to right), then column pass
/// (columns left to right, pairs top to bottom).
[[nodiscard]] std::vector<FilterApplication> filter_schedule(FilterLayout layout = FilterLayout::Chain);

/// Product state prod_q RZ(pi f3) RY(pi f2) RX(pi f1) |0> from 48 features in [-1, 1].
[[nodiscard]] qsim::StateVector encode(std::span<const double> features);

/// RY(theta1) (x) RY(theta2), then CNOT(qa -> qb), then RY(phi1) (x) RY(phi2).
void apply_filter(qsim::StateVector &state, std::size_t qubit_a, std::size_t qubit_b,
                  const FilterAngles &angles);

void quanvolve(qsim::StateVector &state, const QuanvAngles &angles,
               FilterLayout layout = FilterLayout::Chain);

[[nodiscard]] std::vector<double> measure_multibasis(const qsim::StateVector &state);

/// Gate-level circuit on |0...0>: 48 encoding rotations bound to parameters
/// 0..47 (angle pi * f), then 5 gates per filter application with the RY
/// angles bound to parameters 48..55.
[[nodiscard]] qsim::Circuit build_circuit(std::span<const double> features,
                                          const QuanvAngles &angles,
                                          FilterLayout layout = FilterLayout::Chain);

/// Readable schedule, angles and measurement of the circuit for ``features``.
/// Exactly one line per gate starts with "gate ".
[[nodiscard]] std::string describe_circuit(std::span<const double> features,
                                           const QuanvAngles &angles,
                                           FilterLayout layout = FilterLayout::Chain);

/// Differentiable circuit layer: features [N, 48] in [-1, 1] and circuit
/// angles [8] -> measurements [N, 32]. Feature gradients come from the
/// encoding rotations (times pi); circuit-angle gradients sum over the batch.
[[nodiscard]] Tensor circuit_layer(const Tensor &features, const Tensor &circuit_angles,
                                   FilterLayout layout, CircuitGradient method);

struct BottleneckOptions {
    FilterLayout layout = FilterLayout::Chain;
    CircuitGradient gradient = CircuitGradient::ParameterShift;
};

class QuantumBottleneck : public nn::Module {
  public:
    QuantumBottleneck(std::size_t channels, std::size_t height, std::size_t width, Rng &rng,
                      BottleneckOptions options = {});

    /// Adaptive pool to 4x4, 1x1 conv to 3 channels, tanh.
    [[nodiscard]] Tensor pre_q(const Tensor &x) const;
    /// Linear 32 -> C*H*W and reshape.
    [[nodiscard]] Tensor post_q(const Tensor &measurements) const;
    [[nodiscard]] Tensor forward(const Tensor &x) const;

    [[nodiscard]] QuanvAngles angles() const { return QuanvAngles::from_flat(circuit_angles.data()); }

    std::size_t channels;
    std::size_t height;
    std::size_t width;
    BottleneckOptions options;
    std::shared_ptr<nn::Conv2d> pre_conv;
    Tensor circuit_angles;
    std::shared_ptr<nn::Linear> post_linear;
};

} // namespace hqunet::quantum
