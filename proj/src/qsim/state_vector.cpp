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

#include "hqunet/qsim/state_vector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hqunet::qsim {

namespace {
constexpr std::size_t insert_zero_bit(std::size_t value, std::size_t bit) {
    const std::size_t low = value & ((std::size_t{1} << bit) - 1);
    return ((value >> bit) << (bit + 1)) | low;
}

template <class PairFn> void for_each_pair(std::vector<Complex> &amps, std::size_t qubit, PairFn fn) {
    const std::size_t stride = std::size_t{1} << qubit;
    const std::size_t dim = amps.size();
    Complex *a = amps.data();
    for (std::size_t base = 0; base < dim; base += 2 * stride) {
        for (std::size_t j = base; j < base + stride; ++j) {
            fn(a[j], a[j + stride]);
        }
    }
}
} // namespace

Matrix2 rotation_matrix(Axis axis, double theta) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    switch (axis) {
    case Axis::X: return {Complex{c, 0.0}, Complex{0.0, -s}, Complex{0.0, -s}, Complex{c, 0.0}};
    case Axis::Y: return {Complex{c, 0.0}, Complex{-s, 0.0}, Complex{s, 0.0}, Complex{c, 0.0}};
    case Axis::Z: return {Complex{c, -s}, Complex{0.0, 0.0}, Complex{0.0, 0.0}, Complex{c, s}};
    }
    throw std::invalid_argument("rotation_matrix: unknown axis");
}

Matrix2 rotation_derivative(Axis axis, double theta) {
    const double c = 0.5 * std::cos(theta / 2.0);
    const double s = 0.5 * std::sin(theta / 2.0);
    switch (axis) {
    case Axis::X:
        return {Complex{-s, 0.0}, Complex{0.0, -c}, Complex{0.0, -c}, Complex{-s, 0.0}};
    case Axis::Y:
        return {Complex{-s, 0.0}, Complex{-c, 0.0}, Complex{c, 0.0}, Complex{-s, 0.0}};
    case Axis::Z:
        return {Complex{-s, -c}, Complex{0.0, 0.0}, Complex{0.0, 0.0}, Complex{-s, c}};
    }
    throw std::invalid_argument("rotation_derivative: unknown axis");
}

StateVector::StateVector(std::size_t num_qubits) : num_qubits_{num_qubits} {
    if (num_qubits == 0 || num_qubits > kMaxQubits) {
        throw std::invalid_argument("StateVector: qubit count " + std::to_string(num_qubits) +
                                    " outside [1, " + std::to_string(kMaxQubits) + "]");
    }
    amps_.assign(std::size_t{1} << num_qubits, Complex{0.0, 0.0});
    amps_[0] = 1.0;
}

StateVector::StateVector(std::vector<Complex> amplitudes) : amps_{std::move(amplitudes)} {
    const std::size_t dim = amps_.size();
    if (dim < 2 || !std::has_single_bit(dim) ||
        static_cast<std::size_t>(std::countr_zero(dim)) > kMaxQubits) {
        throw std::invalid_argument("StateVector: amplitude count " + std::to_string(dim) +
                                    " is not 2^n for n in [1, 16]");
    }
    num_qubits_ = static_cast<std::size_t>(std::countr_zero(dim));
}

void StateVector::check_qubit(const char *op, std::size_t qubit) const {
    if (qubit >= num_qubits_) {
        throw std::out_of_range(std::string(op) + ": qubit " + std::to_string(qubit) +
                                " out of range for " + std::to_string(num_qubits_) + " qubits");
    }
}

StateVector &StateVector::apply_rotation(Axis axis, std::size_t qubit, double theta) {
    check_qubit("apply_rotation", qubit);
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    switch (axis) {
    case Axis::X:
        for_each_pair(amps_, qubit, [c, s](Complex &a, Complex &b) {
            const Complex a0 = a;
            // -i s b = (s b.im, -s b.re)
            a = Complex{c * a0.real() + s * b.imag(), c * a0.imag() - s * b.real()};
            b = Complex{c * b.real() + s * a0.imag(), c * b.imag() - s * a0.real()};
        });
        break;
    case Axis::Y:
        for_each_pair(amps_, qubit, [c, s](Complex &a, Complex &b) {
            const Complex a0 = a;
            a = Complex{c * a0.real() - s * b.real(), c * a0.imag() - s * b.imag()};
            b = Complex{s * a0.real() + c * b.real(), s * a0.imag() + c * b.imag()};
        });
        break;
    case Axis::Z:
        for_each_pair(amps_, qubit, [c, s](Complex &a, Complex &b) {
            // a * (c - i s), b * (c + i s)
            a = Complex{c * a.real() + s * a.imag(), c * a.imag() - s * a.real()};
            b = Complex{c * b.real() - s * b.imag(), c * b.imag() + s * b.real()};
        });
        break;
    }
    return *this;
}

StateVector &StateVector::apply_matrix(std::size_t qubit, const Matrix2 &m) {
    check_qubit("apply_matrix", qubit);
    for_each_pair(amps_, qubit, [&m](Complex &a, Complex &b) {
        const Complex a0 = a;
        a = m[0] * a0 + m[1] * b;
        b = m[2] * a0 + m[3] * b;
    });
    return *this;
}

StateVector &StateVector::apply_cnot(std::size_t control, std::size_t target) {
    check_qubit("apply_cnot", control);
    check_qubit("apply_cnot", target);
    if (control == target) {
        throw std::invalid_argument("apply_cnot: control and target are both qubit " +
                                    std::to_string(control));
    }
    const std::size_t cmask = std::size_t{1} << control;
    const std::size_t tmask = std::size_t{1} << target;
    const std::size_t lo = std::min(control, target);
    const std::size_t hi = std::max(control, target);
    const std::size_t quarter = amps_.size() >> 2;
    for (std::size_t k = 0; k < quarter; ++k) {
        // Spread k around zero bits at positions lo and hi.
        std::size_t i = insert_zero_bit(insert_zero_bit(k, lo), hi);
        i |= cmask;
        std::swap(amps_[i], amps_[i | tmask]);
    }
    return *this;
}

double StateVector::expectation(Basis basis, std::size_t qubit) const {
    check_qubit("expectation", qubit);
    const std::size_t mask = std::size_t{1} << qubit;
    double acc = 0.0;
    if (basis == Basis::Z) {
        for (std::size_t i = 0; i < amps_.size(); ++i) {
            const double p = std::norm(amps_[i]);
            acc += (i & mask) ? -p : p;
        }
        return acc;
    }
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        if ((i & mask) == 0) {
            const Complex &a = amps_[i];
            const Complex &b = amps_[i | mask];
            acc += a.real() * b.real() + a.imag() * b.imag();
        }
    }
    return 2.0 * acc;
}

std::vector<double> StateVector::measure_z_then_x() const {
    std::vector<double> out(2 * num_qubits_);
    for (std::size_t q = 0; q < num_qubits_; ++q) {
        out[q] = expectation(Basis::Z, q);
        out[num_qubits_ + q] = expectation(Basis::X, q);
    }
    return out;
}

double StateVector::norm_squared() const {
    double acc = 0.0;
    for (const auto &a : amps_) {
        acc += std::norm(a);
    }
    return acc;
}

Complex StateVector::matrix_element(std::size_t qubit, const Matrix2 &m,
                                    const StateVector &ket) const {
    check_qubit("matrix_element", qubit);
    if (ket.dim() != dim()) {
        throw std::invalid_argument("StateVector::matrix_element: dimension mismatch");
    }
    const std::size_t stride = std::size_t{1} << qubit;
    const Complex *bra = amps_.data();
    const Complex *k = ket.amps_.data();
    Complex acc{0.0, 0.0};
    for (std::size_t base = 0; base < amps_.size(); base += 2 * stride) {
        for (std::size_t j = base; j < base + stride; ++j) {
            const Complex ka = k[j];
            const Complex kb = k[j + stride];
            acc += std::conj(bra[j]) * (m[0] * ka + m[1] * kb) +
                   std::conj(bra[j + stride]) * (m[2] * ka + m[3] * kb);
        }
    }
    return acc;
}

Complex StateVector::inner(const StateVector &other) const {
    if (other.dim() != dim()) {
        throw std::invalid_argument("StateVector::inner: dimension mismatch");
    }
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < amps_.size(); ++i) {
        acc += std::conj(amps_[i]) * other.amps_[i];
    }
    return acc;
}

} // namespace hqunet::qsim
