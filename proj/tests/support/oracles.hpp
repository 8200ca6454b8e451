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
 * Test-only reference implementations. Nothing here calls into the library
 * code under test except for plain data types.
 */

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace oracle {

using C = std::complex<double>;

/// Dense square complex matrix, row-major.
struct Dense {
    std::size_t dim = 0;
    std::vector<C> m;

    explicit Dense(std::size_t d = 0) : dim{d}, m(d * d, C{0.0, 0.0}) {}
    C &operator()(std::size_t r, std::size_t c) { return m[r * dim + c]; }
    C operator()(std::size_t r, std::size_t c) const { return m[r * dim + c]; }
};

inline Dense identity(std::size_t dim) {
    Dense out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        out(i, i) = 1.0;
    }
    return out;
}

inline Dense kron(const Dense &a, const Dense &b) {
    Dense out(a.dim * b.dim);
    for (std::size_t i = 0; i < a.dim; ++i) {
        for (std::size_t j = 0; j < a.dim; ++j) {
            for (std::size_t k = 0; k < b.dim; ++k) {
                for (std::size_t l = 0; l < b.dim; ++l) {
                    out(i * b.dim + k, j * b.dim + l) = a(i, j) * b(k, l);
                }
            }
        }
    }
    return out;
}

inline Dense matmul(const Dense &a, const Dense &b) {
    Dense out(a.dim);
    for (std::size_t i = 0; i < a.dim; ++i) {
        for (std::size_t k = 0; k < a.dim; ++k) {
            const C aik = a(i, k);
            for (std::size_t j = 0; j < a.dim; ++j) {
                out(i, j) += aik * b(k, j);
            }
        }
    }
    return out;
}

inline std::vector<C> apply(const Dense &a, const std::vector<C> &v) {
    std::vector<C> out(a.dim, C{0.0, 0.0});
    for (std::size_t i = 0; i < a.dim; ++i) {
        for (std::size_t j = 0; j < a.dim; ++j) {
            out[i] += a(i, j) * v[j];
        }
    }
    return out;
}

inline Dense two_by_two(C a, C b, C c, C d) {
    Dense out(2);
    out(0, 0) = a;
    out(0, 1) = b;
    out(1, 0) = c;
    out(1, 1) = d;
    return out;
}

// exp(-i theta A / 2), written out by hand.
inline Dense rx(double t) {
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    return two_by_two(c, C{0, -s}, C{0, -s}, c);
}
inline Dense ry(double t) {
    const double c = std::cos(t / 2), s = std::sin(t / 2);
    return two_by_two(c, -s, s, c);
}
inline Dense rz(double t) {
    return two_by_two(std::polar(1.0, -t / 2), 0.0, 0.0, std::polar(1.0, t / 2));
}
inline Dense pauli_z() { return two_by_two(1.0, 0.0, 0.0, -1.0); }
inline Dense pauli_x() { return two_by_two(0.0, 1.0, 1.0, 0.0); }

/// I (x) ... (x) u (x) ... (x) I with qubit n-1 as the leftmost factor, so
/// qubit 0 is the least-significant bit of the basis index.
inline Dense embed(std::size_t n, std::size_t qubit, const Dense &u) {
    Dense out = identity(1);
    for (std::size_t k = n; k-- > 0;) {
        out = kron(out, k == qubit ? u : identity(2));
    }
    return out;
}

/// CNOT as a two-term Kronecker sum: |0><0|_c (x) I + |1><1|_c (x) X_t.
inline Dense cnot(std::size_t n, std::size_t control, std::size_t target) {
    const Dense p0 = two_by_two(1.0, 0.0, 0.0, 0.0);
    const Dense p1 = two_by_two(0.0, 0.0, 0.0, 1.0);
    Dense a = identity(1);
    Dense b = identity(1);
    for (std::size_t k = n; k-- > 0;) {
        a = kron(a, k == control ? p0 : identity(2));
        b = kron(b, k == control ? p1 : (k == target ? pauli_x() : identity(2)));
    }
    for (std::size_t i = 0; i < a.m.size(); ++i) {
        a.m[i] += b.m[i];
    }
    return a;
}

inline double expectation(const Dense &observable, const std::vector<C> &psi) {
    const auto o = apply(observable, psi);
    C acc{0.0, 0.0};
    for (std::size_t i = 0; i < psi.size(); ++i) {
        acc += std::conj(psi[i]) * o[i];
    }
    return acc.real();
}

inline std::vector<C> basis_state(std::size_t n, std::size_t index = 0) {
    std::vector<C> v(std::size_t{1} << n, C{0.0, 0.0});
    v[index] = 1.0;
    return v;
}

/// Independent straight-line simulator used to cross-check the 16-qubit
/// bottleneck circuit. Deliberately simple index loops.
struct Reference {
    std::size_t n;
    std::vector<C> a;

    explicit Reference(std::size_t qubits) : n{qubits}, a(std::size_t{1} << qubits) { a[0] = 1.0; }

    void gate(std::size_t q, const Dense &u) {
        const std::size_t bit = std::size_t{1} << q;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if ((i & bit) == 0) {
                const C x0 = a[i];
                const C x1 = a[i | bit];
                a[i] = u(0, 0) * x0 + u(0, 1) * x1;
                a[i | bit] = u(1, 0) * x0 + u(1, 1) * x1;
            }
        }
    }
    void cnot(std::size_t c, std::size_t t) {
        const std::size_t cb = std::size_t{1} << c;
        const std::size_t tb = std::size_t{1} << t;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if ((i & cb) && !(i & tb)) {
                std::swap(a[i], a[i | tb]);
            }
        }
    }
    double z(std::size_t q) const {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            s += ((i >> q) & 1 ? -1.0 : 1.0) * std::norm(a[i]);
        }
        return s;
    }
    double x(std::size_t q) const {
        const std::size_t bit = std::size_t{1} << q;
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!(i & bit)) {
                s += 2.0 * (std::conj(a[i]) * a[i | bit]).real();
            }
        }
        return s;
    }
    void filter(std::size_t qa, std::size_t qb, double t1, double t2, double p1, double p2) {
        gate(qa, ry(t1));
        gate(qb, ry(t2));
        cnot(qa, qb);
        gate(qa, ry(p1));
        gate(qb, ry(p2));
    }
};

/// features [3][4][4] channel-major, angles [tR1, tR2, pR1, pR2, tC1, tC2, pC1, pC2].
inline std::vector<double> quanv_measurements(const std::vector<double> &features,
                                              const std::vector<double> &angles) {
    Reference s(16);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            const std::size_t q = 4 * r + c;
            s.gate(q, rx(std::numbers::pi * features[0 * 16 + q]));
            s.gate(q, ry(std::numbers::pi * features[1 * 16 + q]));
            s.gate(q, rz(std::numbers::pi * features[2 * 16 + q]));
        }
    }
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            s.filter(4 * r + c, 4 * r + c + 1, angles[0], angles[1], angles[2], angles[3]);
        }
    }
    for (std::size_t c = 0; c < 4; ++c) {
        for (std::size_t r = 0; r < 3; ++r) {
            s.filter(4 * r + c, 4 * (r + 1) + c, angles[4], angles[5], angles[6], angles[7]);
        }
    }
    std::vector<double> out;
    for (std::size_t q = 0; q < 16; ++q) {
        out.push_back(s.z(q));
    }
    for (std::size_t q = 0; q < 16; ++q) {
        out.push_back(s.x(q));
    }
    return out;
}

/// Per-class IoU by explicit set counting; NaN when a class is absent from both.
inline std::vector<double> brute_iou(const std::vector<std::uint8_t> &pred,
                                     const std::vector<std::uint8_t> &truth, std::size_t k) {
    std::vector<double> iou(k, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < k; ++c) {
        std::uint64_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const bool p = pred[i] == c, t = truth[i] == c;
            inter += (p && t) ? 1 : 0;
            uni += (p || t) ? 1 : 0;
        }
        if (uni > 0) {
            iou[c] = static_cast<double>(inter) / static_cast<double>(uni);
        }
    }
    return iou;
}

inline double brute_oa(const std::vector<std::uint8_t> &pred,
                       const std::vector<std::uint8_t> &truth) {
    std::uint64_t hit = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        hit += pred[i] == truth[i] ? 1 : 0;
    }
    return static_cast<double>(hit) / static_cast<double>(pred.size());
}

/// Direct sliding-window convolution over NCHW data.
inline std::vector<double> conv2d(const std::vector<double> &x, std::size_t n, std::size_t cin,
                                  std::size_t h, std::size_t w, const std::vector<double> &k,
                                  std::size_t cout, std::size_t kh, std::size_t kw,
                                  const std::vector<double> &bias, std::size_t stride,
                                  std::size_t pad, std::size_t groups) {
    const std::size_t oh = (h + 2 * pad - kh) / stride + 1;
    const std::size_t ow = (w + 2 * pad - kw) / stride + 1;
    const std::size_t cpg = cin / groups;
    const std::size_t opg = cout / groups;
    std::vector<double> out(n * cout * oh * ow, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < cout; ++o) {
            const std::size_t g = o / opg;
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t xx = 0; xx < ow; ++xx) {
                    double acc = bias.empty() ? 0.0 : bias[o];
                    for (std::size_t ci = 0; ci < cpg; ++ci) {
                        for (std::size_t i = 0; i < kh; ++i) {
                            for (std::size_t j = 0; j < kw; ++j) {
                                const long iy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                                const long ix = static_cast<long>(xx * stride + j) - static_cast<long>(pad);
                                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) ||
                                    ix >= static_cast<long>(w)) {
                                    continue;
                                }
                                const std::size_t c = g * cpg + ci;
                                acc += x[((b * cin + c) * h + static_cast<std::size_t>(iy)) * w +
                                         static_cast<std::size_t>(ix)] *
                                       k[((o * cpg + ci) * kh + i) * kw + j];
                            }
                        }
                    }
                    out[((b * cout + o) * oh + y) * ow + xx] = acc;
                }
            }
        }
    }
    return out;
}

/// Central difference of a scalar function of one coordinate.
inline double central_difference(const std::function<double(double)> &f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

} // namespace oracle
