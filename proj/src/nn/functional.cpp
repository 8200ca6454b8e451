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

#include "hqunet/nn/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "../gemm.hpp"

namespace hqunet::nn {

namespace {

void require_4d(const char *op, const Tensor &x) {
    if (x.ndim() != 4) {
        throw std::invalid_argument(std::string(op) + ": expected a 4-D NCHW tensor, got " +
                                    shape_str(x.shape()));
    }
}

struct ConvGeometry {
    std::size_t n, cin, h, w;
    std::size_t cout, cin_g, kh, kw;
    std::size_t oh, ow;
    std::size_t stride, pad, groups;
    [[nodiscard]] std::size_t cout_g() const { return cout / groups; }
    [[nodiscard]] std::size_t col_rows() const { return cin_g * kh * kw; }
    [[nodiscard]] std::size_t out_plane() const { return oh * ow; }
    [[nodiscard]] bool is_pointwise() const {
        return kh == 1 && kw == 1 && stride == 1 && pad == 0;
    }
};

// col[(c, ky, kx), (oy, ox)] for the cin_g channels starting at ``x``.
void im2col(const ConvGeometry &g, const double *x, double *col) {
    for (std::size_t c = 0; c < g.cin_g; ++c) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                double *row = col + ((c * g.kh + ky) * g.kw + kx) * g.out_plane();
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                        static_cast<std::ptrdiff_t>(g.pad);
                        const bool inside = iy >= 0 && ix >= 0 &&
                                            iy < static_cast<std::ptrdiff_t>(g.h) &&
                                            ix < static_cast<std::ptrdiff_t>(g.w);
                        row[oy * g.ow + ox] =
                            inside ? x[(c * g.h + static_cast<std::size_t>(iy)) * g.w +
                                       static_cast<std::size_t>(ix)]
                                   : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const ConvGeometry &g, const double *col, double *dx) {
    for (std::size_t c = 0; c < g.cin_g; ++c) {
        for (std::size_t ky = 0; ky < g.kh; ++ky) {
            for (std::size_t kx = 0; kx < g.kw; ++kx) {
                const double *row = col + ((c * g.kh + ky) * g.kw + kx) * g.out_plane();
                for (std::size_t oy = 0; oy < g.oh; ++oy) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                    static_cast<std::ptrdiff_t>(g.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
                        continue;
                    }
                    for (std::size_t ox = 0; ox < g.ow; ++ox) {
                        const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                        static_cast<std::ptrdiff_t>(g.pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) {
                            continue;
                        }
                        dx[(c * g.h + static_cast<std::size_t>(iy)) * g.w +
                           static_cast<std::size_t>(ix)] += row[oy * g.ow + ox];
                    }
                }
            }
        }
    }
}

// Depthwise 3x3-style kernels are common enough to skip im2col entirely.
void depthwise_forward(const ConvGeometry &g, const double *x, const double *k, double *y) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
            double acc = 0.0;
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                static_cast<std::ptrdiff_t>(g.pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
                    continue;
                }
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                    static_cast<std::ptrdiff_t>(g.pad);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) {
                        continue;
                    }
                    acc += k[ky * g.kw + kx] *
                           x[static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)];
                }
            }
            y[oy * g.ow + ox] = acc;
        }
    }
}

void depthwise_backward(const ConvGeometry &g, const double *x, const double *k,
                        const double *gy, double *dx, double *dk) {
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const double go = gy[oy * g.ow + ox];
            for (std::size_t ky = 0; ky < g.kh; ++ky) {
                const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                static_cast<std::ptrdiff_t>(g.pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) {
                    continue;
                }
                for (std::size_t kx = 0; kx < g.kw; ++kx) {
                    const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                    static_cast<std::ptrdiff_t>(g.pad);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) {
                        continue;
                    }
                    const std::size_t xi =
                        static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix);
                    if (dx != nullptr) {
                        dx[xi] += go * k[ky * g.kw + kx];
                    }
                    if (dk != nullptr) {
                        dk[ky * g.kw + kx] += go * x[xi];
                    }
                }
            }
        }
    }
}

} // namespace

Tensor conv2d(const Tensor &x, const Tensor &weight, const Tensor &bias,
              const Conv2dOptions &opts) {
    require_4d("conv2d", x);
    if (weight.ndim() != 4) {
        throw std::invalid_argument("conv2d: kernel must be [Cout, Cin/groups, kH, kW], got " +
                                    shape_str(weight.shape()));
    }
    if (opts.groups == 0 || opts.stride == 0) {
        throw std::invalid_argument("conv2d: groups and stride must be positive");
    }
    ConvGeometry g{};
    g.n = x.dim(0);
    g.cin = x.dim(1);
    g.h = x.dim(2);
    g.w = x.dim(3);
    g.cout = weight.dim(0);
    g.cin_g = weight.dim(1);
    g.kh = weight.dim(2);
    g.kw = weight.dim(3);
    g.stride = opts.stride;
    g.pad = opts.padding;
    g.groups = opts.groups;
    if (g.cin % g.groups != 0 || g.cout % g.groups != 0 || g.cin / g.groups != g.cin_g) {
        throw std::invalid_argument("conv2d: input " + shape_str(x.shape()) + " and kernel " +
                                    shape_str(weight.shape()) + " incompatible with groups=" +
                                    std::to_string(g.groups));
    }
    if (g.h + 2 * g.pad < g.kh || g.w + 2 * g.pad < g.kw) {
        throw std::invalid_argument("conv2d: padded input " + shape_str(x.shape()) +
                                    " smaller than kernel " + shape_str(weight.shape()));
    }
    if (bias.defined() && bias.shape() != Shape{g.cout}) {
        throw std::invalid_argument("conv2d: bias must be [" + std::to_string(g.cout) +
                                    "], got " + shape_str(bias.shape()));
    }
    g.oh = (g.h + 2 * g.pad - g.kh) / g.stride + 1;
    g.ow = (g.w + 2 * g.pad - g.kw) / g.stride + 1;

    const std::size_t plane_in = g.h * g.w;
    const std::size_t plane_out = g.out_plane();
    const std::size_t cout_g = g.cout_g();
    const std::size_t krows = g.col_rows();
    const bool depthwise = g.cin_g == 1 && cout_g == 1;
    std::vector<double> out(g.n * g.cout * plane_out, 0.0);
    std::vector<double> col(depthwise || g.is_pointwise() ? 0 : krows * plane_out);
    const double *xd = x.data().data();
    const double *wd = weight.data().data();

    for (std::size_t b = 0; b < g.n; ++b) {
        for (std::size_t grp = 0; grp < g.groups; ++grp) {
            const double *xg = xd + (b * g.cin + grp * g.cin_g) * plane_in;
            double *yg = out.data() + (b * g.cout + grp * cout_g) * plane_out;
            const double *wg = wd + grp * cout_g * krows;
            if (depthwise) {
                depthwise_forward(g, xg, wg, yg);
            } else if (g.is_pointwise()) {
                detail::gemm(false, false, cout_g, plane_out, krows, wg, xg, yg, false);
            } else {
                im2col(g, xg, col.data());
                detail::gemm(false, false, cout_g, plane_out, krows, wg, col.data(), yg, false);
            }
        }
        if (bias.defined()) {
            for (std::size_t c = 0; c < g.cout; ++c) {
                double *yc = out.data() + (b * g.cout + c) * plane_out;
                const double bv = bias.data()[c];
                for (std::size_t i = 0; i < plane_out; ++i) {
                    yc[i] += bv;
                }
            }
        }
    }

    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) {
        inputs.push_back(bias);
    }
    return Tensor::from_op(
        {g.n, g.cout, g.oh, g.ow}, std::move(out), OpKind::Conv2d, std::move(inputs),
        [x, weight, g, depthwise](std::span<const double> gy, std::span<const double>,
                                  std::span<const std::span<double>> gin) {
            const std::size_t plane_in = g.h * g.w;
            const std::size_t plane_out = g.out_plane();
            const std::size_t cout_g = g.cout_g();
            const std::size_t krows = g.col_rows();
            const double *xd = x.data().data();
            const double *wd = weight.data().data();
            double *dx = gin[0].empty() ? nullptr : gin[0].data();
            double *dw = gin[1].empty() ? nullptr : gin[1].data();
            std::vector<double> col;
            std::vector<double> dcol;
            if (!depthwise && !g.is_pointwise()) {
                col.resize(krows * plane_out);
                dcol.resize(krows * plane_out);
            }
            for (std::size_t b = 0; b < g.n; ++b) {
                for (std::size_t grp = 0; grp < g.groups; ++grp) {
                    const double *xg = xd + (b * g.cin + grp * g.cin_g) * plane_in;
                    const double *gyg = gy.data() + (b * g.cout + grp * cout_g) * plane_out;
                    const double *wg = wd + grp * cout_g * krows;
                    double *dxg = dx ? dx + (b * g.cin + grp * g.cin_g) * plane_in : nullptr;
                    double *dwg = dw ? dw + grp * cout_g * krows : nullptr;
                    if (depthwise) {
                        depthwise_backward(g, xg, wg, gyg, dxg, dwg);
                    } else if (g.is_pointwise()) {
                        if (dwg) {
                            detail::gemm(false, true, cout_g, krows, plane_out, gyg, xg, dwg,
                                         true);
                        }
                        if (dxg) {
                            detail::gemm(true, false, krows, plane_out, cout_g, wg, gyg, dxg,
                                         true);
                        }
                    } else {
                        if (dwg) {
                            im2col(g, xg, col.data());
                            detail::gemm(false, true, cout_g, krows, plane_out, gyg, col.data(),
                                         dwg, true);
                        }
                        if (dxg) {
                            detail::gemm(true, false, krows, plane_out, cout_g, wg, gyg,
                                         dcol.data(), false);
                            col2im_add(g, dcol.data(), dxg);
                        }
                    }
                }
            }
            if (gin.size() > 2 && !gin[2].empty()) {
                for (std::size_t b = 0; b < g.n; ++b) {
                    for (std::size_t c = 0; c < g.cout; ++c) {
                        const double *gc = gy.data() + (b * g.cout + c) * plane_out;
                        double acc = 0.0;
                        for (std::size_t i = 0; i < plane_out; ++i) {
                            acc += gc[i];
                        }
                        gin[2][c] += acc;
                    }
                }
            }
        });
}

Tensor max_pool_2x2(const Tensor &x) {
    require_4d("max_pool_2x2", x);
    const std::size_t n = x.dim(0);
    const std::size_t c = x.dim(1);
    const std::size_t h = x.dim(2);
    const std::size_t w = x.dim(3);
    if (h % 2 != 0 || w % 2 != 0) {
        throw std::invalid_argument("max_pool_2x2: spatial extents must be even, got " +
                                    shape_str(x.shape()));
    }
    const std::size_t oh = h / 2;
    const std::size_t ow = w / 2;
    std::vector<double> out(n * c * oh * ow);
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    auto xd = x.data();
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t in_base = plane * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const std::size_t first = in_base + (2 * oy) * w + 2 * ox;
                const std::size_t window[4] = {first, first + 1, first + w, first + w + 1};
                std::size_t best = window[0];
                for (std::size_t k = 1; k < 4; ++k) {
                    if (xd[window[k]] > xd[best]) {
                        best = window[k];
                    }
                }
                const std::size_t o = (plane * oh + oy) * ow + ox;
                out[o] = xd[best];
                (*argmax)[o] = best;
            }
        }
    }
    return Tensor::from_op({n, c, oh, ow}, std::move(out), OpKind::MaxPool2x2, {x},
                           [argmax](std::span<const double> g, std::span<const double>,
                                    std::span<const std::span<double>> gin) {
                               for (std::size_t o = 0; o < g.size(); ++o) {
                                   gin[0][(*argmax)[o]] += g[o];
                               }
                           });
}

Tensor conv_transpose_2x2(const Tensor &x, const Tensor &weight, const Tensor &bias) {
    require_4d("conv_transpose_2x2", x);
    const std::size_t n = x.dim(0);
    const std::size_t cin = x.dim(1);
    const std::size_t h = x.dim(2);
    const std::size_t w = x.dim(3);
    if (weight.ndim() != 4 || weight.dim(0) != cin || weight.dim(2) != 2 || weight.dim(3) != 2) {
        throw std::invalid_argument("conv_transpose_2x2: kernel must be [" + std::to_string(cin) +
                                    ", Cout, 2, 2], got " + shape_str(weight.shape()));
    }
    const std::size_t cout = weight.dim(1);
    if (bias.defined() && bias.shape() != Shape{cout}) {
        throw std::invalid_argument("conv_transpose_2x2: bias must be [" +
                                    std::to_string(cout) + "], got " + shape_str(bias.shape()));
    }
    const std::size_t plane = h * w;
    const std::size_t taps = cout * 4;
    const std::size_t oh = 2 * h;
    const std::size_t ow = 2 * w;
    std::vector<double> out(n * cout * oh * ow);
    std::vector<double> cols(taps * plane);
    for (std::size_t b = 0; b < n; ++b) {
        // cols[(co, a, bb), (i, j)] = sum_ci W[ci, (co, a, bb)] * x[ci, (i, j)]
        detail::gemm(true, false, taps, plane, cin, weight.data().data(),
                     x.data().data() + b * cin * plane, cols.data(), false);
        for (std::size_t co = 0; co < cout; ++co) {
            const double bv = bias.defined() ? bias.data()[co] : 0.0;
            double *yc = out.data() + (b * cout + co) * oh * ow;
            for (std::size_t tap = 0; tap < 4; ++tap) {
                const std::size_t dy = tap / 2;
                const std::size_t dx = tap % 2;
                const double *src = cols.data() + (co * 4 + tap) * plane;
                for (std::size_t i = 0; i < h; ++i) {
                    for (std::size_t j = 0; j < w; ++j) {
                        yc[(2 * i + dy) * ow + 2 * j + dx] = src[i * w + j] + bv;
                    }
                }
            }
        }
    }
    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) {
        inputs.push_back(bias);
    }
    return Tensor::from_op(
        {n, cout, oh, ow}, std::move(out), OpKind::ConvTranspose2x2, std::move(inputs),
        [x, weight, n, cin, cout, h, w](std::span<const double> g, std::span<const double>,
                                        std::span<const std::span<double>> gin) {
            const std::size_t plane = h * w;
            const std::size_t taps = cout * 4;
            const std::size_t ow = 2 * w;
            std::vector<double> gcols(taps * plane);
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t co = 0; co < cout; ++co) {
                    const double *gc = g.data() + (b * cout + co) * 4 * plane;
                    double bias_acc = 0.0;
                    for (std::size_t tap = 0; tap < 4; ++tap) {
                        const std::size_t dy = tap / 2;
                        const std::size_t dx = tap % 2;
                        double *dst = gcols.data() + (co * 4 + tap) * plane;
                        for (std::size_t i = 0; i < h; ++i) {
                            for (std::size_t j = 0; j < w; ++j) {
                                dst[i * w + j] = gc[(2 * i + dy) * ow + 2 * j + dx];
                                bias_acc += dst[i * w + j];
                            }
                        }
                    }
                    if (gin.size() > 2 && !gin[2].empty()) {
                        gin[2][co] += bias_acc;
                    }
                }
                const double *xb = x.data().data() + b * cin * plane;
                if (!gin[0].empty()) {
                    detail::gemm(false, false, cin, plane, taps, weight.data().data(),
                                 gcols.data(), gin[0].data() + b * cin * plane, true);
                }
                if (!gin[1].empty()) {
                    detail::gemm(false, true, cin, taps, plane, xb, gcols.data(), gin[1].data(),
                                 true);
                }
            }
        });
}

Tensor adaptive_avg_pool(const Tensor &x, std::size_t out_h, std::size_t out_w) {
    require_4d("adaptive_avg_pool", x);
    const std::size_t n = x.dim(0);
    const std::size_t c = x.dim(1);
    const std::size_t h = x.dim(2);
    const std::size_t w = x.dim(3);
    if (out_h == 0 || out_w == 0 || out_h > h || out_w > w) {
        throw std::invalid_argument("adaptive_avg_pool: cannot pool " + shape_str(x.shape()) +
                                    " to " + std::to_string(out_h) + "x" +
                                    std::to_string(out_w) + " (output must not exceed input)");
    }
    struct Range {
        std::size_t begin, end;
    };
    auto ranges = [](std::size_t in, std::size_t out) {
        std::vector<Range> r(out);
        for (std::size_t i = 0; i < out; ++i) {
            r[i] = {(i * in) / out, ((i + 1) * in + out - 1) / out};
        }
        return r;
    };
    const auto rows = ranges(h, out_h);
    const auto cols = ranges(w, out_w);
    std::vector<double> out(n * c * out_h * out_w);
    auto xd = x.data();
    for (std::size_t p = 0; p < n * c; ++p) {
        for (std::size_t i = 0; i < out_h; ++i) {
            for (std::size_t j = 0; j < out_w; ++j) {
                double acc = 0.0;
                for (std::size_t y = rows[i].begin; y < rows[i].end; ++y) {
                    for (std::size_t xx = cols[j].begin; xx < cols[j].end; ++xx) {
                        acc += xd[(p * h + y) * w + xx];
                    }
                }
                const double count = static_cast<double>((rows[i].end - rows[i].begin) *
                                                         (cols[j].end - cols[j].begin));
                out[(p * out_h + i) * out_w + j] = acc / count;
            }
        }
    }
    return Tensor::from_op(
        {n, c, out_h, out_w}, std::move(out), OpKind::AdaptiveAvgPool, {x},
        [rows, cols, n, c, h, w, out_h, out_w](std::span<const double> g,
                                               std::span<const double>,
                                               std::span<const std::span<double>> gin) {
            for (std::size_t p = 0; p < n * c; ++p) {
                for (std::size_t i = 0; i < out_h; ++i) {
                    for (std::size_t j = 0; j < out_w; ++j) {
                        const double count = static_cast<double>(
                            (rows[i].end - rows[i].begin) * (cols[j].end - cols[j].begin));
                        const double share = g[(p * out_h + i) * out_w + j] / count;
                        for (std::size_t y = rows[i].begin; y < rows[i].end; ++y) {
                            for (std::size_t xx = cols[j].begin; xx < cols[j].end; ++xx) {
                                gin[0][(p * h + y) * w + xx] += share;
                            }
                        }
                    }
                }
            }
        });
}

Tensor batch_norm(const Tensor &x, const Tensor &gamma, const Tensor &beta, Tensor &running_mean,
                  Tensor &running_var, const BatchNormOptions &opts) {
    require_4d("batch_norm", x);
    const std::size_t n = x.dim(0);
    const std::size_t c = x.dim(1);
    const std::size_t plane = x.dim(2) * x.dim(3);
    const Shape per_channel{c};
    if (gamma.shape() != per_channel || beta.shape() != per_channel ||
        running_mean.shape() != per_channel || running_var.shape() != per_channel) {
        throw std::invalid_argument("batch_norm: parameters must be [" + std::to_string(c) +
                                    "] for input " + shape_str(x.shape()));
    }
    const std::size_t count = n * plane;
    if (opts.training && count < 2) {
        throw std::invalid_argument("batch_norm: training mode needs more than one value per "
                                    "channel, got " + shape_str(x.shape()));
    }
    auto xd = x.data();
    std::vector<double> mu(c);
    std::vector<double> inv_std(c);
    if (opts.training) {
        auto rm = running_mean.data_mut();
        auto rv = running_var.data_mut();
        for (std::size_t ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const double *p = xd.data() + (b * c + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    s += p[i];
                }
            }
            const double m = s / static_cast<double>(count);
            double ss = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                const double *p = xd.data() + (b * c + ch) * plane;
                for (std::size_t i = 0; i < plane; ++i) {
                    ss += (p[i] - m) * (p[i] - m);
                }
            }
            const double var = ss / static_cast<double>(count);
            mu[ch] = m;
            inv_std[ch] = 1.0 / std::sqrt(var + opts.eps);
            const double unbiased = ss / static_cast<double>(count - 1);
            rm[ch] = (1.0 - opts.momentum) * rm[ch] + opts.momentum * m;
            rv[ch] = (1.0 - opts.momentum) * rv[ch] + opts.momentum * unbiased;
        }
    } else {
        for (std::size_t ch = 0; ch < c; ++ch) {
            mu[ch] = running_mean.data()[ch];
            inv_std[ch] = 1.0 / std::sqrt(running_var.data()[ch] + opts.eps);
        }
    }

    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    std::vector<double> out(x.numel());
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const std::size_t base = (b * c + ch) * plane;
            const double gm = gamma.data()[ch];
            const double bt = beta.data()[ch];
            for (std::size_t i = 0; i < plane; ++i) {
                const double v = (xd[base + i] - mu[ch]) * inv_std[ch];
                (*xhat)[base + i] = v;
                out[base + i] = gm * v + bt;
            }
        }
    }

    const bool training = opts.training;
    return Tensor::from_op(
        x.shape(), std::move(out), OpKind::BatchNorm, {x, gamma, beta},
        [xhat, inv_std, gamma, n, c, plane, count,
         training](std::span<const double> g, std::span<const double>,
                   std::span<const std::span<double>> gin) {
            for (std::size_t ch = 0; ch < c; ++ch) {
                double sum_g = 0.0;
                double sum_gx = 0.0;
                for (std::size_t b = 0; b < n; ++b) {
                    const std::size_t base = (b * c + ch) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        sum_g += g[base + i];
                        sum_gx += g[base + i] * (*xhat)[base + i];
                    }
                }
                if (!gin[1].empty()) {
                    gin[1][ch] += sum_gx;
                }
                if (!gin[2].empty()) {
                    gin[2][ch] += sum_g;
                }
                if (gin[0].empty()) {
                    continue;
                }
                const double gm = gamma.data()[ch];
                const double k = gm * inv_std[ch];
                const double inv_count = 1.0 / static_cast<double>(count);
                for (std::size_t b = 0; b < n; ++b) {
                    const std::size_t base = (b * c + ch) * plane;
                    for (std::size_t i = 0; i < plane; ++i) {
                        if (training) {
                            gin[0][base + i] +=
                                k * (g[base + i] - inv_count * sum_g -
                                     (*xhat)[base + i] * inv_count * sum_gx);
                        } else {
                            gin[0][base + i] += k * g[base + i];
                        }
                    }
                }
            }
        });
}

Tensor linear(const Tensor &x, const Tensor &weight, const Tensor &bias) {
    if (x.ndim() != 2 || weight.ndim() != 2 || x.dim(1) != weight.dim(1)) {
        throw std::invalid_argument("linear: input " + shape_str(x.shape()) +
                                    " incompatible with weight " + shape_str(weight.shape()));
    }
    const std::size_t n = x.dim(0);
    const std::size_t in = x.dim(1);
    const std::size_t out_features = weight.dim(0);
    if (bias.defined() && bias.shape() != Shape{out_features}) {
        throw std::invalid_argument("linear: bias must be [" + std::to_string(out_features) +
                                    "], got " + shape_str(bias.shape()));
    }
    std::vector<double> out(n * out_features);
    detail::gemm(false, true, n, out_features, in, x.data().data(), weight.data().data(),
                 out.data(), false);
    if (bias.defined()) {
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t o = 0; o < out_features; ++o) {
                out[b * out_features + o] += bias.data()[o];
            }
        }
    }
    std::vector<Tensor> inputs{x, weight};
    if (bias.defined()) {
        inputs.push_back(bias);
    }
    return Tensor::from_op(
        {n, out_features}, std::move(out), OpKind::Linear, std::move(inputs),
        [x, weight, n, in, out_features](std::span<const double> g, std::span<const double>,
                                         std::span<const std::span<double>> gin) {
            if (!gin[0].empty()) {
                detail::gemm(false, false, n, in, out_features, g.data(), weight.data().data(),
                             gin[0].data(), true);
            }
            if (!gin[1].empty()) {
                detail::gemm(true, false, out_features, in, n, g.data(), x.data().data(),
                             gin[1].data(), true);
            }
            if (gin.size() > 2 && !gin[2].empty()) {
                for (std::size_t b = 0; b < n; ++b) {
                    for (std::size_t o = 0; o < out_features; ++o) {
                        gin[2][o] += g[b * out_features + o];
                    }
                }
            }
        });
}

Tensor concat_channels(const std::vector<Tensor> &parts) {
    if (parts.empty()) {
        throw std::invalid_argument("concat_channels: nothing to concatenate");
    }
    for (const auto &p : parts) {
        require_4d("concat_channels", p);
        if (p.dim(0) != parts[0].dim(0) || p.dim(2) != parts[0].dim(2) ||
            p.dim(3) != parts[0].dim(3)) {
            throw std::invalid_argument("concat_channels: extents differ: " +
                                        shape_str(parts[0].shape()) + " vs " +
                                        shape_str(p.shape()));
        }
    }
    const std::size_t n = parts[0].dim(0);
    const std::size_t plane = parts[0].dim(2) * parts[0].dim(3);
    std::vector<std::size_t> offsets;
    std::size_t total_c = 0;
    for (const auto &p : parts) {
        offsets.push_back(total_c);
        total_c += p.dim(1);
    }
    std::vector<double> out(n * total_c * plane);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t k = 0; k < parts.size(); ++k) {
            const std::size_t ck = parts[k].dim(1);
            auto src = parts[k].data().subspan(b * ck * plane, ck * plane);
            std::copy(src.begin(), src.end(),
                      out.begin() + static_cast<std::ptrdiff_t>((b * total_c + offsets[k]) * plane));
        }
    }
    std::vector<std::size_t> channels;
    for (const auto &p : parts) {
        channels.push_back(p.dim(1));
    }
    return Tensor::from_op(
        {n, total_c, parts[0].dim(2), parts[0].dim(3)}, std::move(out), OpKind::ConcatChannels,
        parts,
        [n, plane, total_c, offsets, channels](std::span<const double> g,
                                               std::span<const double>,
                                               std::span<const std::span<double>> gin) {
            for (std::size_t k = 0; k < channels.size(); ++k) {
                if (gin[k].empty()) {
                    continue;
                }
                const std::size_t ck = channels[k];
                for (std::size_t b = 0; b < n; ++b) {
                    const double *src = g.data() + (b * total_c + offsets[k]) * plane;
                    double *dst = gin[k].data() + b * ck * plane;
                    for (std::size_t i = 0; i < ck * plane; ++i) {
                        dst[i] += src[i];
                    }
                }
            }
        });
}

Tensor softmax_cross_entropy(const Tensor &logits, std::span<const std::uint8_t> targets) {
    require_4d("softmax_cross_entropy", logits);
    const std::size_t n = logits.dim(0);
    const std::size_t k = logits.dim(1);
    const std::size_t plane = logits.dim(2) * logits.dim(3);
    if (targets.size() != n * plane) {
        throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(targets.size()) +
                                    " targets for logits " + shape_str(logits.shape()));
    }
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] >= k) {
            throw std::invalid_argument("softmax_cross_entropy: target class " +
                                        std::to_string(targets[i]) + " at index " +
                                        std::to_string(i) + " outside [0, " + std::to_string(k) +
                                        ")");
        }
    }
    auto ld = logits.data();
    auto probs = std::make_shared<std::vector<double>>(logits.numel());
    double total = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t i = 0; i < plane; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                mx = std::max(mx, ld[(b * k + c) * plane + i]);
            }
            double z = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double e = std::exp(ld[(b * k + c) * plane + i] - mx);
                (*probs)[(b * k + c) * plane + i] = e;
                z += e;
            }
            for (std::size_t c = 0; c < k; ++c) {
                (*probs)[(b * k + c) * plane + i] /= z;
            }
            const std::size_t t = targets[b * plane + i];
            total -= ld[(b * k + t) * plane + i] - mx - std::log(z);
        }
    }
    const double inv = 1.0 / static_cast<double>(n * plane);
    std::vector<std::uint8_t> labels(targets.begin(), targets.end());
    return Tensor::from_op(
        {}, {total * inv}, OpKind::SoftmaxCrossEntropy, {logits},
        [probs, labels = std::move(labels), n, k, plane,
         inv](std::span<const double> g, std::span<const double>,
              std::span<const std::span<double>> gin) {
            const double scale = g[0] * inv;
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t c = 0; c < k; ++c) {
                    for (std::size_t i = 0; i < plane; ++i) {
                        const std::size_t idx = (b * k + c) * plane + i;
                        const double onehot = labels[b * plane + i] == c ? 1.0 : 0.0;
                        gin[0][idx] += scale * ((*probs)[idx] - onehot);
                    }
                }
            }
        });
}

} // namespace hqunet::nn
