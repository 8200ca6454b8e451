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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "hqunet/gradcheck.hpp"
#include "hqunet/nn/functional.hpp"
#include "hqunet/nn/modules.hpp"
#include "hqunet/ops.hpp"
#include "support/helpers.hpp"
#include "support/oracles.hpp"

using namespace hqunet;
using namespace hqunet::nn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const GradCheckOptions kFd{1e-5, 1e-4, 1e-7};

double inner(const Tensor &a, const Tensor &b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) {
        s += a.at(i) * b.at(i);
    }
    return s;
}

} // namespace

TEST_CASE("1x1 identity kernel passes the input through", "[nn][conv]") {
    Rng rng(2);
    const Tensor x = testing::random_tensor({2, 1, 5, 5}, rng);
    const Tensor y = conv2d(x, Tensor({1, 1, 1, 1}, {1.0}), Tensor{});
    CHECK(testing::to_vector(y) == testing::to_vector(x));
}

TEST_CASE("depthwise all-ones 3x3 on a one-hot image gives the box sum", "[nn][conv]") {
    Tensor x({1, 1, 3, 3});
    x.data_mut()[4] = 1.0; // centre pixel
    const Tensor y = conv2d(x, Tensor({1, 1, 3, 3}, 1.0), Tensor{}, {1, 1, 1});
    const auto expect = oracle::conv2d(testing::to_vector(x), 1, 1, 3, 3,
                                       std::vector<double>(9, 1.0), 1, 3, 3, {}, 1, 1, 1);
    CHECK(testing::to_vector(y) == expect);
    for (double v : y.data()) {
        CHECK(v == 1.0);
    }
    Tensor corner({1, 1, 3, 3});
    corner.data_mut()[0] = 1.0;
    const Tensor z = conv2d(corner, Tensor({1, 1, 3, 3}, 1.0), Tensor{}, {1, 1, 1});
    CHECK(testing::to_vector(z) == std::vector<double>{1, 1, 0, 1, 1, 0, 0, 0, 0});
}

TEST_CASE("conv2d matches the sliding-window oracle", "[nn][conv][property]") {
    Rng rng(5);
    struct Case {
        std::size_t cin, cout, k, stride, pad, groups, h;
    };
    for (const Case c : {Case{3, 4, 3, 1, 1, 1, 6}, Case{4, 4, 3, 1, 1, 4, 5},
                         Case{2, 6, 1, 1, 0, 1, 4}, Case{4, 6, 3, 2, 1, 2, 7},
                         Case{3, 2, 2, 2, 0, 1, 6}}) {
        const Tensor x = testing::random_tensor({2, c.cin, c.h, c.h}, rng);
        const Tensor w = testing::random_tensor({c.cout, c.cin / c.groups, c.k, c.k}, rng);
        const Tensor b = testing::random_tensor({c.cout}, rng);
        const Tensor y = conv2d(x, w, b, {c.stride, c.pad, c.groups});
        const auto expect = oracle::conv2d(testing::to_vector(x), 2, c.cin, c.h, c.h,
                                           testing::to_vector(w), c.cout, c.k, c.k,
                                           testing::to_vector(b), c.stride, c.pad, c.groups);
        REQUIRE(y.numel() == expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK_THAT(y.at(i), WithinAbs(expect[i], 1e-12));
        }
    }
}

TEST_CASE("conv2d rejects bad geometry", "[nn][conv]") {
    CHECK_THROWS(conv2d(Tensor({1, 3, 4, 4}), Tensor({2, 2, 3, 3}), Tensor{}, {1, 1, 2}));
    CHECK_THROWS(conv2d(Tensor({1, 1, 2, 2}), Tensor({1, 1, 3, 3}), Tensor{}));
}

TEST_CASE("conv2d gradients match finite differences", "[nn][conv][autodiff]") {
    Rng rng(8);
    for (std::size_t groups : {1u, 3u}) {
        Tensor x = testing::random_tensor({2, 3, 5, 5}, rng, -1, 1, true);
        Tensor w = testing::random_tensor({3, 3 / groups, 3, 3}, rng, -1, 1, true);
        Tensor b = testing::random_tensor({3}, rng, -1, 1, true);
        const Tensor probe = testing::random_tensor({2, 3, 5, 5}, rng);
        const auto r = check_gradients(
            [&] { return sum(mul(conv2d(x, w, b, {1, 1, groups}), probe)); },
            {{"x", x}, {"w", w}, {"b", b}}, kFd);
        INFO(r.worst);
        CHECK(r.passed());
    }
}

TEST_CASE("depthwise-separable conv parameter count", "[nn][conv]") {
    Rng rng(1);
    DepthwiseSeparableConv dsc(16, 32, rng);
    CHECK(dsc.parameter_count() == 16 * 9 + 16 + 16 * 32 + 32);
    CHECK(dsc.parameter_count() == 704);
    CHECK(DepthwiseSeparableConv::expected_parameters(16, 32) == 704);
}

TEST_CASE("depthwise-separable conv equals its two stages", "[nn][conv]") {
    Rng rng(3);
    DepthwiseSeparableConv dsc(3, 5, rng);
    for (auto &p : dsc.named_parameters()) {
        Tensor t = p.tensor;
        for (auto &v : t.data_mut()) {
            v = rng.uniform(-1, 1);
        }
    }
    const Tensor x = testing::random_tensor({2, 3, 4, 4}, rng);
    const Tensor y = dsc.forward(x);
    const auto stage1 = oracle::conv2d(testing::to_vector(x), 2, 3, 4, 4,
                                       testing::to_vector(dsc.depthwise->weight), 3, 3, 3,
                                       testing::to_vector(dsc.depthwise->bias), 1, 1, 3);
    const auto stage2 = oracle::conv2d(stage1, 2, 3, 4, 4, testing::to_vector(dsc.pointwise->weight),
                                       5, 1, 1, testing::to_vector(dsc.pointwise->bias), 1, 0, 1);
    REQUIRE(y.numel() == stage2.size());
    for (std::size_t i = 0; i < stage2.size(); ++i) {
        CHECK_THAT(y.at(i), WithinAbs(stage2[i], 1e-12));
    }
    // Composition of the library's own stages is exact.
    const Tensor two = dsc.pointwise->forward(dsc.depthwise->forward(x));
    CHECK(testing::to_vector(two) == testing::to_vector(y));
}

TEST_CASE("depthwise-separable identity kernels pass the input through", "[nn][conv]") {
    Rng rng(3);
    DepthwiseSeparableConv dsc(2, 2, rng);
    auto dw = dsc.depthwise->weight.data_mut();
    std::fill(dw.begin(), dw.end(), 0.0);
    dw[4] = dw[13] = 1.0;
    auto pw = dsc.pointwise->weight.data_mut();
    std::fill(pw.begin(), pw.end(), 0.0);
    pw[0] = pw[3] = 1.0;
    const Tensor x = testing::random_tensor({1, 2, 4, 4}, rng);
    CHECK(testing::to_vector(dsc.forward(x)) == testing::to_vector(x));
}

TEST_CASE("max pool forward, ties and odd extents", "[nn][pool]") {
    CHECK(max_pool_2x2(Tensor({1, 1, 2, 2}, {1, 2, 3, 4})).item() == 4.0);
    const Tensor c = max_pool_2x2(Tensor({1, 2, 4, 4}, 7.0));
    for (double v : c.data()) {
        CHECK(v == 7.0);
    }
    Tensor tie({1, 1, 2, 2}, {5, 5, 5, 5});
    tie.set_requires_grad(true);
    sum(max_pool_2x2(tie)).backward();
    CHECK(std::vector<double>(tie.grad().begin(), tie.grad().end()) ==
          std::vector<double>{1, 0, 0, 0});
    CHECK_THROWS(max_pool_2x2(Tensor({1, 1, 3, 4})));
}

TEST_CASE("max pool gradient is one-hot at each window argmax", "[nn][pool][autodiff]") {
    Rng rng(11);
    Tensor x = testing::random_tensor({2, 2, 4, 6}, rng, -1, 1, true);
    sum(max_pool_2x2(x)).backward();
    const auto r = check_gradients([&] { return sum(max_pool_2x2(x)); }, {{"x", x}}, kFd);
    CHECK(r.passed());
    double total = 0.0;
    for (double g : x.grad()) {
        CHECK((g == 0.0 || g == 1.0));
        total += g;
    }
    CHECK(total == 2 * 2 * 2 * 3);
}

TEST_CASE("transposed conv doubles extents and spreads a pixel", "[nn][tconv]") {
    const Tensor y = conv_transpose_2x2(Tensor({1, 1, 1, 1}, {2.5}), Tensor({1, 1, 2, 2}, 1.0),
                                        Tensor{});
    CHECK(y.shape() == Shape{1, 1, 2, 2});
    for (double v : y.data()) {
        CHECK(v == 2.5);
    }
    CHECK_THROWS(conv_transpose_2x2(Tensor({1, 2, 2, 2}), Tensor({3, 1, 2, 2}), Tensor{}));
}

TEST_CASE("transposed conv is the adjoint of a stride-2 conv", "[nn][tconv][property]") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor k = testing::random_tensor({3, 2, 2, 2}, rng); // [Cin=3, Cout=2]
        const Tensor y = testing::random_tensor({2, 2, 6, 6}, rng); // conv input, Cout channels
        const Tensor x = testing::random_tensor({2, 3, 3, 3}, rng); // tconv input
        // conv2d weight [out=3, in=2] reads the same kernel array.
        const Tensor conv_y = conv2d(y, k, Tensor{}, {2, 0, 1});
        const Tensor tconv_x = conv_transpose_2x2(x, k, Tensor{});
        const double lhs = inner(conv_y, x);
        const double rhs = inner(y, tconv_x);
        CHECK_THAT(lhs, WithinRel(rhs, 1e-10));
    }
}

TEST_CASE("transposed conv gradients match finite differences", "[nn][tconv][autodiff]") {
    Rng rng(14);
    Tensor x = testing::random_tensor({2, 3, 2, 3}, rng, -1, 1, true);
    Tensor w = testing::random_tensor({3, 2, 2, 2}, rng, -1, 1, true);
    Tensor b = testing::random_tensor({2}, rng, -1, 1, true);
    const Tensor probe = testing::random_tensor({2, 2, 4, 6}, rng);
    const auto r = check_gradients([&] { return sum(mul(conv_transpose_2x2(x, w, b), probe)); },
                                   {{"x", x}, {"w", w}, {"b", b}}, kFd);
    CHECK(r.passed());
}

TEST_CASE("adaptive average pool", "[nn][pool]") {
    Rng rng(15);
    const Tensor x4 = testing::random_tensor({1, 2, 4, 4}, rng);
    CHECK(testing::to_vector(adaptive_avg_pool(x4, 4, 4)) == testing::to_vector(x4));

    const Tensor x8 = testing::random_tensor({2, 3, 8, 8}, rng);
    const Tensor p = adaptive_avg_pool(x8, 4, 4);
    for (std::size_t nc = 0; nc < 6; ++nc) {
        for (std::size_t i = 0; i < 4; ++i) {
            for (std::size_t j = 0; j < 4; ++j) {
                const auto at = [&](std::size_t y, std::size_t xx) {
                    return x8.at(nc * 64 + y * 8 + xx);
                };
                const double block = (at(2 * i, 2 * j) + at(2 * i, 2 * j + 1) +
                                      at(2 * i + 1, 2 * j) + at(2 * i + 1, 2 * j + 1)) /
                                     4.0;
                CHECK_THAT(p.at(nc * 16 + i * 4 + j), WithinAbs(block, 1e-15));
            }
        }
    }
    double mean_in = 0.0, mean_out = 0.0;
    for (double v : x8.data()) {
        mean_in += v / static_cast<double>(x8.numel());
    }
    for (double v : p.data()) {
        mean_out += v / static_cast<double>(p.numel());
    }
    CHECK_THAT(mean_out, WithinAbs(mean_in, 1e-14));

    const Tensor constant = adaptive_avg_pool(Tensor({1, 1, 7, 5}, 0.25), 4, 3);
    for (double v : constant.data()) {
        CHECK_THAT(v, WithinAbs(0.25, 1e-15));
    }
    CHECK_THROWS(adaptive_avg_pool(Tensor({1, 1, 3, 8}), 4, 4));
}

TEST_CASE("adaptive average pool gradients", "[nn][pool][autodiff]") {
    Rng rng(16);
    Tensor x = testing::random_tensor({1, 2, 7, 6}, rng, -1, 1, true);
    const Tensor probe = testing::random_tensor({1, 2, 4, 4}, rng);
    const auto r =
        check_gradients([&] { return sum(mul(adaptive_avg_pool(x, 4, 4), probe)); }, {{"x", x}}, kFd);
    CHECK(r.passed());
}

TEST_CASE("batch norm training and inference", "[nn][bn]") {
    Tensor x({4, 1, 1, 1}, {-1.0, 1.0, -1.0, 1.0}); // zero mean, unit (biased) variance
    Tensor gamma({1}, 1.0), beta({1}, 0.0), rm({1}, 0.0), rv({1}, 1.0);
    const Tensor y = batch_norm(x, gamma, beta, rm, rv, {true, 0.1, 1e-5});
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK_THAT(y.at(i), WithinAbs(x.at(i), 1e-5));
    }
    CHECK_THAT(rm.at(0), WithinAbs(0.0, 1e-15));
    CHECK_THAT(rv.at(0), WithinAbs(0.9 + 0.1 * 4.0 / 3.0, 1e-15)); // unbiased batch variance
    CHECK_THROWS(batch_norm(Tensor({1, 1, 1, 1}), gamma, beta, rm, rv, {true, 0.1, 1e-5}));
    Tensor rm1({1}), rv1({1}, 1.0);
    const Tensor single = batch_norm(Tensor({1, 1, 1, 2}, {1.0, 3.0}), gamma, beta, rm1, rv1,
                                     {true, 0.1, 1e-5});
    CHECK_THAT(single.at(0), WithinAbs(-1.0, 1e-5)); // one sample, two pixels
    CHECK_THAT(rv1.at(0), WithinAbs(0.9 + 0.1 * 2.0, 1e-15));

    Tensor rm2({1}, 0.5), rv2({1}, 4.0);
    const Tensor e = batch_norm(Tensor({1, 1, 1, 1}, {2.5}), gamma, beta, rm2, rv2, {false});
    CHECK_THAT(e.item(), WithinAbs(2.0 / std::sqrt(4.0 + 1e-5), 1e-15));
}

TEST_CASE("batch norm gradients match finite differences", "[nn][bn][autodiff]") {
    Rng rng(17);
    Tensor x = testing::random_tensor({3, 2, 3, 3}, rng, -1, 1, true);
    Tensor g = testing::random_tensor({2}, rng, 0.5, 1.5, true);
    Tensor b = testing::random_tensor({2}, rng, -1, 1, true);
    Tensor rm({2}, 0.0), rv({2}, 1.0);
    const Tensor probe = testing::random_tensor({3, 2, 3, 3}, rng);
    const auto r = check_gradients(
        [&] { return sum(mul(batch_norm(x, g, b, rm, rv, {true}), probe)); },
        {{"x", x}, {"gamma", g}, {"beta", b}}, kFd);
    INFO(r.worst);
    CHECK(r.passed());
    for (double v : rv.data()) {
        CHECK(v > 0.0);
    }
}

TEST_CASE("linear and concat", "[nn]") {
    Rng rng(18);
    Tensor x = testing::random_tensor({3, 4}, rng, -1, 1, true);
    Tensor w = testing::random_tensor({2, 4}, rng, -1, 1, true);
    Tensor b = testing::random_tensor({2}, rng, -1, 1, true);
    const auto r = check_gradients([&] { return sum(tanh(linear(x, w, b))); },
                                   {{"x", x}, {"w", w}, {"b", b}}, kFd);
    CHECK(r.passed());

    Tensor a = testing::random_tensor({2, 1, 2, 2}, rng, -1, 1, true);
    Tensor c = testing::random_tensor({2, 3, 2, 2}, rng, -1, 1, true);
    const Tensor cat = concat_channels({a, c});
    CHECK(cat.shape() == Shape{2, 4, 2, 2});
    // Channel-range split of an index-valued upstream gradient.
    Tensor probe({2, 4, 2, 2});
    std::iota(probe.data_mut().begin(), probe.data_mut().end(), 0.0);
    sum(mul(cat, probe)).backward();
    for (std::size_t n = 0; n < 2; ++n) {
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(a.grad()[n * 4 + i] == probe.at(n * 16 + i));
            for (std::size_t ch = 0; ch < 3; ++ch) {
                CHECK(c.grad()[n * 12 + ch * 4 + i] == probe.at(n * 16 + (ch + 1) * 4 + i));
            }
        }
    }
}

TEST_CASE("cross entropy", "[nn][loss]") {
    const std::vector<std::uint8_t> targets{0, 1, 2, 3, 4, 0, 1, 2};
    const Tensor uniform({2, 5, 2, 2}, 0.3);
    CHECK_THAT(softmax_cross_entropy(uniform, targets).item(), WithinAbs(std::log(5.0), 1e-12));
    const std::vector<std::uint8_t> bad{0, 1, 2, 5, 0, 0, 0, 0};
    CHECK_THROWS(softmax_cross_entropy(uniform, bad));

    Rng rng(19);
    Tensor logits = testing::random_tensor({2, 5, 2, 2}, rng, -3, 3, true);
    const auto r =
        check_gradients([&] { return softmax_cross_entropy(logits, targets); }, {{"l", logits}}, kFd);
    CHECK(r.passed());
}

TEST_CASE("DoubleConv preserves extents and counts parameters", "[nn]") {
    Rng rng(20);
    DoubleConv dc(4, 6, rng);
    const Tensor y = dc.forward(testing::random_tensor({2, 4, 8, 8}, rng));
    CHECK(y.shape() == Shape{2, 6, 8, 8});
    CHECK(dc.parameter_count() == DepthwiseSeparableConv::expected_parameters(4, 6) + 2 * 6 +
                                      DepthwiseSeparableConv::expected_parameters(6, 6) + 2 * 6);
    for (double v : y.data()) {
        CHECK(v >= 0.0);
    }
}
