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

#include "hqunet/ops.hpp"
#include "hqunet/optim.hpp"
#include "support/helpers.hpp"

using namespace hqunet;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

/// 0.5 * sum((x - c)^2), minimised at x = c.
Tensor quadratic(const Tensor &x, const Tensor &c) {
    const Tensor d = sub(x, c);
    return scale(sum(mul(d, d)), 0.5);
}

} // namespace

TEST_CASE("zero gradient leaves parameters unchanged", "[optim]") {
    Tensor w({3}, std::vector<double>{1.0, -2.0, 0.5});
    w.set_requires_grad(true);
    Adam opt({{"w", w}});
    opt.step(); // no gradient yet: treated as zero
    scale(sum(w), 0.0).backward();
    opt.step();
    CHECK(testing::to_vector(w) == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("first step moves by about -lr * sign(grad)", "[optim]") {
    const std::vector<double> g{3.0, -0.02, 1e-3, -40.0};
    std::vector<double> p(4, 1.0), m(4, 0.0), v(4, 0.0);
    AdamOptions opts;
    opts.lr = 0.01;
    adam_update(p, g, m, v, 1, opts);
    for (std::size_t i = 0; i < 4; ++i) {
        // mhat = g, vhat = g^2, so the step is lr * |g| / (|g| + eps).
        const double expect = 1.0 - opts.lr * std::copysign(1.0, g[i]) * std::abs(g[i]) /
                                        (std::abs(g[i]) + opts.eps);
        CHECK_THAT(p[i], WithinAbs(expect, 1e-15));
        CHECK_THAT(p[i], WithinAbs(1.0 - opts.lr * std::copysign(1.0, g[i]), 1e-7));
    }
}

TEST_CASE("quadratic converges toward its minimum", "[optim]") {
    Tensor x({2}, std::vector<double>{3.0, -4.0});
    x.set_requires_grad(true);
    const Tensor c({2}, std::vector<double>{0.5, 1.0});
    AdamOptions opts;
    opts.lr = 0.05;
    Adam opt({{"x", x}}, opts);
    std::vector<double> losses;
    for (int i = 0; i < 400; ++i) {
        opt.zero_grad();
        const Tensor loss = quadratic(x, c);
        losses.push_back(loss.item());
        loss.backward();
        opt.step();
    }
    // Monotone decrease over the early stretch, before Adam's fixed-size steps overshoot.
    for (std::size_t i = 1; i < 40; ++i) {
        CHECK(losses[i] < losses[i - 1]);
    }
    CHECK(losses.back() < 1e-3 * losses.front());
    CHECK_THAT(x.at(0), WithinAbs(0.5, 0.05));
    CHECK_THAT(x.at(1), WithinAbs(1.0, 0.05));
    CHECK(opt.steps() == 400);
}

TEST_CASE("shape mismatches and bad hyperparameters are rejected", "[optim]") {
    std::vector<double> p(3), g(2), m(3), v(3);
    CHECK_THROWS_WITH(adam_update(p, g, m, v, 1, {}), ContainsSubstring("3"));
    g.resize(3);
    CHECK_THROWS(adam_update(p, g, m, v, 0, {}));
    AdamOptions bad;
    bad.lr = -1.0;
    CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("optimizer.lr"));
    bad = {};
    bad.beta2 = 1.0;
    CHECK_THROWS_WITH(bad.validate(), ContainsSubstring("optimizer.beta2"));
}

TEST_CASE("optimizer state round trips", "[optim]") {
    auto make = [] {
        Tensor a({2, 2}, std::vector<double>{1, 2, 3, 4});
        Tensor b({3}, std::vector<double>{-1, 0, 1});
        a.set_requires_grad(true);
        b.set_requires_grad(true);
        return std::vector<nn::NamedTensor>{{"a", a}, {"b", b}};
    };
    auto run = [](Adam &opt, int steps) {
        for (int i = 0; i < steps; ++i) {
            opt.zero_grad();
            const auto &ps = opt.parameters();
            add(sum(mul(ps[0].tensor, ps[0].tensor)), sum(tanh(ps[1].tensor))).backward();
            opt.step();
        }
    };
    auto pa = make();
    Adam full(pa);
    run(full, 6);

    auto pb = make();
    Adam first(pb);
    run(first, 3);
    auto pc = pb; // same tensors, fresh optimizer
    Adam resumed(pc);
    resumed.load_state(first.steps(), first.first_moments(), first.second_moments());
    run(resumed, 3);
    CHECK(testing::to_vector(pa[0].tensor) == testing::to_vector(pc[0].tensor));
    CHECK(testing::to_vector(pa[1].tensor) == testing::to_vector(pc[1].tensor));

    auto moments = first.first_moments();
    moments.pop_back();
    CHECK_THROWS_WITH(resumed.load_state(1, moments, first.second_moments()),
                      ContainsSubstring("'b'"));
    nlohmann::json j = AdamOptions{0.02, 0.8, 0.99, 1e-6};
    const auto back = j.get<AdamOptions>();
    CHECK(back.lr == 0.02);
    CHECK(back.beta1 == 0.8);
    CHECK(j.contains("eps"));
}
