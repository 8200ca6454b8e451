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

#include "hqunet/metrics.hpp"
#include "hqunet/random.hpp"
#include "support/oracles.hpp"

using namespace hqunet;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

LabelMap mask(std::size_t h, std::size_t w, std::vector<std::uint8_t> ids) {
    LabelMap m(1, h, w);
    m.ids = std::move(ids);
    return m;
}

} // namespace

TEST_CASE("hand-counted 2x2 example", "[metrics]") {
    const auto truth = mask(2, 2, {0, 1, 1, 2});
    const auto pred = mask(2, 2, {0, 1, 2, 2});
    ConfusionMatrix cm(5);
    cm.update(pred, truth);
    CHECK(cm.count(0, 0) == 1);
    CHECK(cm.count(1, 1) == 1);
    CHECK(cm.count(1, 2) == 1);
    CHECK(cm.count(2, 2) == 1);
    CHECK(cm.total() == 4);
    CHECK_THAT(cm.oa(), WithinAbs(0.75, 1e-12));
    // diag / (row + col - diag): class 1 has row 2, col 1; class 2 has row 1, col 2.
    const auto iou = cm.per_class_iou();
    CHECK_THAT(iou[0], WithinAbs(1.0, 1e-12));
    CHECK_THAT(iou[1], WithinAbs(0.5, 1e-12));
    CHECK_THAT(iou[2], WithinAbs(0.5, 1e-12));
    CHECK(std::isnan(iou[3]));
    CHECK(std::isnan(iou[4]));
    CHECK_THAT(cm.miou(), WithinAbs(2.0 / 3.0, 1e-12));
}

TEST_CASE("perfect prediction is purely diagonal", "[metrics]") {
    const auto m = mask(2, 3, {0, 1, 2, 3, 4, 4});
    ConfusionMatrix cm(5);
    cm.update(m, m);
    for (std::size_t t = 0; t < 5; ++t) {
        for (std::size_t p = 0; p < 5; ++p) {
            CHECK(cm.count(t, p) == (t == p ? (t == 4 ? 2u : 1u) : 0u));
        }
    }
    CHECK(cm.miou() == 1.0);
    CHECK(MetricsReport::from(cm).oa_percent == 100.0);
}

TEST_CASE("updates are additive", "[metrics]") {
    Rng rng(4);
    LabelMap a(1, 3, 4), b(1, 3, 4), pa(1, 3, 4), pb(1, 3, 4);
    for (auto *m : {&a, &b, &pa, &pb}) {
        for (auto &id : m->ids) {
            id = static_cast<std::uint8_t>(rng.below(5));
        }
    }
    ConfusionMatrix seq(5), merged(5), left(5), right(5);
    seq.update(pa, a);
    seq.update(pb, b);
    LabelMap cat(2, 3, 4), pcat(2, 3, 4);
    std::copy(a.ids.begin(), a.ids.end(), cat.ids.begin());
    std::copy(b.ids.begin(), b.ids.end(), cat.ids.begin() + 12);
    std::copy(pa.ids.begin(), pa.ids.end(), pcat.ids.begin());
    std::copy(pb.ids.begin(), pb.ids.end(), pcat.ids.begin() + 12);
    ConfusionMatrix once(5);
    once.update(pcat, cat);
    CHECK(seq == once);
    left.update(pa, a);
    right.update(pb, b);
    merged.merge(left);
    merged.merge(right);
    CHECK(merged == once);
    CHECK_THROWS(merged.merge(ConfusionMatrix(4)));
}

TEST_CASE("invalid input is rejected before counting", "[metrics]") {
    ConfusionMatrix cm(5);
    const auto ok = mask(1, 2, {0, 1});
    CHECK_THROWS_WITH(cm.update(mask(1, 2, {0, 9}), ok), ContainsSubstring("9"));
    CHECK_THROWS_WITH(cm.update(ok, mask(1, 2, {5, 0})), ContainsSubstring("5"));
    CHECK_THROWS(cm.update(ok, mask(2, 1, {0, 1})));
    CHECK(cm.empty());
    CHECK_THROWS(cm.miou());
    CHECK_THROWS(cm.oa());
}

TEST_CASE("classes absent from both masks are excluded from the mean", "[metrics]") {
    ConfusionMatrix cm(5);
    cm.update(mask(1, 2, {0, 0}), mask(1, 2, {0, 1}));
    // class 0: 1/(1+2-1); class 1: 0/(1+0-0); classes 2..4 excluded.
    CHECK_THAT(cm.miou(), WithinAbs(0.25, 1e-15));
    const auto report = MetricsReport::from(cm).to_json();
    CHECK(report["per_class_IoU"][3].is_null());
    CHECK(report["pixels"] == 2);
    CHECK_THAT(report["OA%"].get<double>(), WithinAbs(50.0, 1e-12));
}

TEST_CASE("random masks match the brute-force oracle", "[metrics][property]") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t h = 1 + rng.below(6), w = 1 + rng.below(6);
        const std::size_t k = 2 + rng.below(4);
        LabelMap t(1, h, w), p(1, h, w);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t.ids[i] = static_cast<std::uint8_t>(rng.below(k));
            p.ids[i] = static_cast<std::uint8_t>(rng.below(k));
        }
        ConfusionMatrix cm(k);
        cm.update(p, t);
        const auto expect = oracle::brute_iou(p.ids, t.ids, k);
        const auto got = cm.per_class_iou();
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (std::isnan(expect[c])) {
                CHECK(std::isnan(got[c]));
            } else {
                CHECK(got[c] == expect[c]);
                sum += expect[c];
                ++n;
            }
        }
        CHECK(cm.miou() == sum / static_cast<double>(n));
        CHECK(cm.oa() == oracle::brute_oa(p.ids, t.ids));
    }
}

TEST_CASE("report table lists every class", "[metrics]") {
    ConfusionMatrix cm(5);
    cm.update(mask(1, 2, {0, 1}), mask(1, 2, {0, 1}));
    const auto text = MetricsReport::from(cm).table({"background", "building", "woodland", "water", "road"});
    CHECK_THAT(text, ContainsSubstring("woodland"));
    CHECK_THAT(text, ContainsSubstring("mIoU"));
}
