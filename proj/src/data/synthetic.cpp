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

#include "hqunet/data/synthetic.hpp"

#include <algorithm>

namespace hqunet::data {

RasterPair synthetic_scene(std::size_t width, std::size_t height, Rng &rng, int noise) {
    RasterPair pair{RgbImage(width, height), LabelMap(1, height, width)};
    const std::size_t shapes = 3 + rng.below(4);
    const double span = static_cast<double>(std::min(width, height));
    for (std::size_t s = 0; s < shapes; ++s) {
        const auto cls = static_cast<std::uint8_t>(1 + rng.below(kNumClasses - 1));
        const double cx = rng.uniform(0.0, static_cast<double>(width));
        const double cy = rng.uniform(0.0, static_cast<double>(height));
        const double rx = rng.uniform(0.1, 0.3) * span;
        const double ry = rng.uniform(0.1, 0.3) * span;
        const bool disc = rng.below(2) == 1;
        for (std::size_t y = 0; y < height; ++y) {
            for (std::size_t x = 0; x < width; ++x) {
                const double dx = (static_cast<double>(x) + 0.5 - cx) / rx;
                const double dy = (static_cast<double>(y) + 0.5 - cy) / ry;
                const bool inside = disc ? dx * dx + dy * dy <= 1.0
                                         : (dx >= -1.0 && dx <= 1.0 && dy >= -1.0 && dy <= 1.0);
                if (inside) {
                    pair.mask.at(0, y, x) = cls;
                }
            }
        }
    }
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const auto &colour = kPalette[pair.mask.at(0, y, x)];
            for (std::size_t ch = 0; ch < 3; ++ch) {
                const int jitter =
                    noise > 0 ? static_cast<int>(rng.below(2 * static_cast<std::uint64_t>(noise) + 1)) - noise
                              : 0;
                pair.image.at(x, y, ch) =
                    static_cast<std::uint8_t>(std::clamp(colour[ch] + jitter, 0, 255));
            }
        }
    }
    return pair;
}

std::vector<RasterPair> synthetic_scenes(std::size_t count, std::size_t size, std::uint64_t seed,
                                         int noise) {
    Rng rng(seed);
    std::vector<RasterPair> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(synthetic_scene(size, size, rng, noise));
    }
    return out;
}

} // namespace hqunet::data
