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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hqunet/data/pipeline.hpp"

namespace hqunet::data {

/// A synthetic aerial-like scene: background with random rectangles and
/// discs of the four foreground classes. Pixel colours are the class
/// palette colour plus uniform noise of +-``noise`` levels.
[[nodiscard]] RasterPair synthetic_scene(std::size_t width, std::size_t height, Rng &rng,
                                         int noise = 24);

/// ``count`` scenes drawn from Rng(seed) in order.
[[nodiscard]] std::vector<RasterPair> synthetic_scenes(std::size_t count, std::size_t size,
                                                       std::uint64_t seed, int noise = 24);

} // namespace hqunet::data
