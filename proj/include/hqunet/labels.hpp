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
#include <string>
#include <vector>

namespace hqunet {

/// Integer class ids laid out [batch, height, width].
struct LabelMap {
    std::size_t batch = 1;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> ids;

    LabelMap() = default;
    LabelMap(std::size_t b, std::size_t h, std::size_t w, std::uint8_t fill = 0)
        : batch{b}, height{h}, width{w}, ids(b * h * w, fill) {}

    [[nodiscard]] std::size_t size() const { return ids.size(); }
    [[nodiscard]] std::uint8_t at(std::size_t b, std::size_t y, std::size_t x) const {
        return ids[(b * height + y) * width + x];
    }
    std::uint8_t &at(std::size_t b, std::size_t y, std::size_t x) {
        return ids[(b * height + y) * width + x];
    }
    bool operator==(const LabelMap &) const = default;
};

} // namespace hqunet
