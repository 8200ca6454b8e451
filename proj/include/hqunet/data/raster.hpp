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
 * Lossless raster I/O (PNG via libpng) for RGB images and class masks.
 */

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "hqunet/labels.hpp"

namespace hqunet::data {

inline constexpr std::size_t kNumClasses = 5;

/// Class ids of the five land-cover classes.
enum class LandCover : std::uint8_t { Background = 0, Building = 1, Woodland = 2, Water = 3, Road = 4 };

inline constexpr std::array<std::string_view, kNumClasses> kClassNames{
    "background", "building", "woodland", "water", "road"};

/// Presentation colours for class ids 0..4 (ids stay authoritative).
inline constexpr std::array<std::array<std::uint8_t, 3>, kNumClasses> kPalette{{
    {200, 200, 200}, // background
    {220, 20, 60},   // building
    {34, 139, 34},   // woodland
    {30, 144, 255},  // water
    {255, 215, 0},   // road
}};

/// 8-bit interleaved RGB raster.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h) : width{w}, height{h}, rgb(w * h * 3, 0) {}

    [[nodiscard]] std::uint8_t at(std::size_t x, std::size_t y, std::size_t ch) const {
        return rgb[(y * width + x) * 3 + ch];
    }
    std::uint8_t &at(std::size_t x, std::size_t y, std::size_t ch) {
        return rgb[(y * width + x) * 3 + ch];
    }
    bool operator==(const RgbImage &) const = default;
};

struct RasterInfo {
    std::size_t width = 0;
    std::size_t height = 0;
};

/// Any 8/16-bit grey, palette, RGB or RGBA PNG, converted to 8-bit RGB.
[[nodiscard]] RgbImage read_rgb_png(const std::filesystem::path &path);
void write_rgb_png(const std::filesystem::path &path, const RgbImage &image);

/// Reads header only.
[[nodiscard]] RasterInfo read_png_info(const std::filesystem::path &path);

/// Single-channel 8-bit grey or palette PNG whose raw pixel values are class
/// ids. Values >= num_classes are rejected with their location.
[[nodiscard]] LabelMap read_mask_png(const std::filesystem::path &path,
                                     std::size_t num_classes = kNumClasses);
/// Paletted PNG; pixel value = class id, palette = kPalette.
void write_mask_png(const std::filesystem::path &path, const LabelMap &mask);

} // namespace hqunet::data
