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
 * Tiling, random patch sampling, dihedral augmentation and split manifests.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqunet/data/raster.hpp"
#include "hqunet/labels.hpp"
#include "hqunet/random.hpp"
#include "hqunet/tensor.hpp"

namespace hqunet::data {

inline constexpr std::size_t kDefaultTileSize = 512;

struct RasterPair {
    RgbImage image;
    LabelMap mask;
};

struct Tile {
    std::size_t row = 0; // tile grid coordinates
    std::size_t col = 0;
    RasterPair pair;
};

/// Non-overlapping full tiles in row-major order; remainders smaller than
/// ``tile_size`` along either axis are dropped.
[[nodiscard]] std::vector<Tile> tile(const RgbImage &image, const LabelMap &mask,
                                     std::size_t tile_size = kDefaultTileSize);

struct SegSample {
    Tensor image; // [3, P, P], values in [0, 1]
    LabelMap mask; // [1, P, P]
};

/// Crop at (x0, y0) with bytes scaled by 1/255.
[[nodiscard]] SegSample crop(const RasterPair &pair, std::size_t x0, std::size_t y0,
                             std::size_t patch);

struct PatchOffset {
    std::size_t x = 0;
    std::size_t y = 0;
};

/// Uniform top-left offset in [0, W - P] x [0, H - P].
[[nodiscard]] SegSample sample_patch(const RasterPair &pair, std::size_t patch, Rng &rng,
                                     PatchOffset *offset = nullptr);

inline constexpr int kDihedralCount = 8;

/// 0: identity, 1..3: rotation by 90/180/270 degrees, 4: horizontal flip,
/// 5: vertical flip, 6: transpose, 7: anti-transpose.
[[nodiscard]] SegSample apply_dihedral(const SegSample &sample, int transform);

/// Where pixel (x, y) of a P x P patch lands under ``transform``.
[[nodiscard]] PatchOffset dihedral_target(std::size_t x, std::size_t y, std::size_t size,
                                          int transform);

/// Uniformly drawn dihedral transform applied to image and mask together.
[[nodiscard]] SegSample augment(const SegSample &sample, Rng &rng, int *transform = nullptr);

/// Tile paths are stored as written; relative ones resolve against the
/// manifest's directory on load.
struct ManifestEntry {
    std::string image;
    std::string mask;
    std::size_t width = 0;
    std::size_t height = 0;
};

struct TileManifest {
    std::string split;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> entries;

    void save(const std::filesystem::path &path) const;
    [[nodiscard]] static TileManifest load(const std::filesystem::path &path);
    /// Every pair exists and image/mask headers match the recorded extents.
    void validate() const;
    [[nodiscard]] std::vector<RasterPair> load_pairs() const;
};

void to_json(nlohmann::json &j, const TileManifest &m);
void from_json(const nlohmann::json &j, TileManifest &m);

struct PreprocessOptions {
    std::size_t tile_size = kDefaultTileSize;
    std::uint64_t seed = 0;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
};

struct PreprocessResult {
    std::size_t tiles = 0;
    std::vector<std::filesystem::path> manifests;
};

/// Reads ``src/images/*.png`` with masks of the same stem in ``src/masks``,
/// writes ``out/tiles/{images,masks}/<stem>_<k>.png`` (k row-major) and
/// ``out/manifests/{train,val,test}.json``. Split lists ``src/{train,val,test}.txt``
/// (one tile name per line) are used when present; otherwise tiles are
/// shuffled with ``seed`` and split by the configured fractions.
PreprocessResult preprocess(const std::filesystem::path &src, const std::filesystem::path &out,
                            const PreprocessOptions &opts);

struct Batch {
    Tensor images;  // [N, 3, P, P]
    LabelMap masks; // [N, P, P]
};

[[nodiscard]] Batch make_batch(std::span<const SegSample> samples);

/// Endless stream of augmented random patches. Draw k of every batch is made
/// by worker (k mod workers) from its own stream Rng::stream(seed, worker),
/// so the merged sequence depends only on (seed, workers).
class PatchSampler {
  public:
    PatchSampler(std::vector<RasterPair> pairs, std::size_t patch, std::uint64_t seed,
                 std::size_t workers = 1, bool augment = true);

    [[nodiscard]] Batch next_batch(std::size_t batch_size);
    [[nodiscard]] SegSample draw(std::size_t worker);

  private:
    std::vector<RasterPair> pairs_;
    std::size_t patch_;
    bool augment_;
    std::vector<Rng> streams_;
};

} // namespace hqunet::data
