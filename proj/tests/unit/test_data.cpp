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

#include <array>
#include <fstream>

#include "hqunet/data/pipeline.hpp"
#include "hqunet/data/raster.hpp"
#include "hqunet/data/synthetic.hpp"
#include "support/files.hpp"

using namespace hqunet;
using namespace hqunet::data;
using Catch::Matchers::ContainsSubstring;

namespace fs = std::filesystem;

#ifndef HQUNET_FIXTURE_DIR
#error "HQUNET_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace {

RasterPair gradient_pair(std::size_t w, std::size_t h) {
    RasterPair p{RgbImage(w, h), LabelMap(1, h, w)};
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            p.image.at(x, y, 0) = static_cast<std::uint8_t>(x % 256);
            p.image.at(x, y, 1) = static_cast<std::uint8_t>(y % 256);
            p.image.at(x, y, 2) = static_cast<std::uint8_t>((x / 256) * 16 + (y / 256));
            p.mask.at(0, y, x) = static_cast<std::uint8_t>((x + 2 * y) % kNumClasses);
        }
    }
    return p;
}

std::array<std::size_t, kNumClasses> histogram(const LabelMap &m) {
    std::array<std::size_t, kNumClasses> h{};
    for (auto id : m.ids) {
        ++h[id];
    }
    return h;
}

} // namespace

TEST_CASE("tiling drops partial remainders", "[data][tile]") {
    const auto square = gradient_pair(1024, 1024);
    CHECK(tile(square.image, square.mask, 512).size() == 4);
    const auto wide = gradient_pair(1100, 1024);
    const auto tiles = tile(wide.image, wide.mask, 512);
    REQUIRE(tiles.size() == 4);
    // Row-major: tile index 1 is row 0, column 1.
    CHECK(tiles[1].row == 0);
    CHECK(tiles[1].col == 1);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        CHECK(tiles[1].pair.image.at(88, 10, ch) == wide.image.at(600, 10, ch));
    }
    CHECK(tiles[1].pair.mask.at(0, 10, 88) == wide.mask.at(0, 10, 600));
    CHECK(tiles[3].pair.mask.at(0, 511, 511) == wide.mask.at(0, 1023, 1023));

    const auto small = gradient_pair(300, 300);
    CHECK_THROWS(tile(small.image, small.mask, 512));
    CHECK_THROWS(tile(square.image, LabelMap(1, 1024, 1000), 512));
}

TEST_CASE("patch sampling", "[data][sample]") {
    const auto pair = gradient_pair(64, 64);
    Rng rng(1);
    PatchOffset off;
    const auto full = sample_patch(pair, 64, rng, &off);
    CHECK(off.x == 0);
    CHECK(off.y == 0);
    CHECK(full.image.shape() == Shape{3, 64, 64});
    CHECK(full.mask == pair.mask);
    CHECK(full.image.at(3 * 64 * 64 - 1) == pair.image.at(63, 63, 2) / 255.0);
    CHECK_THROWS(sample_patch(pair, 65, rng));

    Rng a(5), b(5);
    for (int i = 0; i < 20; ++i) {
        const auto sa = sample_patch(pair, 16, a);
        const auto sb = sample_patch(pair, 16, b);
        CHECK(sa.mask == sb.mask);
        CHECK(std::vector<double>(sa.image.data().begin(), sa.image.data().end()) ==
              std::vector<double>(sb.image.data().begin(), sb.image.data().end()));
    }
    for (double v : full.image.data()) {
        CHECK((v >= 0.0 && v <= 1.0));
    }
}

TEST_CASE("sample offsets cover the full range", "[data][sample]") {
    const auto pair = gradient_pair(512, 512);
    Rng rng(2);
    std::size_t min_x = 512, max_x = 0, min_y = 512, max_y = 0;
    for (int i = 0; i < 10000; ++i) {
        PatchOffset off;
        (void)sample_patch(pair, 128, rng, &off);
        min_x = std::min(min_x, off.x);
        max_x = std::max(max_x, off.x);
        min_y = std::min(min_y, off.y);
        max_y = std::max(max_y, off.y);
    }
    CHECK(min_x == 0);
    CHECK(min_y == 0);
    CHECK(max_x == 384);
    CHECK(max_y == 384);
}

TEST_CASE("dihedral transforms", "[data][augment]") {
    const auto pair = gradient_pair(8, 8);
    const auto s = crop(pair, 0, 0, 8);
    const auto id = apply_dihedral(s, 0);
    CHECK(id.mask == s.mask);
    const auto r180 = apply_dihedral(apply_dihedral(s, 2), 2);
    CHECK(r180.mask == s.mask);
    CHECK(std::vector<double>(r180.image.data().begin(), r180.image.data().end()) ==
          std::vector<double>(s.image.data().begin(), s.image.data().end()));
    auto r = s;
    for (int i = 0; i < 4; ++i) {
        r = apply_dihedral(r, 1);
    }
    CHECK(r.mask == s.mask);
    CHECK(apply_dihedral(apply_dihedral(s, 1), 1).mask == apply_dihedral(s, 2).mask);
    for (int t : {4, 5, 6, 7}) {
        CHECK(apply_dihedral(apply_dihedral(s, t), t).mask == s.mask); // reflections are involutions
    }
    for (int t = 0; t < kDihedralCount; ++t) {
        const auto out = apply_dihedral(s, t);
        CHECK(histogram(out.mask) == histogram(s.mask));
        for (std::size_t y = 0; y < 8; ++y) {
            for (std::size_t x = 0; x < 8; ++x) {
                const auto to = dihedral_target(x, y, 8, t);
                CHECK(out.mask.at(0, to.y, to.x) == s.mask.at(0, y, x));
                CHECK(out.image.at(2 * 64 + to.y * 8 + to.x) == s.image.at(2 * 64 + y * 8 + x));
            }
        }
    }
    CHECK_THROWS(apply_dihedral(s, 8));
}

TEST_CASE("augment draws every transform", "[data][augment]") {
    const auto s = crop(gradient_pair(4, 4), 0, 0, 4);
    Rng rng(3);
    std::array<int, kDihedralCount> seen{};
    for (int i = 0; i < 400; ++i) {
        int t = -1;
        const auto out = augment(s, rng, &t);
        REQUIRE(t >= 0);
        REQUIRE(t < kDihedralCount);
        ++seen[static_cast<std::size_t>(t)];
        CHECK(histogram(out.mask) == histogram(s.mask));
    }
    for (int c : seen) {
        CHECK(c > 20);
    }
}

TEST_CASE("mask PNG round trips", "[data][png]") {
    const auto dir = testing::scratch_dir("mask_png");
    LabelMap zeros(1, 7, 9);
    write_mask_png(dir / "zeros.png", zeros);
    CHECK(read_mask_png(dir / "zeros.png") == zeros);
    LabelMap all(1, 5, 6);
    for (std::size_t i = 0; i < all.size(); ++i) {
        all.ids[i] = static_cast<std::uint8_t>(i % kNumClasses);
    }
    write_mask_png(dir / "all.png", all);
    CHECK(read_mask_png(dir / "all.png") == all);

    RgbImage img(5, 3);
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        img.rgb[i] = static_cast<std::uint8_t>(i * 7);
    }
    write_rgb_png(dir / "img.png", img);
    CHECK(read_rgb_png(dir / "img.png") == img);
    CHECK(read_png_info(dir / "img.png").width == 5);
}

TEST_CASE("mask reader rejects out-of-range ids with their location", "[data][png]") {
    const auto dir = testing::scratch_dir("mask_bad");
    std::vector<std::uint8_t> v(4 * 3, 1);
    v[2 * 4 + 3] = 7; // (x=3, y=2)
    testing::write_gray_png(dir / "bad.png", 4, 3, v);
    CHECK_THROWS_WITH(read_mask_png(dir / "bad.png"),
                      ContainsSubstring("7") && ContainsSubstring("(x=3, y=2)"));
    CHECK_THROWS(read_mask_png(dir / "missing.png"));
    v[2 * 4 + 3] = 4;
    testing::write_gray_png(dir / "ok.png", 4, 3, v);
    CHECK(read_mask_png(dir / "ok.png").at(0, 2, 3) == 4);
}

TEST_CASE("palette mask output matches the frozen golden file", "[data][png]") {
    LabelMap m(1, 2, 5);
    for (std::size_t i = 0; i < 10; ++i) {
        m.ids[i] = static_cast<std::uint8_t>(i % kNumClasses);
    }
    const auto dir = testing::scratch_dir("golden");
    write_mask_png(dir / "palette.png", m);
    const auto golden = fs::path(HQUNET_FIXTURE_DIR) / "golden_palette_mask.png";
    REQUIRE(fs::exists(golden));
    CHECK(testing::read_bytes(dir / "palette.png") == testing::read_bytes(golden));
}

TEST_CASE("preprocess the bundled 1024x1024 fixture", "[data][preprocess]") {
    const auto out1 = testing::scratch_dir("pre1");
    const auto out2 = testing::scratch_dir("pre2");
    const fs::path src = fs::path(HQUNET_FIXTURE_DIR) / "scene_1024";
    PreprocessOptions opts;
    opts.seed = 4;
    const auto r1 = preprocess(src, out1, opts);
    CHECK(r1.tiles == 4);
    REQUIRE(r1.manifests.size() == 3);
    std::size_t listed = 0;
    for (const auto &m : r1.manifests) {
        const auto manifest = TileManifest::load(m);
        manifest.validate();
        listed += manifest.entries.size();
        for (const auto &e : manifest.entries) {
            CHECK(e.width == 512);
            CHECK(e.height == 512);
        }
    }
    CHECK(listed == 4);
    for (const char *name : {"scene_0.png", "scene_3.png"}) {
        CHECK(fs::exists(out1 / "tiles" / "images" / name));
        CHECK(fs::exists(out1 / "tiles" / "masks" / name));
    }
    // Re-running into the same directory reproduces every byte.
    const auto before = testing::read_bytes(out1 / "tiles" / "masks" / "scene_2.png");
    const auto manifest_before = testing::read_bytes(out1 / "manifests" / "train.json");
    (void)preprocess(src, out1, opts);
    CHECK(testing::read_bytes(out1 / "tiles" / "masks" / "scene_2.png") == before);
    CHECK(testing::read_bytes(out1 / "manifests" / "train.json") == manifest_before);
    (void)preprocess(src, out2, opts);
    CHECK(testing::read_bytes(out2 / "tiles" / "images" / "scene_1.png") ==
          testing::read_bytes(out1 / "tiles" / "images" / "scene_1.png"));

    const auto source = read_rgb_png(src / "images" / "scene.png");
    const auto t1 = read_rgb_png(out1 / "tiles" / "images" / "scene_1.png");
    CHECK(t1.at(88, 10, 0) == source.at(600, 10, 0));
}

TEST_CASE("preprocess honours split files and rejects bad input", "[data][preprocess]") {
    const auto src = testing::scratch_dir("pre_split_src");
    fs::create_directories(src / "images");
    fs::create_directories(src / "masks");
    const auto empty_out = testing::scratch_dir("pre_empty");
    CHECK_THROWS_WITH(preprocess(src, empty_out, {}), ContainsSubstring("no .png"));
    CHECK_THROWS(preprocess(src / "nope", empty_out, {}));

    const auto scene = synthetic_scenes(1, 128, 9).front();
    write_rgb_png(src / "images" / "a.png", scene.image);
    write_mask_png(src / "masks" / "a.png", scene.mask);
    std::ofstream(src / "train.txt") << "a_0\na_1\n";
    std::ofstream(src / "val.txt") << "a_2\n";
    std::ofstream(src / "test.txt") << "a_3\n";
    const auto out = testing::scratch_dir("pre_split_out");
    PreprocessOptions opts;
    opts.tile_size = 64;
    (void)preprocess(src, out, opts);
    CHECK(TileManifest::load(out / "manifests" / "train.json").entries.size() == 2);
    const auto val = TileManifest::load(out / "manifests" / "val.json");
    REQUIRE(val.entries.size() == 1);
    CHECK(fs::path(val.entries[0].image).filename() == "a_2.png");

    fs::remove(src / "masks" / "a.png");
    CHECK_THROWS_WITH(preprocess(src, out, opts), ContainsSubstring("mask"));
}

TEST_CASE("manifest validation", "[data][manifest]") {
    const auto dir = testing::scratch_dir("manifest");
    const auto scene = synthetic_scenes(1, 32, 1).front();
    write_rgb_png(dir / "i.png", scene.image);
    write_mask_png(dir / "m.png", scene.mask);
    TileManifest m{"train", 3, {{(dir / "i.png").string(), (dir / "m.png").string(), 32, 32}}};
    m.save(dir / "train.json");
    const auto back = TileManifest::load(dir / "train.json");
    CHECK(back.split == "train");
    CHECK(back.seed == 3);
    REQUIRE(back.entries.size() == 1);
    back.validate();
    CHECK(back.load_pairs().front().mask == scene.mask);

    TileManifest wrong = m;
    wrong.entries[0].width = 31;
    CHECK_THROWS_WITH(wrong.validate(), ContainsSubstring("32x32"));
    TileManifest missing = m;
    missing.entries[0].mask = (dir / "gone.png").string();
    CHECK_THROWS_WITH(missing.validate(), ContainsSubstring("gone.png"));
}

TEST_CASE("patch sampler is reproducible per worker count", "[data][sampler]") {
    auto scenes = synthetic_scenes(3, 64, 2);
    PatchSampler a(scenes, 32, 11, 1), b(scenes, 32, 11, 1);
    PatchSampler c(scenes, 32, 11, 3), d(scenes, 32, 11, 3);
    for (int step = 0; step < 3; ++step) {
        const auto ba = a.next_batch(5), bb = b.next_batch(5);
        const auto bc = c.next_batch(5), bd = d.next_batch(5);
        CHECK(ba.masks == bb.masks);
        CHECK(bc.masks == bd.masks);
        CHECK(ba.images.shape() == Shape{5, 3, 32, 32});
        CHECK(std::vector<double>(bc.images.data().begin(), bc.images.data().end()) ==
              std::vector<double>(bd.images.data().begin(), bd.images.data().end()));
    }
    // Draw k of a batch comes from worker k mod W.
    PatchSampler e(scenes, 32, 11, 3), f(scenes, 32, 11, 3);
    const auto batch = e.next_batch(4);
    const std::array<std::size_t, 4> workers{0, 1, 2, 0};
    for (std::size_t k = 0; k < 4; ++k) {
        const auto s = f.draw(workers[k]);
        for (std::size_t i = 0; i < 32 * 32; ++i) {
            CHECK(batch.masks.ids[k * 32 * 32 + i] == s.mask.ids[i]);
        }
    }
    CHECK_THROWS(PatchSampler(scenes, 65, 1));
    CHECK_THROWS(PatchSampler({}, 8, 1));
}

TEST_CASE("relative manifest entries resolve against the manifest", "[data][manifest]") {
    const auto dir = testing::scratch_dir("manifest_rel");
    fs::create_directories(dir / "tiles");
    fs::create_directories(dir / "manifests");
    const auto scene = synthetic_scenes(1, 16, 4).front();
    write_rgb_png(dir / "tiles" / "i.png", scene.image);
    write_mask_png(dir / "tiles" / "m.png", scene.mask);
    TileManifest{"val", 0, {{"../tiles/i.png", "../tiles/m.png", 16, 16}}}.save(dir / "manifests" / "val.json");
    const fs::path moved = dir.string() + "_moved";
    fs::remove_all(moved);
    fs::rename(dir, moved);
    const auto m = TileManifest::load(moved / "manifests" / "val.json");
    m.validate();
    CHECK(fs::path(m.entries[0].image) == (moved / "tiles" / "i.png").lexically_normal());
    CHECK(m.load_pairs().front().image == scene.image);
    fs::remove_all(moved);
}
