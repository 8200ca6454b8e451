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

#include "hqunet/data/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

namespace hqunet::data {

namespace fs = std::filesystem;

std::vector<Tile> tile(const RgbImage &image, const LabelMap &mask, std::size_t tile_size) {
    if (image.width != mask.width || image.height != mask.height || mask.batch != 1) {
        throw std::invalid_argument("tile: image is " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + " but mask is " +
                                    std::to_string(mask.width) + "x" + std::to_string(mask.height));
    }
    if (tile_size == 0 || image.width < tile_size || image.height < tile_size) {
        throw std::invalid_argument("tile: raster " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + " smaller than tile size " +
                                    std::to_string(tile_size));
    }
    const std::size_t rows = image.height / tile_size;
    const std::size_t cols = image.width / tile_size;
    std::vector<Tile> tiles;
    tiles.reserve(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            Tile t;
            t.row = r;
            t.col = c;
            t.pair.image = RgbImage(tile_size, tile_size);
            t.pair.mask = LabelMap(1, tile_size, tile_size);
            for (std::size_t y = 0; y < tile_size; ++y) {
                const std::size_t sy = r * tile_size + y;
                const auto src = image.rgb.begin() +
                                 static_cast<std::ptrdiff_t>((sy * image.width + c * tile_size) * 3);
                std::copy(src, src + static_cast<std::ptrdiff_t>(tile_size * 3),
                          t.pair.image.rgb.begin() + static_cast<std::ptrdiff_t>(y * tile_size * 3));
                const auto msrc = mask.ids.begin() +
                                  static_cast<std::ptrdiff_t>(sy * mask.width + c * tile_size);
                std::copy(msrc, msrc + static_cast<std::ptrdiff_t>(tile_size),
                          t.pair.mask.ids.begin() + static_cast<std::ptrdiff_t>(y * tile_size));
            }
            tiles.push_back(std::move(t));
        }
    }
    return tiles;
}

SegSample crop(const RasterPair &pair, std::size_t x0, std::size_t y0, std::size_t patch) {
    const auto &img = pair.image;
    if (x0 + patch > img.width || y0 + patch > img.height) {
        throw std::invalid_argument("crop: " + std::to_string(patch) + "-pixel patch at (" +
                                    std::to_string(x0) + ", " + std::to_string(y0) +
                                    ") exceeds " + std::to_string(img.width) + "x" +
                                    std::to_string(img.height));
    }
    SegSample s{Tensor({3, patch, patch}), LabelMap(1, patch, patch)};
    auto d = s.image.data_mut();
    const std::size_t plane = patch * patch;
    for (std::size_t y = 0; y < patch; ++y) {
        for (std::size_t x = 0; x < patch; ++x) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                d[ch * plane + y * patch + x] = img.at(x0 + x, y0 + y, ch) / 255.0;
            }
            s.mask.at(0, y, x) = pair.mask.at(0, y0 + y, x0 + x);
        }
    }
    return s;
}

SegSample sample_patch(const RasterPair &pair, std::size_t patch, Rng &rng, PatchOffset *offset) {
    if (patch == 0 || patch > pair.image.width || patch > pair.image.height) {
        throw std::invalid_argument("sample_patch: patch size " + std::to_string(patch) +
                                    " exceeds tile " + std::to_string(pair.image.width) + "x" +
                                    std::to_string(pair.image.height));
    }
    const std::size_t x0 = rng.below(pair.image.width - patch + 1);
    const std::size_t y0 = rng.below(pair.image.height - patch + 1);
    if (offset) {
        *offset = {x0, y0};
    }
    return crop(pair, x0, y0, patch);
}

PatchOffset dihedral_target(std::size_t x, std::size_t y, std::size_t size, int transform) {
    const std::size_t m = size - 1;
    switch (transform) {
    case 0: return {x, y};
    case 1: return {m - y, x};
    case 2: return {m - x, m - y};
    case 3: return {y, m - x};
    case 4: return {m - x, y};
    case 5: return {x, m - y};
    case 6: return {y, x};
    case 7: return {m - y, m - x};
    default: break;
    }
    throw std::invalid_argument("dihedral transform must be in [0, 8), got " +
                                std::to_string(transform));
}

SegSample apply_dihedral(const SegSample &sample, int transform) {
    const std::size_t p = sample.mask.height;
    if (sample.mask.width != p || sample.image.ndim() != 3 || sample.image.dim(1) != p ||
        sample.image.dim(2) != p) {
        throw std::invalid_argument("apply_dihedral: sample must be a square [3, P, P] patch");
    }
    (void)dihedral_target(0, 0, p, transform);
    const std::size_t channels = sample.image.dim(0);
    SegSample out{Tensor(sample.image.shape()), LabelMap(1, p, p)};
    auto src = sample.image.data();
    auto dst = out.image.data_mut();
    const std::size_t plane = p * p;
    for (std::size_t y = 0; y < p; ++y) {
        for (std::size_t x = 0; x < p; ++x) {
            const auto to = dihedral_target(x, y, p, transform);
            for (std::size_t ch = 0; ch < channels; ++ch) {
                dst[ch * plane + to.y * p + to.x] = src[ch * plane + y * p + x];
            }
            out.mask.at(0, to.y, to.x) = sample.mask.at(0, y, x);
        }
    }
    return out;
}

SegSample augment(const SegSample &sample, Rng &rng, int *transform) {
    const int t = static_cast<int>(rng.below(kDihedralCount));
    if (transform) {
        *transform = t;
    }
    return apply_dihedral(sample, t);
}

void to_json(nlohmann::json &j, const TileManifest &m) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto &e : m.entries) {
        entries.push_back(
            {{"image", e.image}, {"mask", e.mask}, {"width", e.width}, {"height", e.height}});
    }
    j = {{"split", m.split}, {"seed", m.seed}, {"entries", entries}};
}

void from_json(const nlohmann::json &j, TileManifest &m) {
    j.at("split").get_to(m.split);
    m.seed = j.value("seed", std::uint64_t{0});
    m.entries.clear();
    for (const auto &e : j.at("entries")) {
        m.entries.push_back({e.at("image").get<std::string>(), e.at("mask").get<std::string>(),
                             e.at("width").get<std::size_t>(), e.at("height").get<std::size_t>()});
    }
}

void TileManifest::save(const fs::path &path) const {
    std::ofstream os(path);
    if (!os) {
        throw std::runtime_error("cannot write manifest '" + path.string() + "'");
    }
    os << nlohmann::json(*this).dump(2) << '\n';
}

TileManifest TileManifest::load(const fs::path &path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot read manifest '" + path.string() + "'");
    }
    TileManifest m;
    try {
        m = nlohmann::json::parse(is).get<TileManifest>();
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error("malformed manifest '" + path.string() + "': " + e.what());
    }
    // Relative entries are relative to the manifest's own directory.
    const fs::path base = path.parent_path();
    for (auto &e : m.entries) {
        for (std::string *p : {&e.image, &e.mask}) {
            if (fs::path(*p).is_relative()) {
                *p = (base / *p).lexically_normal().string();
            }
        }
    }
    return m;
}

void TileManifest::validate() const {
    for (const auto &e : entries) {
        for (const auto &p : {e.image, e.mask}) {
            if (!fs::exists(p)) {
                throw std::runtime_error("manifest '" + split + "': missing file '" + p + "'");
            }
            const auto info = read_png_info(p);
            if (info.width != e.width || info.height != e.height) {
                throw std::runtime_error("manifest '" + split + "': '" + p + "' is " +
                                         std::to_string(info.width) + "x" +
                                         std::to_string(info.height) + ", recorded " +
                                         std::to_string(e.width) + "x" + std::to_string(e.height));
            }
        }
    }
}

std::vector<RasterPair> TileManifest::load_pairs() const {
    validate();
    std::vector<RasterPair> pairs;
    pairs.reserve(entries.size());
    for (const auto &e : entries) {
        pairs.push_back({read_rgb_png(e.image), read_mask_png(e.mask)});
    }
    return pairs;
}

namespace {

std::vector<std::string> read_split_list(const fs::path &path) {
    std::vector<std::string> names;
    std::ifstream is(path);
    std::string line;
    while (std::getline(is, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
            line.pop_back();
        }
        if (!line.empty()) {
            names.push_back(line);
        }
    }
    return names;
}

} // namespace

PreprocessResult preprocess(const fs::path &src, const fs::path &out, const PreprocessOptions &opts) {
    const fs::path image_dir = src / "images";
    const fs::path mask_dir = src / "masks";
    if (!fs::is_directory(image_dir) || !fs::is_directory(mask_dir)) {
        throw std::runtime_error("preprocess: '" + src.string() +
                                 "' must contain images/ and masks/ directories");
    }
    std::vector<fs::path> images;
    for (const auto &entry : fs::directory_iterator(image_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            images.push_back(entry.path());
        }
    }
    std::sort(images.begin(), images.end());
    if (images.empty()) {
        throw std::runtime_error("preprocess: no .png rasters under '" + image_dir.string() + "'");
    }
    if (opts.val_fraction < 0.0 || opts.test_fraction < 0.0 ||
        opts.val_fraction + opts.test_fraction >= 1.0) {
        throw std::invalid_argument("preprocess: split fractions must be non-negative and sum below 1");
    }

    const fs::path tile_images = out / "tiles" / "images";
    const fs::path tile_masks = out / "tiles" / "masks";
    fs::create_directories(tile_images);
    fs::create_directories(tile_masks);
    fs::create_directories(out / "manifests");

    std::vector<std::pair<std::string, ManifestEntry>> all;
    for (const auto &img_path : images) {
        const std::string stem = img_path.stem().string();
        const fs::path mask_path = mask_dir / (stem + ".png");
        if (!fs::exists(mask_path)) {
            throw std::runtime_error("preprocess: no mask '" + mask_path.string() + "' for '" +
                                     img_path.string() + "'");
        }
        const auto image = read_rgb_png(img_path);
        const auto mask = read_mask_png(mask_path);
        std::size_t k = 0;
        for (const auto &t : tile(image, mask, opts.tile_size)) {
            const std::string name = stem + "_" + std::to_string(k++);
            const fs::path ti = tile_images / (name + ".png");
            const fs::path tm = tile_masks / (name + ".png");
            write_rgb_png(ti, t.pair.image);
            write_mask_png(tm, t.pair.mask);
            // Stored relative to manifests/ so an output tree can be moved or compared.
            all.push_back({name,
                           {"../tiles/images/" + name + ".png", "../tiles/masks/" + name + ".png",
                            opts.tile_size, opts.tile_size}});
        }
    }

    std::map<std::string, std::vector<ManifestEntry>> splits{{"train", {}}, {"val", {}}, {"test", {}}};
    const bool listed = fs::exists(src / "train.txt") || fs::exists(src / "val.txt") ||
                        fs::exists(src / "test.txt");
    if (listed) {
        std::map<std::string, std::string> assignment;
        for (const char *split : {"train", "val", "test"}) {
            for (const auto &name : read_split_list(src / (std::string(split) + ".txt"))) {
                assignment[name] = split;
            }
        }
        for (const auto &[name, entry] : all) {
            const auto it = assignment.find(name);
            if (it != assignment.end()) {
                splits[it->second].push_back(entry);
            }
        }
    } else {
        std::vector<std::size_t> order(all.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        Rng rng(opts.seed);
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.below(i)]);
        }
        const std::size_t n = all.size();
        auto portion = [n](double f) {
            const auto c = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
            return (f > 0.0 && n >= 3) ? std::max<std::size_t>(c, 1) : c;
        };
        const std::size_t n_val = portion(opts.val_fraction);
        const std::size_t n_test = std::min(portion(opts.test_fraction), n - n_val);
        for (std::size_t i = 0; i < n; ++i) {
            const char *split = i < n_val ? "val" : (i < n_val + n_test ? "test" : "train");
            splits[split].push_back(all[order[i]].second);
        }
        // Manifest order follows tile names, not shuffle order.
        for (auto &[split, entries] : splits) {
            std::sort(entries.begin(), entries.end(),
                      [](const ManifestEntry &a, const ManifestEntry &b) { return a.image < b.image; });
        }
    }

    PreprocessResult result;
    result.tiles = all.size();
    for (const auto &[split, entries] : splits) {
        TileManifest m{split, opts.seed, entries};
        const fs::path p = out / "manifests" / (split + ".json");
        m.save(p);
        result.manifests.push_back(p);
    }
    return result;
}

Batch make_batch(std::span<const SegSample> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("make_batch: no samples");
    }
    const auto &shape = samples[0].image.shape();
    const std::size_t per = samples[0].image.numel();
    Batch b{Tensor({samples.size(), shape[0], shape[1], shape[2]}),
            LabelMap(samples.size(), samples[0].mask.height, samples[0].mask.width)};
    auto d = b.images.data_mut();
    const std::size_t plane = samples[0].mask.size();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].image.shape() != shape || samples[i].mask.size() != plane) {
            throw std::invalid_argument("make_batch: samples differ in shape");
        }
        std::copy(samples[i].image.data().begin(), samples[i].image.data().end(),
                  d.begin() + static_cast<std::ptrdiff_t>(i * per));
        std::copy(samples[i].mask.ids.begin(), samples[i].mask.ids.end(),
                  b.masks.ids.begin() + static_cast<std::ptrdiff_t>(i * plane));
    }
    return b;
}

PatchSampler::PatchSampler(std::vector<RasterPair> pairs, std::size_t patch, std::uint64_t seed,
                           std::size_t workers, bool augment)
    : pairs_{std::move(pairs)}, patch_{patch}, augment_{augment} {
    if (pairs_.empty()) {
        throw std::invalid_argument("PatchSampler: no tiles to sample from");
    }
    if (workers == 0) {
        throw std::invalid_argument("PatchSampler: worker count must be positive");
    }
    for (const auto &p : pairs_) {
        if (p.image.width < patch || p.image.height < patch) {
            throw std::invalid_argument("PatchSampler: patch size " + std::to_string(patch) +
                                        " exceeds a " + std::to_string(p.image.width) + "x" +
                                        std::to_string(p.image.height) + " tile");
        }
    }
    for (std::size_t w = 0; w < workers; ++w) {
        streams_.push_back(Rng::stream(seed, w));
    }
}

SegSample PatchSampler::draw(std::size_t worker) {
    Rng &rng = streams_.at(worker);
    const auto &pair = pairs_[rng.below(pairs_.size())];
    SegSample s = sample_patch(pair, patch_, rng);
    return augment_ ? augment(s, rng) : s;
}

Batch PatchSampler::next_batch(std::size_t batch_size) {
    std::vector<SegSample> samples(batch_size);
    const std::size_t workers = streams_.size();
    auto run_worker = [&](std::size_t w) {
        for (std::size_t k = w; k < batch_size; k += workers) {
            samples[k] = draw(w);
        }
    };
    if (workers == 1) {
        run_worker(0);
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
            threads.emplace_back(run_worker, w);
        }
    }
    return make_batch(samples);
}

} // namespace hqunet::data
