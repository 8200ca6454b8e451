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

#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hqunet/bottleneck.hpp"
#include "hqunet/checkpoint.hpp"
#include "hqunet/data/pipeline.hpp"
#include "hqunet/data/raster.hpp"
#include "hqunet/data/synthetic.hpp"
#include "hqunet/gradcheck.hpp"
#include "hqunet/metrics.hpp"
#include "hqunet/model.hpp"
#include "hqunet/nn/functional.hpp"
#include "hqunet/ops.hpp"
#include "hqunet/qsim/circuit.hpp"
#include "hqunet/trainer.hpp"

namespace hqunet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct DataConfig {
    std::string src_dir;
    std::size_t tile_size = data::kDefaultTileSize;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
    std::string train_manifest; // default <out>/manifests/train.json
    std::string val_manifest;   // default <out>/manifests/val.json when present
};

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    DataConfig data;
    std::uint64_t seed = 0;
    std::string out_dir;
    bool patch_size_set = false;
};

/// Flag values; unset optionals leave the config file (or default) in place.
struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> workers;
    // model
    std::optional<std::string> bottleneck;
    std::optional<std::size_t> base_width;
    std::optional<std::size_t> depth;
    std::optional<std::size_t> input_size;
    std::optional<std::size_t> num_classes;
    std::optional<std::string> filter_layout;
    std::optional<std::string> circuit_gradient;
    // train
    std::optional<std::size_t> steps;
    std::optional<std::size_t> batch_size;
    std::optional<double> lr;
    std::optional<std::size_t> patch_size;
    std::optional<std::size_t> eval_every;
    std::optional<std::size_t> checkpoint_every;
    std::optional<double> target_miou;
    std::optional<bool> augment;
    // data
    std::optional<std::string> src_dir;
    std::optional<std::size_t> tile_size;
    std::optional<double> val_fraction;
    std::optional<double> test_fraction;
    std::optional<std::string> train_manifest;
    std::optional<std::string> val_manifest;
};

void add_common(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "Seed for every random choice");
    cmd->add_option("--out-dir", o.out_dir, "Artifact root");
}

void add_model(CLI::App *cmd, Overrides &o) {
    cmd->add_option("--bottleneck", o.bottleneck, "quantum | classical");
    cmd->add_option("--base-width", o.base_width, "Stem width C");
    cmd->add_option("--depth", o.depth, "Number of down/up blocks");
    cmd->add_option("--input-size", o.input_size, "Square model input extent");
    cmd->add_option("--num-classes", o.num_classes, "Output classes");
    cmd->add_option("--filter-layout", o.filter_layout, "chain | tile");
    cmd->add_option("--circuit-gradient", o.circuit_gradient, "parameter-shift | adjoint");
}

json read_json(const fs::path &path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot read '" + path.string() + "'");
    }
    try {
        return json::parse(is);
    } catch (const json::exception &e) {
        throw std::runtime_error("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const fs::path &path, const json &j) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    os << j.dump(2) << '\n';
}

void data_from_json(const json &j, DataConfig &d) {
    for (const auto &[key, value] : j.items()) {
        if (key != "src_dir" && key != "tile_size" && key != "val_fraction" &&
            key != "test_fraction" && key != "train_manifest" && key != "val_manifest") {
            throw std::invalid_argument("data." + key + ": unknown field");
        }
    }
    d.src_dir = j.value("src_dir", d.src_dir);
    d.tile_size = j.value("tile_size", d.tile_size);
    d.val_fraction = j.value("val_fraction", d.val_fraction);
    d.test_fraction = j.value("test_fraction", d.test_fraction);
    d.train_manifest = j.value("train_manifest", d.train_manifest);
    d.val_manifest = j.value("val_manifest", d.val_manifest);
}

json data_to_json(const DataConfig &d) {
    return {{"src_dir", d.src_dir},
            {"tile_size", d.tile_size},
            {"val_fraction", d.val_fraction},
            {"test_fraction", d.test_fraction},
            {"train_manifest", d.train_manifest},
            {"val_manifest", d.val_manifest}};
}

RunConfig resolve(const Overrides &o) {
    RunConfig rc;
    if (!o.config.empty()) {
        const json j = read_json(o.config);
        if (!j.is_object()) {
            throw std::invalid_argument("config: top level must be an object");
        }
        for (const auto &[key, value] : j.items()) {
            if (key == "model") {
                value.get_to(rc.model);
            } else if (key == "train") {
                value.get_to(rc.train);
                rc.patch_size_set = value.contains("patch_size");
            } else if (key == "data") {
                data_from_json(value, rc.data);
            } else if (key == "seed") {
                rc.seed = value.get<std::uint64_t>();
            } else if (key == "out_dir") {
                rc.out_dir = value.get<std::string>();
            } else {
                throw std::invalid_argument("config." + key + ": unknown field");
            }
        }
    }
    auto set = [](const auto &flag, auto &field) {
        if (flag) {
            field = *flag;
        }
    };
    set(o.seed, rc.seed);
    set(o.out_dir, rc.out_dir);
    set(o.workers, rc.train.workers);
    if (o.bottleneck) {
        rc.model.bottleneck = parse_bottleneck(*o.bottleneck);
    }
    set(o.base_width, rc.model.base_width);
    set(o.depth, rc.model.depth);
    set(o.input_size, rc.model.input_size);
    set(o.num_classes, rc.model.num_classes);
    if (o.filter_layout) {
        rc.model.filter_layout = quantum::parse_layout(*o.filter_layout);
    }
    if (o.circuit_gradient) {
        rc.train.circuit_gradient = quantum::parse_gradient(*o.circuit_gradient);
    }
    set(o.steps, rc.train.steps);
    set(o.batch_size, rc.train.batch_size);
    set(o.lr, rc.train.adam.lr);
    if (o.patch_size) {
        rc.train.patch_size = *o.patch_size;
        rc.patch_size_set = true;
    }
    set(o.eval_every, rc.train.eval_every);
    set(o.checkpoint_every, rc.train.checkpoint_every);
    set(o.target_miou, rc.train.target_miou);
    set(o.augment, rc.train.augment);
    set(o.src_dir, rc.data.src_dir);
    set(o.tile_size, rc.data.tile_size);
    set(o.val_fraction, rc.data.val_fraction);
    set(o.test_fraction, rc.data.test_fraction);
    set(o.train_manifest, rc.data.train_manifest);
    set(o.val_manifest, rc.data.val_manifest);

    rc.train.seed = rc.seed;
    if (!rc.patch_size_set) {
        rc.train.patch_size = rc.model.input_size;
    }
    rc.model.validate();
    rc.train.validate();
    return rc;
}

json run_config_json(const RunConfig &rc) {
    return {{"model", rc.model},
            {"train", rc.train},
            {"data", data_to_json(rc.data)},
            {"seed", rc.seed}};
}

fs::path require_out_dir(const RunConfig &rc) {
    if (rc.out_dir.empty()) {
        throw std::invalid_argument("out_dir: required (--out-dir or config out_dir)");
    }
    return rc.out_dir;
}

void require_file(const fs::path &p, const std::string &what) {
    if (!fs::is_regular_file(p)) {
        throw std::runtime_error(what + " '" + p.string() + "' does not exist");
    }
}

// ---------------------------------------------------------------- commands

int cmd_preprocess(const RunConfig &rc, std::ostream &out) {
    if (rc.data.src_dir.empty()) {
        throw std::invalid_argument("data.src_dir: required (--src-dir)");
    }
    const fs::path dst = require_out_dir(rc);
    data::PreprocessOptions opts;
    opts.tile_size = rc.data.tile_size;
    opts.seed = rc.seed;
    opts.val_fraction = rc.data.val_fraction;
    opts.test_fraction = rc.data.test_fraction;
    const auto result = data::preprocess(rc.data.src_dir, dst, opts);
    out << "wrote " << result.tiles << " tile pairs to " << (dst / "tiles").string() << '\n';
    for (const auto &m : result.manifests) {
        out << "manifest " << m.string() << " (" << data::TileManifest::load(m).entries.size()
            << " entries)\n";
    }
    return 0;
}

int cmd_synth(const fs::path &dst, std::size_t count, std::size_t size, std::uint64_t seed,
              int noise, std::ostream &out) {
    if (count == 0 || size == 0) {
        throw std::invalid_argument("synth: --count and --size must be positive");
    }
    if (noise < 0 || noise > 255) {
        throw std::invalid_argument("synth: --noise must be in [0, 255]");
    }
    fs::create_directories(dst / "images");
    fs::create_directories(dst / "masks");
    const auto scenes = data::synthetic_scenes(count, size, seed, noise);
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03zu.png", i);
        data::write_rgb_png(dst / "images" / name, scenes[i].image);
        data::write_mask_png(dst / "masks" / name, scenes[i].mask);
    }
    out << "wrote " << count << " synthetic " << size << "x" << size << " scenes to "
        << dst.string() << '\n';
    return 0;
}

int cmd_train(const RunConfig &rc, std::ostream &out) {
    const fs::path dst = require_out_dir(rc);
    if (rc.model.bottleneck == BottleneckKind::Quantum &&
        rc.train.patch_size != rc.model.input_size) {
        throw std::invalid_argument("train.patch_size: must equal model.input_size (" +
                                    std::to_string(rc.model.input_size) +
                                    ") with the quantum bottleneck");
    }
    if (rc.train.patch_size % rc.model.required_multiple() != 0) {
        throw std::invalid_argument("train.patch_size: " + std::to_string(rc.train.patch_size) +
                                    " is not a multiple of " +
                                    std::to_string(rc.model.required_multiple()));
    }
    const fs::path train_manifest = rc.data.train_manifest.empty()
                                        ? dst / "manifests" / "train.json"
                                        : fs::path(rc.data.train_manifest);
    require_file(train_manifest, "train manifest");
    fs::path val_manifest = rc.data.val_manifest;
    if (val_manifest.empty() && fs::is_regular_file(dst / "manifests" / "val.json")) {
        val_manifest = dst / "manifests" / "val.json";
    }
    if (!val_manifest.empty()) {
        require_file(val_manifest, "validation manifest");
    }

    auto train_pairs = data::TileManifest::load(train_manifest).load_pairs();
    if (train_pairs.empty()) {
        throw std::runtime_error("train manifest '" + train_manifest.string() + "' lists no tiles");
    }
    std::vector<data::RasterPair> val_pairs;
    if (!val_manifest.empty()) {
        val_pairs = data::TileManifest::load(val_manifest).load_pairs();
    }

    write_json(dst / "reports" / "run_config.json", run_config_json(rc));
    fs::create_directories(dst / "logs");
    std::ofstream log(dst / "logs" / "train.jsonl", std::ios::trunc);
    if (!log) {
        throw std::runtime_error("cannot write '" + (dst / "logs" / "train.jsonl").string() + "'");
    }

    Rng init(rc.seed);
    HQUNet model(rc.model, init);
    SamplerBatchSource source(data::PatchSampler(std::move(train_pairs), rc.train.patch_size,
                                                 rc.seed, rc.train.workers, rc.train.augment));
    TrainHooks hooks;
    hooks.log = &log;
    hooks.checkpoint_dir = dst / "checkpoints";
    if (!val_pairs.empty()) {
        hooks.evaluator = [&val_pairs](HQUNet &m) {
            return MetricsReport::from(evaluate_pairs(m, val_pairs));
        };
    }
    const auto result = train(model, source, rc.train, hooks);
    out << "trained " << bottleneck_name(rc.model.bottleneck) << " model for "
        << result.losses.size() << " steps, final loss " << std::setprecision(6)
        << result.losses.back() << '\n';
    if (result.last_eval) {
        out << "val mIoU " << std::fixed << std::setprecision(4) << result.last_eval->miou
            << "  OA% " << std::setprecision(2) << result.last_eval->oa_percent << '\n';
    }
    out << "checkpoint " << result.checkpoints.back().string() << '\n';
    return 0;
}

int cmd_eval(const fs::path &checkpoint, const fs::path &manifest, const std::string &out_dir,
             std::ostream &out) {
    require_file(checkpoint, "checkpoint");
    require_file(manifest, "manifest");
    const auto ck = load_checkpoint(checkpoint);
    auto model = model_from_checkpoint(ck);
    const auto m = data::TileManifest::load(manifest);
    const auto pairs = m.load_pairs();
    if (pairs.empty()) {
        throw std::runtime_error("manifest '" + manifest.string() + "' lists no tiles");
    }
    const auto report = MetricsReport::from(evaluate_pairs(*model, pairs));
    std::vector<std::string> names(data::kClassNames.begin(), data::kClassNames.end());
    out << report.table(names);
    if (!out_dir.empty()) {
        auto j = report.to_json();
        j["split"] = m.split;
        j["step"] = ck.step;
        write_json(fs::path(out_dir) / "reports" / ("eval_" + m.split + ".json"), j);
    }
    return 0;
}

int cmd_infer(const fs::path &checkpoint, const std::vector<std::string> &images,
              const std::string &output, std::ostream &out) {
    require_file(checkpoint, "checkpoint");
    if (images.empty()) {
        throw std::invalid_argument("infer: at least one --image is required");
    }
    if (!output.empty() && images.size() != 1) {
        throw std::invalid_argument("infer: --output needs exactly one --image");
    }
    for (const auto &img : images) {
        require_file(img, "image");
    }
    const auto ck = load_checkpoint(checkpoint);
    auto model = model_from_checkpoint(ck);
    for (const auto &img : images) {
        const auto path =
            infer(*model, img, output.empty() ? std::nullopt : std::optional<fs::path>(output));
        out << "wrote " << path.string() << '\n';
    }
    return 0;
}

int cmd_inspect(const RunConfig &rc, const std::string &checkpoint, const std::string &patch,
                bool zero_angles, std::ostream &out) {
    std::unique_ptr<HQUNet> model;
    if (!checkpoint.empty()) {
        require_file(checkpoint, "checkpoint");
        model = model_from_checkpoint(load_checkpoint(checkpoint));
    } else {
        Rng init(rc.seed);
        model = std::make_unique<HQUNet>(rc.model, init);
    }
    auto *qb = model->quantum_bottleneck();
    if (!qb) {
        throw std::invalid_argument("model.bottleneck: inspect-circuit needs the quantum bottleneck");
    }
    const std::size_t size = model->config().input_size;
    Tensor x({1, model->config().in_channels, size, size});
    if (!patch.empty() && patch != "zero") {
        const auto img = data::read_rgb_png(patch);
        if (img.width != size || img.height != size) {
            throw std::invalid_argument("input patch '" + patch + "' is " +
                                        std::to_string(img.width) + "x" +
                                        std::to_string(img.height) + ", the model takes " +
                                        std::to_string(size) + "x" + std::to_string(size));
        }
        x = data::crop({img, LabelMap(1, size, size)}, 0, 0, size).image;
        x = reshape(x, {1, 3, size, size});
    }
    model->set_training(false);
    NoGradGuard no_grad;
    const Tensor features = qb->pre_q(model->encode(x));
    const auto angles = zero_angles ? quantum::QuanvAngles{} : qb->angles();
    out << quantum::describe_circuit(features.data(), angles, model->config().filter_layout);
    return 0;
}

// --------------------------------------------------------------- grad-check

struct ScopeReport {
    bool pass = false;
    std::string summary;
};

ScopeReport check_qsim(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> features(quantum::kEncodingAngles);
    for (auto &f : features) {
        f = rng.uniform(-1.0, 1.0);
    }
    std::array<double, quantum::kCircuitAngles> flat{};
    for (auto &a : flat) {
        a = rng.uniform(-std::numbers::pi, std::numbers::pi);
    }
    const auto angles = quantum::QuanvAngles::from_flat(flat);
    qsim::Circuit circuit = quantum::build_circuit(features, angles);
    std::vector<qsim::Observable> obs;
    for (auto basis : {qsim::Basis::Z, qsim::Basis::X}) {
        for (std::size_t q = 0; q < quantum::kNumQubits; ++q) {
            obs.push_back({basis, q});
        }
    }
    std::vector<double> params(circuit.num_params());
    for (std::size_t i = 0; i < quantum::kEncodingAngles; ++i) {
        params[i] = std::numbers::pi * features[i];
    }
    std::copy(flat.begin(), flat.end(), params.begin() + quantum::kEncodingAngles);

    constexpr double h = 1e-6;
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const auto shift = qsim::parameter_shift_param_grad(circuit, obs, p);
        auto shifted = params;
        shifted[p] = params[p] + h;
        qsim::Circuit c = circuit;
        c.bind(shifted);
        const auto up = qsim::expectations(c.run(), obs);
        shifted[p] = params[p] - h;
        c.bind(shifted);
        const auto down = qsim::expectations(c.run(), obs);
        for (std::size_t k = 0; k < obs.size(); ++k) {
            worst = std::max(worst, std::abs(shift[k] - (up[k] - down[k]) / (2 * h)));
        }
    }
    std::ostringstream os;
    os << params.size() << " parameters x " << obs.size()
       << " observables, parameter shift vs finite differences: max abs err " << std::scientific
       << std::setprecision(3) << worst << " (limit 1e-06)";
    return {worst < 1e-6, os.str()};
}

std::string describe(const GradCheckResult &r) {
    std::ostringstream os;
    os << r.checked << " gradients, " << r.failures << " outside tolerance, max rel err "
       << std::scientific << std::setprecision(3) << r.max_rel_err << ", max abs err "
       << r.max_abs_err;
    if (!r.worst.empty()) {
        os << " (worst " << r.worst << ")";
    }
    return os.str();
}

ScopeReport check_bottleneck(std::uint64_t seed) {
    Rng rng(seed);
    constexpr std::size_t channels = 2;
    quantum::QuantumBottleneck qb(channels, quantum::kGrid, quantum::kGrid, rng,
                                  {quantum::FilterLayout::Chain,
                                   quantum::CircuitGradient::ParameterShift});
    Tensor x({2, channels, quantum::kGrid, quantum::kGrid});
    for (auto &v : x.data_mut()) {
        v = rng.normal();
    }
    x.set_requires_grad(true);
    Tensor w(x.shape());
    for (auto &v : w.data_mut()) {
        v = rng.normal();
    }
    auto params = qb.named_parameters();
    params.push_back({"input", x});
    const auto r = check_gradients([&] { return hqunet::sum(hqunet::mul(qb.forward(x), w)); }, params);
    return {r.passed(), describe(r)};
}

ScopeReport check_model(std::uint64_t seed) {
    Rng rng(seed);
    ModelConfig cfg;
    cfg.base_width = 2;
    cfg.depth = 2;
    cfg.input_size = 16;
    cfg.circuit_gradient = quantum::CircuitGradient::ParameterShift;
    HQUNet model(cfg, rng);
    // Random biases and BN affine terms so no gradient is trivially zero.
    for (auto &p : model.named_parameters()) {
        if (p.tensor.ndim() == 1 && p.name.find("circuit_angles") == std::string::npos) {
            Tensor t = p.tensor;
            for (auto &v : t.data_mut()) {
                v += 0.1 * rng.normal();
            }
        }
    }
    Tensor x({2, 3, 16, 16});
    for (auto &v : x.data_mut()) {
        v = rng.uniform();
    }
    std::vector<std::uint8_t> targets(2 * 16 * 16);
    for (auto &t : targets) {
        t = static_cast<std::uint8_t>(rng.below(cfg.num_classes));
    }
    model.set_training(true);
    const auto r = check_gradients(
        [&] { return nn::softmax_cross_entropy(model.forward(x), targets); },
        model.named_parameters());
    return {r.passed(), describe(r)};
}

// --------------------------------------------------------------- param-count

int cmd_param_count(const RunConfig &rc, std::ostream &out) {
    const auto report = count_parameters(rc.model);
    ModelConfig other = rc.model;
    other.bottleneck = rc.model.bottleneck == BottleneckKind::Quantum ? BottleneckKind::Classical
                                                                      : BottleneckKind::Quantum;
    const auto alt = count_parameters(other);
    const auto &q = rc.model.bottleneck == BottleneckKind::Quantum ? report : alt;
    const auto &c = rc.model.bottleneck == BottleneckKind::Quantum ? alt : report;

    out << std::left << std::setw(28) << "module" << "parameters\n";
    for (const auto &[name, n] : report.modules) {
        out << std::setw(28) << name << n << '\n';
    }
    out << std::setw(28) << "total" << report.total << '\n';
    out << std::setw(28) << "circuit angles" << report.circuit_angles << "\n\n";
    out << std::setw(28) << "bottleneck comparison" << "quantum    classical\n";
    out << std::setw(28) << "bottleneck" << std::setw(11) << q.bottleneck << c.bottleneck << '\n';
    out << std::setw(28) << "whole model" << std::setw(11) << q.total << c.total << '\n';

    if (!rc.out_dir.empty()) {
        json modules = json::array();
        for (const auto &[name, n] : report.modules) {
            modules.push_back({{"module", name}, {"parameters", n}});
        }
        write_json(fs::path(rc.out_dir) / "reports" / "param_count.json",
                   {{"model", rc.model},
                    {"modules", modules},
                    {"total", report.total},
                    {"circuit_angles", report.circuit_angles},
                    {"comparison",
                     {{"quantum", {{"bottleneck", q.bottleneck}, {"total", q.total}}},
                      {"classical", {{"bottleneck", c.bottleneck}, {"total", c.total}}}}}});
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Hybrid quantum-classical U-Net for land-cover segmentation", "hqunet"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");
    Overrides o;

    auto *pre = app.add_subcommand("preprocess", "Tile rasters and write split manifests");
    add_common(pre, o);
    pre->add_option("--src-dir", o.src_dir, "Directory with images/ and masks/");
    pre->add_option("--tile-size", o.tile_size, "Tile extent in pixels");
    pre->add_option("--val-fraction", o.val_fraction, "Validation share without split files");
    pre->add_option("--test-fraction", o.test_fraction, "Test share without split files");

    std::size_t synth_count = 4;
    std::size_t synth_size = 1024;
    int synth_noise = 24;
    auto *syn = app.add_subcommand("synth", "Write synthetic image/mask rasters");
    syn->add_option("--seed", o.seed, "Scene seed");
    syn->add_option("--out-dir", o.out_dir, "Destination (gets images/ and masks/)")->required();
    syn->add_option("--count", synth_count, "Number of scenes");
    syn->add_option("--size", synth_size, "Square scene extent");
    syn->add_option("--noise", synth_noise, "Per-channel colour jitter amplitude");

    auto *tr = app.add_subcommand("train", "Train a model on a tile manifest");
    add_common(tr, o);
    add_model(tr, o);
    tr->add_option("--workers", o.workers, "Data worker threads");
    tr->add_option("--steps", o.steps, "Optimizer steps");
    tr->add_option("--batch-size", o.batch_size, "Patches per step");
    tr->add_option("--lr", o.lr, "Adam learning rate");
    tr->add_option("--patch-size", o.patch_size, "Training patch extent");
    tr->add_option("--eval-every", o.eval_every, "Validation cadence in steps");
    tr->add_option("--checkpoint-every", o.checkpoint_every, "Checkpoint cadence in steps");
    tr->add_option("--target-miou", o.target_miou, "Stop once validation mIoU reaches this");
    tr->add_option("--augment", o.augment, "Dihedral augmentation (true/false)");
    tr->add_option("--train-manifest", o.train_manifest, "Defaults to <out>/manifests/train.json");
    tr->add_option("--val-manifest", o.val_manifest, "Defaults to <out>/manifests/val.json");

    std::string checkpoint;
    std::string manifest;
    std::string split = "test";
    auto *ev = app.add_subcommand("eval", "Score a checkpoint on a split");
    ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    ev->add_option("--manifest", manifest, "Manifest file");
    ev->add_option("--split", split, "Split under <out>/manifests when --manifest is absent");
    ev->add_option("--out-dir", o.out_dir, "Writes reports/eval_<split>.json");

    std::vector<std::string> images;
    std::string output;
    auto *inf = app.add_subcommand("infer", "Predict paletted masks for images");
    inf->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    inf->add_option("--image", images, "Input RGB PNG (repeatable)")->required();
    inf->add_option("--output", output, "Mask path (default <stem>_mask.png beside the image)");

    std::string input_patch;
    bool zero_angles = false;
    auto *ins = app.add_subcommand("inspect-circuit", "Dump the bottleneck circuit for a patch");
    add_common(ins, o);
    add_model(ins, o);
    ins->add_option("--input-patch", input_patch, "RGB PNG of the model input size, or 'zero'");
    ins->add_option("--checkpoint", checkpoint, "Use trained weights");
    ins->add_flag("--zero-angles", zero_angles, "Set all 8 circuit angles to zero");

    std::string scope = "qsim";
    auto *gc = app.add_subcommand("grad-check", "Compare analytic and numeric gradients");
    gc->add_option("--scope", scope, "qsim | bottleneck | model")
        ->check(CLI::IsMember({"qsim", "bottleneck", "model"}));
    gc->add_option("--seed", o.seed, "Seed for the random instance");

    auto *pc = app.add_subcommand("param-count", "Trainable parameters per sub-module");
    add_common(pc, o);
    add_model(pc, o);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "hqunet: " << e.what() << '\n';
        return 2;
    }

    try {
        if (pre->parsed()) {
            return cmd_preprocess(resolve(o), out);
        }
        if (syn->parsed()) {
            return cmd_synth(o.out_dir.value_or(""), synth_count, synth_size, o.seed.value_or(0),
                             synth_noise, out);
        }
        if (tr->parsed()) {
            return cmd_train(resolve(o), out);
        }
        if (ev->parsed()) {
            fs::path m = manifest;
            if (m.empty()) {
                if (!o.out_dir) {
                    throw std::invalid_argument("eval: give --manifest or --out-dir with --split");
                }
                m = fs::path(*o.out_dir) / "manifests" / (split + ".json");
            }
            return cmd_eval(checkpoint, m, o.out_dir.value_or(""), out);
        }
        if (inf->parsed()) {
            return cmd_infer(checkpoint, images, output, out);
        }
        if (ins->parsed()) {
            return cmd_inspect(resolve(o), checkpoint, input_patch, zero_angles, out);
        }
        if (gc->parsed()) {
            const std::uint64_t seed = o.seed.value_or(0);
            const ScopeReport r = scope == "qsim"         ? check_qsim(seed)
                                  : scope == "bottleneck" ? check_bottleneck(seed)
                                                          : check_model(seed);
            out << (r.pass ? "PASS" : "FAIL") << " grad-check " << scope << ": " << r.summary
                << '\n';
            return r.pass ? 0 : 1;
        }
        if (pc->parsed()) {
            return cmd_param_count(resolve(o), out);
        }
    } catch (const std::exception &e) {
        err << "hqunet: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace hqunet::cli
