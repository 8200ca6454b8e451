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

#include "hqunet/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "hqunet/checkpoint.hpp"
#include "hqunet/nn/functional.hpp"

namespace hqunet {

void TrainConfig::validate() const {
    adam.validate();
    auto positive = [](std::size_t v, const char *field) {
        if (v == 0) {
            throw std::invalid_argument(std::string(field) + ": must be positive");
        }
    };
    positive(batch_size, "train.batch_size");
    positive(steps, "train.steps");
    positive(patch_size, "train.patch_size");
    positive(workers, "train.workers");
    if (!(target_miou >= 0.0 && target_miou <= 1.0)) {
        throw std::invalid_argument("train.target_miou: must lie in [0, 1], got " +
                                    std::to_string(target_miou));
    }
}

void to_json(nlohmann::json &j, const TrainConfig &cfg) {
    j = {{"optimizer", cfg.adam},
         {"batch_size", cfg.batch_size},
         {"steps", cfg.steps},
         {"seed", cfg.seed},
         {"patch_size", cfg.patch_size},
         {"workers", cfg.workers},
         {"augment", cfg.augment},
         {"eval_every", cfg.eval_every},
         {"checkpoint_every", cfg.checkpoint_every},
         {"target_miou", cfg.target_miou},
         {"circuit_gradient", quantum::gradient_name(cfg.circuit_gradient)}};
}

void from_json(const nlohmann::json &j, TrainConfig &cfg) {
    static const char *known[] = {"optimizer",  "batch_size",       "steps",       "seed",
                                  "patch_size", "workers",          "augment",     "eval_every",
                                  "checkpoint_every", "target_miou", "circuit_gradient"};
    for (const auto &[key, value] : j.items()) {
        if (std::find_if(std::begin(known), std::end(known),
                         [&key](const char *k) { return key == k; }) == std::end(known)) {
            throw std::invalid_argument("train." + key + ": unknown field");
        }
    }
    if (j.contains("optimizer")) {
        j.at("optimizer").get_to(cfg.adam);
    }
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.patch_size = j.value("patch_size", cfg.patch_size);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.augment = j.value("augment", cfg.augment);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.target_miou = j.value("target_miou", cfg.target_miou);
    if (j.contains("circuit_gradient")) {
        cfg.circuit_gradient = quantum::parse_gradient(j.at("circuit_gradient").get<std::string>());
    }
}

data::Batch FixedBatchSource::next(std::size_t batch_size) {
    if (batch_size != batch_.masks.batch) {
        throw std::invalid_argument("FixedBatchSource holds " + std::to_string(batch_.masks.batch) +
                                    " samples, asked for " + std::to_string(batch_size));
    }
    return batch_;
}

namespace {

struct EvalModeGuard {
    explicit EvalModeGuard(HQUNet &m) : model{m}, was_training{m.training()} {
        model.set_training(false);
    }
    ~EvalModeGuard() { model.set_training(was_training); }
    HQUNet &model;
    bool was_training;
};

std::string step_name(std::size_t step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%06zu.ckpt", step);
    return buf;
}

} // namespace

TrainResult train(HQUNet &model, BatchSource &source, const TrainConfig &cfg,
                  const TrainHooks &hooks) {
    cfg.validate();
    model.set_circuit_gradient(cfg.circuit_gradient);
    model.set_training(true);
    Adam optimizer(model.named_parameters(), cfg.adam);
    const nlohmann::json train_state = {{"config", cfg}};

    TrainResult result;
    auto save = [&](const std::string &name) {
        if (!hooks.checkpoint_dir) {
            return;
        }
        const auto path = *hooks.checkpoint_dir / name;
        save_checkpoint(path, capture(model, &optimizer, train_state));
        result.checkpoints.push_back(path);
    };

    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        const data::Batch batch = source.next(cfg.batch_size);
        optimizer.zero_grad();
        const Tensor logits = model.forward(batch.images);
        const Tensor loss = nn::softmax_cross_entropy(logits, batch.masks.ids);
        loss.backward();
        optimizer.step();

        const double value = loss.item();
        result.losses.push_back(value);
        if (hooks.log) {
            *hooks.log << nlohmann::json{{"step", step}, {"loss", value}}.dump() << '\n';
        }

        const bool last = step == cfg.steps;
        bool stop = false;
        if (hooks.evaluator && ((cfg.eval_every > 0 && step % cfg.eval_every == 0) || last)) {
            MetricsReport report;
            {
                EvalModeGuard guard(model);
                report = hooks.evaluator(model);
            }
            result.last_eval = report;
            if (hooks.log) {
                auto rec = report.to_json();
                rec["step"] = step;
                rec["split"] = hooks.eval_split;
                *hooks.log << rec.dump() << '\n';
            }
            if (cfg.target_miou > 0.0 && report.miou >= cfg.target_miou) {
                result.reached_at = step;
                stop = true;
            }
        }
        if (hooks.log) {
            hooks.log->flush();
        }
        if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0) {
            save(step_name(step));
        }
        if (stop) {
            break;
        }
    }
    save("last.ckpt");
    return result;
}

ConfusionMatrix evaluate_batch(HQUNet &model, const data::Batch &batch, std::size_t eval_batch) {
    EvalModeGuard guard(model);
    NoGradGuard no_grad;
    ConfusionMatrix cm(model.config().num_classes);
    const auto &shape = batch.images.shape();
    const std::size_t n = shape[0];
    const std::size_t per = shape[1] * shape[2] * shape[3];
    const std::size_t plane = shape[2] * shape[3];
    const auto src = batch.images.data();
    for (std::size_t start = 0; start < n; start += eval_batch) {
        const std::size_t count = std::min(eval_batch, n - start);
        Tensor chunk({count, shape[1], shape[2], shape[3]},
                     std::vector<double>(src.begin() + static_cast<std::ptrdiff_t>(start * per),
                                         src.begin() +
                                             static_cast<std::ptrdiff_t>((start + count) * per)));
        LabelMap truth(count, shape[2], shape[3]);
        std::copy(batch.masks.ids.begin() + static_cast<std::ptrdiff_t>(start * plane),
                  batch.masks.ids.begin() + static_cast<std::ptrdiff_t>((start + count) * plane),
                  truth.ids.begin());
        cm.update(predict(model.forward(chunk)), truth);
    }
    return cm;
}

LabelMap predict_raster(HQUNet &model, const data::RgbImage &image, std::size_t eval_batch) {
    EvalModeGuard guard(model);
    NoGradGuard no_grad;
    const std::size_t win = model.config().input_size;
    const std::size_t cols = (image.width + win - 1) / win;
    const std::size_t rows = (image.height + win - 1) / win;
    const std::size_t windows = rows * cols;
    const std::size_t channels = model.config().in_channels;
    if (channels != 3) {
        throw std::invalid_argument("predict_raster: model expects " + std::to_string(channels) +
                                    " input channels, rasters are RGB");
    }
    LabelMap out(1, image.height, image.width);
    const std::size_t plane = win * win;
    for (std::size_t start = 0; start < windows; start += eval_batch) {
        const std::size_t count = std::min(eval_batch, windows - start);
        Tensor x({count, 3, win, win}); // zero padding outside the raster
        auto d = x.data_mut();
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t oy = ((start + i) / cols) * win;
            const std::size_t ox = ((start + i) % cols) * win;
            for (std::size_t y = 0; y < win && oy + y < image.height; ++y) {
                for (std::size_t xx = 0; xx < win && ox + xx < image.width; ++xx) {
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        d[(i * 3 + ch) * plane + y * win + xx] =
                            image.at(ox + xx, oy + y, ch) / 255.0;
                    }
                }
            }
        }
        const LabelMap pred = predict(model.forward(x));
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t oy = ((start + i) / cols) * win;
            const std::size_t ox = ((start + i) % cols) * win;
            for (std::size_t y = 0; y < win && oy + y < image.height; ++y) {
                for (std::size_t xx = 0; xx < win && ox + xx < image.width; ++xx) {
                    out.at(0, oy + y, ox + xx) = pred.at(i, y, xx);
                }
            }
        }
    }
    return out;
}

ConfusionMatrix evaluate_pairs(HQUNet &model, std::span<const data::RasterPair> pairs,
                               std::size_t eval_batch) {
    ConfusionMatrix cm(model.config().num_classes);
    for (const auto &pair : pairs) {
        cm.update(predict_raster(model, pair.image, eval_batch), pair.mask);
    }
    return cm;
}

std::filesystem::path infer(HQUNet &model, const std::filesystem::path &image,
                            std::optional<std::filesystem::path> out) {
    const auto raster = data::read_rgb_png(image);
    const std::filesystem::path target =
        out ? *out : image.parent_path() / (image.stem().string() + "_mask.png");
    data::write_mask_png(target, predict_raster(model, raster));
    return target;
}

} // namespace hqunet
