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
 * Training loop, sliding-window evaluation and raster inference.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqunet/bottleneck.hpp"
#include "hqunet/data/pipeline.hpp"
#include "hqunet/metrics.hpp"
#include "hqunet/model.hpp"
#include "hqunet/optim.hpp"

namespace hqunet {

struct TrainConfig {
    AdamOptions adam;
    std::size_t batch_size = 8;
    std::size_t steps = 500;
    std::uint64_t seed = 0;
    std::size_t patch_size = 64;
    std::size_t workers = 1;
    bool augment = true;
    std::size_t eval_every = 50;       // 0: evaluate only after the last step
    std::size_t checkpoint_every = 0;  // 0: only the final checkpoint
    /// Stop after the first evaluation reaching this mIoU (0 disables).
    double target_miou = 0.0;
    /// Circuit differentiation used while training. Both methods give the
    /// same gradient; adjoint is much cheaper.
    quantum::CircuitGradient circuit_gradient = quantum::CircuitGradient::Adjoint;

    void validate() const;
};

void to_json(nlohmann::json &j, const TrainConfig &cfg);
void from_json(const nlohmann::json &j, TrainConfig &cfg);

class BatchSource {
  public:
    virtual ~BatchSource() = default;
    [[nodiscard]] virtual data::Batch next(std::size_t batch_size) = 0;
};

/// The same batch every step (overfitting runs, tests).
class FixedBatchSource : public BatchSource {
  public:
    explicit FixedBatchSource(data::Batch batch) : batch_{std::move(batch)} {}
    [[nodiscard]] data::Batch next(std::size_t batch_size) override;

  private:
    data::Batch batch_;
};

class SamplerBatchSource : public BatchSource {
  public:
    explicit SamplerBatchSource(data::PatchSampler sampler) : sampler_{std::move(sampler)} {}
    [[nodiscard]] data::Batch next(std::size_t batch_size) override {
        return sampler_.next_batch(batch_size);
    }

  private:
    data::PatchSampler sampler_;
};

/// Scores the model; called in eval mode, training mode is restored after.
using Evaluator = std::function<MetricsReport(HQUNet &)>;

struct TrainHooks {
    std::ostream *log = nullptr;              // JSON lines
    std::optional<std::filesystem::path> checkpoint_dir;
    Evaluator evaluator;                      // periodic scoring, optional
    std::string eval_split = "val";
};

struct TrainResult {
    std::vector<double> losses;
    std::optional<MetricsReport> last_eval;
    /// First step whose evaluation met ``target_miou`` (0 if never).
    std::size_t reached_at = 0;
    std::vector<std::filesystem::path> checkpoints;
};

/// Adam on pixel-mean cross entropy. Logs ``{"step", "loss"}`` per step and
/// ``{"step", "split", "mIoU", "OA%", "per_class_IoU"}`` per evaluation.
/// Checkpoints go to ``step_<n>.ckpt`` and ``last.ckpt``.
TrainResult train(HQUNet &model, BatchSource &source, const TrainConfig &cfg,
                  const TrainHooks &hooks = {});

/// Confusion matrix of the model's predictions on a batch (eval mode).
[[nodiscard]] ConfusionMatrix evaluate_batch(HQUNet &model, const data::Batch &batch,
                                             std::size_t eval_batch = 8);

/// Predicts a full raster by non-overlapping windows of the model input
/// size; the raster is zero-padded up to a whole number of windows.
[[nodiscard]] LabelMap predict_raster(HQUNet &model, const data::RgbImage &image,
                                      std::size_t eval_batch = 8);

/// One confusion matrix over every pair.
[[nodiscard]] ConfusionMatrix evaluate_pairs(HQUNet &model,
                                             std::span<const data::RasterPair> pairs,
                                             std::size_t eval_batch = 8);

/// Writes a paletted mask; defaults to ``<stem>_mask.png`` beside the image.
std::filesystem::path infer(HQUNet &model, const std::filesystem::path &image,
                            std::optional<std::filesystem::path> out = std::nullopt);

} // namespace hqunet
