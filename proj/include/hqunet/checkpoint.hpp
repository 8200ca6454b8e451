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
 * Binary checkpoint container. Layout (all integers little-endian):
 *
 *     "HQUNETCK" | u32 version | u64 n | n bytes of JSON metadata
 *     u64 count | count x { u32 len | name | u32 ndim | u64 dims[ndim] | f64 values[] }
 *
 * Tensor names carry a prefix: ``param/``, ``buffer/``, ``adam.m/``, ``adam.v/``.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqunet/model.hpp"
#include "hqunet/nn/modules.hpp"
#include "hqunet/optim.hpp"

namespace hqunet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ModelConfig model;
    nlohmann::json train = nlohmann::json::object(); // free-form trainer state
    std::size_t step = 0;
    AdamOptions adam;
    std::vector<nn::NamedTensor> params;
    std::vector<nn::NamedTensor> buffers;
    std::vector<nn::NamedTensor> adam_m; // empty when saved without an optimizer
    std::vector<nn::NamedTensor> adam_v;
};

/// Snapshot of ``model`` (and ``optimizer`` when given). Tensors are deep copies.
[[nodiscard]] Checkpoint capture(const HQUNet &model, const Adam *optimizer,
                                 nlohmann::json train = nlohmann::json::object());

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ck);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path &path);

/// Copies parameters and buffers into ``model``; names and shapes must match.
void restore(HQUNet &model, const Checkpoint &ck);
void restore(Adam &optimizer, const Checkpoint &ck);
[[nodiscard]] std::unique_ptr<HQUNet> model_from_checkpoint(const Checkpoint &ck);

} // namespace hqunet
