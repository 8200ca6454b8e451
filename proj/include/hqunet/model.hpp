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
 * U-Net encoder/decoder with a swappable bottleneck.
 *
 * Widths double per level: stem at C, down blocks at 2C, 4C, ... The
 * bottleneck keeps the deepest width and extent; each up block halves the
 * channels with a 2x2 stride-2 transposed conv, concatenates the encoder
 * skip of the same extent and refines with a DoubleConv.
 */

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqunet/bottleneck.hpp"
#include "hqunet/labels.hpp"
#include "hqunet/nn/modules.hpp"
#include "hqunet/random.hpp"
#include "hqunet/tensor.hpp"

namespace hqunet {

enum class BottleneckKind { Quantum, Classical };

[[nodiscard]] const char *bottleneck_name(BottleneckKind kind);
[[nodiscard]] BottleneckKind parse_bottleneck(const std::string &name);

struct ModelConfig {
    std::size_t in_channels = 3;
    std::size_t num_classes = 5;
    std::size_t base_width = 16;
    std::size_t depth = 4;
    BottleneckKind bottleneck = BottleneckKind::Quantum;
    std::size_t input_size = 64;
    quantum::FilterLayout filter_layout = quantum::FilterLayout::Chain;
    quantum::CircuitGradient circuit_gradient = quantum::CircuitGradient::ParameterShift;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    [[nodiscard]] std::size_t width_at(std::size_t level) const { return base_width << level; }
    [[nodiscard]] std::size_t bottleneck_extent() const { return input_size >> depth; }
    [[nodiscard]] std::size_t required_multiple() const { return std::size_t{1} << depth; }
};

void to_json(nlohmann::json &j, const ModelConfig &cfg);
void from_json(const nlohmann::json &j, ModelConfig &cfg);

class DownBlock : public nn::Module {
  public:
    DownBlock(std::size_t in_channels, std::size_t out_channels, Rng &rng);
    [[nodiscard]] Tensor forward(const Tensor &x);
    std::shared_ptr<nn::DoubleConv> conv;
};

class UpBlock : public nn::Module {
  public:
    UpBlock(std::size_t in_channels, std::size_t out_channels, Rng &rng);
    [[nodiscard]] Tensor forward(const Tensor &x, const Tensor &skip);
    std::shared_ptr<nn::ConvTranspose2x2> up;
    std::shared_ptr<nn::DoubleConv> conv;
};

class HQUNet : public nn::Module {
  public:
    HQUNet(const ModelConfig &cfg, Rng &rng);

    /// x [N, in_channels, H, W] -> logits [N, num_classes, H, W].
    [[nodiscard]] Tensor forward(const Tensor &x);

    [[nodiscard]] const ModelConfig &config() const { return cfg_; }
    /// Quantum bottleneck, or nullptr for the classical variant.
    [[nodiscard]] quantum::QuantumBottleneck *quantum_bottleneck() const { return quantum_.get(); }
    void set_circuit_gradient(quantum::CircuitGradient method);
    /// Encoder output feeding the bottleneck.
    [[nodiscard]] Tensor encode(const Tensor &x, std::vector<Tensor> *skips = nullptr);

    /// (sub-module, trainable scalars) in forward order.
    [[nodiscard]] std::vector<std::pair<std::string, std::size_t>> parameter_breakdown() const;

  private:
    ModelConfig cfg_;
    std::shared_ptr<nn::DoubleConv> stem_;
    std::vector<std::shared_ptr<DownBlock>> downs_;
    std::shared_ptr<quantum::QuantumBottleneck> quantum_;
    std::shared_ptr<nn::DoubleConv> classical_;
    std::vector<std::shared_ptr<UpBlock>> ups_;
    std::shared_ptr<nn::Conv2d> head_;
    std::vector<std::pair<std::string, std::shared_ptr<nn::Module>>> parts_;
};

/// Per-pixel argmax over the class axis; ties go to the lowest class id.
[[nodiscard]] LabelMap predict(const Tensor &logits);

struct ParameterReport {
    std::vector<std::pair<std::string, std::size_t>> modules;
    std::size_t total = 0;
    std::size_t circuit_angles = 0;
    std::size_t bottleneck = 0;
};

[[nodiscard]] ParameterReport count_parameters(const ModelConfig &cfg);

} // namespace hqunet
