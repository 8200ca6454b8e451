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

#include "hqunet/model.hpp"

#include <stdexcept>

#include "hqunet/nn/functional.hpp"

namespace hqunet {

const char *bottleneck_name(BottleneckKind kind) {
    return kind == BottleneckKind::Quantum ? "quantum" : "classical";
}

BottleneckKind parse_bottleneck(const std::string &name) {
    if (name == "quantum") {
        return BottleneckKind::Quantum;
    }
    if (name == "classical") {
        return BottleneckKind::Classical;
    }
    throw std::invalid_argument("bottleneck: unknown kind '" + name +
                                "' (expected quantum or classical)");
}

void ModelConfig::validate() const {
    auto fail = [](const std::string &field, const std::string &why) {
        throw std::invalid_argument("model." + field + ": " + why);
    };
    if (in_channels == 0) {
        fail("in_channels", "must be positive");
    }
    if (num_classes == 0 || num_classes > 255) {
        fail("num_classes", "must be in [1, 255]");
    }
    if (base_width == 0) {
        fail("base_width", "must be positive");
    }
    if (depth == 0 || depth > 8) {
        fail("depth", "must be in [1, 8]");
    }
    if (input_size == 0 || input_size % required_multiple() != 0) {
        fail("input_size", std::to_string(input_size) + " is not a multiple of " +
                               std::to_string(required_multiple()) + " (2^depth)");
    }
    if (bottleneck_extent() < quantum::kGrid) {
        fail("input_size", std::to_string(input_size) + " gives a " +
                               std::to_string(bottleneck_extent()) +
                               "-pixel bottleneck; at least 4 is required");
    }
}

void to_json(nlohmann::json &j, const ModelConfig &cfg) {
    j = nlohmann::json{{"in_channels", cfg.in_channels},
                       {"num_classes", cfg.num_classes},
                       {"base_width", cfg.base_width},
                       {"depth", cfg.depth},
                       {"bottleneck", bottleneck_name(cfg.bottleneck)},
                       {"input_size", cfg.input_size},
                       {"filter_layout", quantum::layout_name(cfg.filter_layout)},
                       {"circuit_gradient", quantum::gradient_name(cfg.circuit_gradient)}};
}

void from_json(const nlohmann::json &j, ModelConfig &cfg) {
    auto get = [&j](const char *key, auto &field) {
        if (j.contains(key)) {
            try {
                j.at(key).get_to(field);
            } catch (const nlohmann::json::exception &e) {
                throw std::invalid_argument(std::string("model.") + key + ": " + e.what());
            }
        }
    };
    get("in_channels", cfg.in_channels);
    get("num_classes", cfg.num_classes);
    get("base_width", cfg.base_width);
    get("depth", cfg.depth);
    get("input_size", cfg.input_size);
    std::string text;
    if (j.contains("bottleneck")) {
        get("bottleneck", text);
        cfg.bottleneck = parse_bottleneck(text);
    }
    if (j.contains("filter_layout")) {
        get("filter_layout", text);
        cfg.filter_layout = quantum::parse_layout(text);
    }
    if (j.contains("circuit_gradient")) {
        get("circuit_gradient", text);
        cfg.circuit_gradient = quantum::parse_gradient(text);
    }
}

DownBlock::DownBlock(std::size_t in_channels, std::size_t out_channels, Rng &rng) {
    conv = register_module("conv", std::make_shared<nn::DoubleConv>(in_channels, out_channels, rng));
}

Tensor DownBlock::forward(const Tensor &x) { return conv->forward(nn::max_pool_2x2(x)); }

UpBlock::UpBlock(std::size_t in_channels, std::size_t out_channels, Rng &rng) {
    up = register_module("up", std::make_shared<nn::ConvTranspose2x2>(in_channels, in_channels / 2, rng));
    conv = register_module("conv", std::make_shared<nn::DoubleConv>(in_channels, out_channels, rng));
}

Tensor UpBlock::forward(const Tensor &x, const Tensor &skip) {
    Tensor upsampled = up->forward(x);
    if (upsampled.dim(2) != skip.dim(2) || upsampled.dim(3) != skip.dim(3)) {
        throw std::logic_error("UpBlock: upsampled extent " + shape_str(upsampled.shape()) +
                               " does not match skip " + shape_str(skip.shape()));
    }
    return conv->forward(nn::concat_channels({upsampled, skip}));
}

HQUNet::HQUNet(const ModelConfig &cfg, Rng &rng) : cfg_{cfg} {
    cfg_.validate();
    auto add = [this](const std::string &name, auto module) {
        parts_.emplace_back(name, module);
        return register_module(name, module);
    };
    stem_ = add("stem", std::make_shared<nn::DoubleConv>(cfg_.in_channels, cfg_.width_at(0), rng));
    for (std::size_t l = 0; l < cfg_.depth; ++l) {
        downs_.push_back(add("down" + std::to_string(l + 1),
                             std::make_shared<DownBlock>(cfg_.width_at(l), cfg_.width_at(l + 1), rng)));
    }
    const std::size_t deep = cfg_.width_at(cfg_.depth);
    const std::size_t extent = cfg_.bottleneck_extent();
    if (cfg_.bottleneck == BottleneckKind::Quantum) {
        quantum_ = add("bottleneck", std::make_shared<quantum::QuantumBottleneck>(
                                         deep, extent, extent, rng,
                                         quantum::BottleneckOptions{cfg_.filter_layout,
                                                                    cfg_.circuit_gradient}));
    } else {
        classical_ = add("bottleneck", std::make_shared<nn::DoubleConv>(deep, deep, rng));
    }
    for (std::size_t l = cfg_.depth; l > 0; --l) {
        ups_.push_back(add("up" + std::to_string(cfg_.depth - l + 1),
                           std::make_shared<UpBlock>(cfg_.width_at(l), cfg_.width_at(l - 1), rng)));
    }
    head_ = add("head", std::make_shared<nn::Conv2d>(cfg_.width_at(0), cfg_.num_classes, 1,
                                                     nn::Conv2dOptions{}, true, rng));
}

void HQUNet::set_circuit_gradient(quantum::CircuitGradient method) {
    cfg_.circuit_gradient = method;
    if (quantum_) {
        quantum_->options.gradient = method;
    }
}

Tensor HQUNet::encode(const Tensor &x, std::vector<Tensor> *skips) {
    if (x.ndim() != 4 || x.dim(1) != cfg_.in_channels) {
        throw std::invalid_argument("HQUNet: expected input [N, " + std::to_string(cfg_.in_channels) +
                                    ", H, W], got " + shape_str(x.shape()));
    }
    const std::size_t multiple = cfg_.required_multiple();
    if (x.dim(2) % multiple != 0 || x.dim(3) % multiple != 0) {
        throw std::invalid_argument("HQUNet: input extents " + shape_str(x.shape()) +
                                    " must be multiples of " + std::to_string(multiple));
    }
    if (quantum_ && (x.dim(2) != cfg_.input_size || x.dim(3) != cfg_.input_size)) {
        throw std::invalid_argument("HQUNet: quantum bottleneck is sized for " +
                                    std::to_string(cfg_.input_size) + "x" +
                                    std::to_string(cfg_.input_size) + " inputs, got " +
                                    shape_str(x.shape()));
    }
    Tensor h = stem_->forward(x);
    for (auto &down : downs_) {
        if (skips) {
            skips->push_back(h);
        }
        h = down->forward(h);
    }
    return h;
}

Tensor HQUNet::forward(const Tensor &x) {
    std::vector<Tensor> skips;
    Tensor h = encode(x, &skips);
    h = quantum_ ? quantum_->forward(h) : classical_->forward(h);
    for (std::size_t i = 0; i < ups_.size(); ++i) {
        h = ups_[i]->forward(h, skips[skips.size() - 1 - i]);
    }
    return head_->forward(h);
}

std::vector<std::pair<std::string, std::size_t>> HQUNet::parameter_breakdown() const {
    std::vector<std::pair<std::string, std::size_t>> out;
    for (const auto &[name, module] : parts_) {
        if (name == "bottleneck" && quantum_) {
            out.emplace_back("bottleneck.pre_conv", quantum_->pre_conv->parameter_count());
            out.emplace_back("bottleneck.circuit_angles", quantum_->circuit_angles.numel());
            out.emplace_back("bottleneck.post_linear", quantum_->post_linear->parameter_count());
        } else {
            out.emplace_back(name, module->parameter_count());
        }
    }
    return out;
}

LabelMap predict(const Tensor &logits) {
    if (logits.ndim() != 4 || logits.dim(1) == 0) {
        throw std::invalid_argument("predict: expected logits [N, K>=1, H, W], got " +
                                    shape_str(logits.shape()));
    }
    const std::size_t n = logits.dim(0);
    const std::size_t k = logits.dim(1);
    const std::size_t h = logits.dim(2);
    const std::size_t w = logits.dim(3);
    const std::size_t plane = h * w;
    LabelMap out(n, h, w);
    auto d = logits.data();
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t i = 0; i < plane; ++i) {
            std::size_t best = 0;
            double best_v = d[(b * k) * plane + i];
            for (std::size_t c = 1; c < k; ++c) {
                const double v = d[(b * k + c) * plane + i];
                if (v > best_v) {
                    best_v = v;
                    best = c;
                }
            }
            out.ids[b * plane + i] = static_cast<std::uint8_t>(best);
        }
    }
    return out;
}

ParameterReport count_parameters(const ModelConfig &cfg) {
    Rng rng(0);
    HQUNet model(cfg, rng);
    ParameterReport report;
    report.modules = model.parameter_breakdown();
    for (const auto &[name, count] : report.modules) {
        report.total += count;
        if (name.rfind("bottleneck", 0) == 0) {
            report.bottleneck += count;
        }
        if (name == "bottleneck.circuit_angles") {
            report.circuit_angles = count;
        }
    }
    return report;
}

} // namespace hqunet
