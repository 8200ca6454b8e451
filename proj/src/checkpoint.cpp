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

#include "hqunet/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace hqunet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'H', 'Q', 'U', 'N', 'E', 'T', 'C', 'K'};
constexpr std::uint32_t kMaxNdim = 8;

template <typename T> void put(std::ostream &os, T value) {
    os.write(reinterpret_cast<const char *>(&value), sizeof(T));
}

template <typename T> T get(std::istream &is, const std::string &path) {
    T value{};
    if (!is.read(reinterpret_cast<char *>(&value), sizeof(T))) {
        throw std::runtime_error("checkpoint '" + path + "' is truncated");
    }
    return value;
}

std::vector<nn::NamedTensor> deep_copy(const std::vector<nn::NamedTensor> &src) {
    std::vector<nn::NamedTensor> out;
    out.reserve(src.size());
    for (const auto &t : src) {
        out.push_back({t.name, t.tensor.detach()});
    }
    return out;
}

void copy_into(const std::vector<nn::NamedTensor> &dst, const std::vector<nn::NamedTensor> &src,
               const char *kind) {
    std::map<std::string, const Tensor *> by_name;
    for (const auto &s : src) {
        by_name[s.name] = &s.tensor;
    }
    if (by_name.size() != dst.size()) {
        throw std::invalid_argument(std::string("checkpoint holds ") +
                                    std::to_string(by_name.size()) + " " + kind +
                                    " tensors, model has " + std::to_string(dst.size()));
    }
    for (const auto &d : dst) {
        const auto it = by_name.find(d.name);
        if (it == by_name.end()) {
            throw std::invalid_argument(std::string("checkpoint lacks ") + kind + " '" + d.name +
                                        "'");
        }
        if (it->second->shape() != d.tensor.shape()) {
            throw std::invalid_argument(std::string("checkpoint ") + kind + " '" + d.name +
                                        "' has shape " + shape_str(it->second->shape()) +
                                        ", model expects " + shape_str(d.tensor.shape()));
        }
    }
    for (const auto &d : dst) {
        const auto v = by_name[d.name]->data();
        Tensor t = d.tensor;
        std::copy(v.begin(), v.end(), t.data_mut().begin());
    }
}

} // namespace

Checkpoint capture(const HQUNet &model, const Adam *optimizer, nlohmann::json train) {
    Checkpoint ck;
    ck.model = model.config();
    ck.train = std::move(train);
    ck.params = deep_copy(model.named_parameters());
    ck.buffers = deep_copy(model.named_buffers());
    if (optimizer) {
        ck.step = optimizer->steps();
        ck.adam = optimizer->options();
        ck.adam_m = optimizer->first_moments();
        ck.adam_v = optimizer->second_moments();
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path &path, const Checkpoint &ck) {
    const nlohmann::json meta = {{"model", ck.model},
                                 {"train", ck.train},
                                 {"step", ck.step},
                                 {"adam", ck.adam},
                                 {"has_optimizer", !ck.adam_m.empty()}};
    const std::string text = meta.dump();

    std::vector<std::pair<std::string, const Tensor *>> tensors;
    auto add = [&tensors](const char *prefix, const std::vector<nn::NamedTensor> &group) {
        for (const auto &t : group) {
            tensors.emplace_back(std::string(prefix) + t.name, &t.tensor);
        }
    };
    add("param/", ck.params);
    add("buffer/", ck.buffers);
    add("adam.m/", ck.adam_m);
    add("adam.v/", ck.adam_v);

    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    // Write beside the target and rename so readers never see a partial file.
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) {
            throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
        }
        os.write(kMagic, sizeof kMagic);
        put<std::uint32_t>(os, kCheckpointVersion);
        put<std::uint64_t>(os, text.size());
        os.write(text.data(), static_cast<std::streamsize>(text.size()));
        put<std::uint64_t>(os, tensors.size());
        for (const auto &[name, t] : tensors) {
            put<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            put<std::uint32_t>(os, static_cast<std::uint32_t>(t->ndim()));
            for (auto d : t->shape()) {
                put<std::uint64_t>(os, d);
            }
            const auto v = t->data();
            os.write(reinterpret_cast<const char *>(v.data()),
                     static_cast<std::streamsize>(v.size() * sizeof(double)));
        }
        if (!os) {
            throw std::runtime_error("failed writing checkpoint '" + path.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    const std::string p = path.string();
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open checkpoint '" + p + "'");
    }
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0) {
        throw std::runtime_error("'" + p + "' is not an hqunet checkpoint");
    }
    const auto version = get<std::uint32_t>(is, p);
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint '" + p + "' has version " + std::to_string(version) +
                                 ", expected " + std::to_string(kCheckpointVersion));
    }
    const auto meta_len = get<std::uint64_t>(is, p);
    std::string text(meta_len, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(meta_len))) {
        throw std::runtime_error("checkpoint '" + p + "' is truncated");
    }
    Checkpoint ck;
    try {
        const auto meta = nlohmann::json::parse(text);
        ck.model = meta.at("model").get<ModelConfig>();
        ck.train = meta.at("train");
        ck.step = meta.at("step").get<std::size_t>();
        ck.adam = meta.at("adam").get<AdamOptions>();
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error("checkpoint '" + p + "' has malformed metadata: " + e.what());
    }
    const auto count = get<std::uint64_t>(is, p);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto len = get<std::uint32_t>(is, p);
        std::string name(len, '\0');
        if (!is.read(name.data(), len)) {
            throw std::runtime_error("checkpoint '" + p + "' is truncated");
        }
        const auto ndim = get<std::uint32_t>(is, p);
        if (ndim > kMaxNdim) {
            throw std::runtime_error("checkpoint '" + p + "': tensor '" + name + "' has " +
                                     std::to_string(ndim) + " dimensions");
        }
        Shape shape(ndim);
        for (auto &d : shape) {
            d = get<std::uint64_t>(is, p);
        }
        std::vector<double> values(shape_numel(shape));
        if (!is.read(reinterpret_cast<char *>(values.data()),
                     static_cast<std::streamsize>(values.size() * sizeof(double)))) {
            throw std::runtime_error("checkpoint '" + p + "' is truncated");
        }
        const auto slash = name.find('/');
        const std::string prefix = name.substr(0, slash);
        nn::NamedTensor t{name.substr(slash + 1), Tensor(shape, std::move(values))};
        if (slash == std::string::npos) {
            throw std::runtime_error("checkpoint '" + p + "': unprefixed tensor '" + name + "'");
        } else if (prefix == "param") {
            ck.params.push_back(std::move(t));
        } else if (prefix == "buffer") {
            ck.buffers.push_back(std::move(t));
        } else if (prefix == "adam.m") {
            ck.adam_m.push_back(std::move(t));
        } else if (prefix == "adam.v") {
            ck.adam_v.push_back(std::move(t));
        } else {
            throw std::runtime_error("checkpoint '" + p + "': unknown tensor group '" + prefix + "'");
        }
    }
    return ck;
}

void restore(HQUNet &model, const Checkpoint &ck) {
    copy_into(model.named_parameters(), ck.params, "parameter");
    copy_into(model.named_buffers(), ck.buffers, "buffer");
}

void restore(Adam &optimizer, const Checkpoint &ck) {
    if (ck.adam_m.empty()) {
        throw std::invalid_argument("checkpoint carries no optimizer state");
    }
    optimizer.load_state(ck.step, ck.adam_m, ck.adam_v);
}

std::unique_ptr<HQUNet> model_from_checkpoint(const Checkpoint &ck) {
    Rng rng(0);
    auto model = std::make_unique<HQUNet>(ck.model, rng);
    restore(*model, ck);
    return model;
}

} // namespace hqunet
