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
 * Confusion-matrix accounting and segmentation scores.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hqunet/labels.hpp"

namespace hqunet {

/// ``count(t, p)`` is the number of pixels with true class t predicted as p.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t num_classes);

    /// Adds one count per pixel. Extents must match and every id be < K.
    void update(const LabelMap &pred, const LabelMap &truth);
    void merge(const ConfusionMatrix &other);

    [[nodiscard]] std::size_t num_classes() const { return k_; }
    [[nodiscard]] std::uint64_t count(std::size_t truth, std::size_t pred) const {
        return counts_[truth * k_ + pred];
    }
    [[nodiscard]] std::uint64_t total() const;
    [[nodiscard]] bool empty() const { return total() == 0; }

    /// NaN for classes absent from both truth and prediction.
    [[nodiscard]] std::vector<double> per_class_iou() const;
    /// Mean IoU over classes with a nonzero union.
    [[nodiscard]] double miou() const;
    /// Fraction of correctly labelled pixels in [0, 1].
    [[nodiscard]] double oa() const;

    bool operator==(const ConfusionMatrix &) const = default;

  private:
    std::size_t k_;
    std::vector<std::uint64_t> counts_;
};

struct MetricsReport {
    double miou = 0.0;
    double oa_percent = 0.0;
    std::vector<double> per_class_iou;
    std::uint64_t pixels = 0;

    [[nodiscard]] static MetricsReport from(const ConfusionMatrix &cm);
    /// Keys ``mIoU``, ``OA%``, ``per_class_IoU`` (null for absent classes), ``pixels``.
    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] std::string table(const std::vector<std::string> &class_names = {}) const;
};

} // namespace hqunet
