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

#include "hqunet/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace hqunet {

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : k_{num_classes}, counts_(num_classes * num_classes, 0) {
    if (num_classes == 0) {
        throw std::invalid_argument("ConfusionMatrix: need at least one class");
    }
}

void ConfusionMatrix::update(const LabelMap &pred, const LabelMap &truth) {
    if (pred.batch != truth.batch || pred.height != truth.height || pred.width != truth.width ||
        pred.size() != truth.size()) {
        throw std::invalid_argument("ConfusionMatrix::update: prediction extent " +
                                    std::to_string(pred.batch) + "x" + std::to_string(pred.height) +
                                    "x" + std::to_string(pred.width) + " vs truth " +
                                    std::to_string(truth.batch) + "x" +
                                    std::to_string(truth.height) + "x" +
                                    std::to_string(truth.width));
    }
    // Validate first so a bad id leaves the matrix untouched.
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred.ids[i] >= k_ || truth.ids[i] >= k_) {
            const bool bad_pred = pred.ids[i] >= k_;
            throw std::invalid_argument(
                std::string("ConfusionMatrix::update: ") + (bad_pred ? "predicted" : "true") +
                " class id " + std::to_string(bad_pred ? pred.ids[i] : truth.ids[i]) +
                " at pixel " + std::to_string(i) + " is not below " + std::to_string(k_));
        }
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++counts_[truth.ids[i] * k_ + pred.ids[i]];
    }
}

void ConfusionMatrix::merge(const ConfusionMatrix &other) {
    if (other.k_ != k_) {
        throw std::invalid_argument("ConfusionMatrix::merge: class counts differ");
    }
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        counts_[i] += other.counts_[i];
    }
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) {
        t += c;
    }
    return t;
}

std::vector<double> ConfusionMatrix::per_class_iou() const {
    std::vector<double> iou(k_, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t c = 0; c < k_; ++c) {
        std::uint64_t row = 0;
        std::uint64_t col = 0;
        for (std::size_t j = 0; j < k_; ++j) {
            row += count(c, j);
            col += count(j, c);
        }
        const std::uint64_t uni = row + col - count(c, c);
        if (uni > 0) {
            iou[c] = static_cast<double>(count(c, c)) / static_cast<double>(uni);
        }
    }
    return iou;
}

double ConfusionMatrix::miou() const {
    if (empty()) {
        throw std::domain_error("mIoU of an empty confusion matrix");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : per_class_iou()) {
        if (!std::isnan(v)) {
            sum += v;
            ++n;
        }
    }
    return sum / static_cast<double>(n);
}

double ConfusionMatrix::oa() const {
    if (empty()) {
        throw std::domain_error("overall accuracy of an empty confusion matrix");
    }
    std::uint64_t trace = 0;
    for (std::size_t c = 0; c < k_; ++c) {
        trace += count(c, c);
    }
    return static_cast<double>(trace) / static_cast<double>(total());
}

MetricsReport MetricsReport::from(const ConfusionMatrix &cm) {
    return {cm.miou(), 100.0 * cm.oa(), cm.per_class_iou(), cm.total()};
}

nlohmann::json MetricsReport::to_json() const {
    nlohmann::json per = nlohmann::json::array();
    for (double v : per_class_iou) {
        per.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
    }
    return {{"mIoU", miou}, {"OA%", oa_percent}, {"per_class_IoU", per}, {"pixels", pixels}};
}

std::string MetricsReport::table(const std::vector<std::string> &class_names) const {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << std::left << std::setw(14) << "class" << "IoU\n";
    for (std::size_t c = 0; c < per_class_iou.size(); ++c) {
        const std::string name = c < class_names.size() ? class_names[c] : std::to_string(c);
        os << std::setw(14) << name;
        if (std::isnan(per_class_iou[c])) {
            os << "-\n";
        } else {
            os << per_class_iou[c] << '\n';
        }
    }
    os << std::setw(14) << "mIoU" << miou << '\n';
    os << std::setw(14) << "OA%" << std::setprecision(2) << oa_percent << '\n';
    return os.str();
}

} // namespace hqunet
