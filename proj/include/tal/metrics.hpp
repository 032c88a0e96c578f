#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tal/telemetry.hpp"

namespace tal {

/// tp/fp/fn counts. Anomaly-level scoring has no true-negative notion.
struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    Confusion& operator+=(const Confusion& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const Confusion&) const = default;
};

/// Event-level matching under the overlap rule: a labelled anomaly counts as
/// detected if any predicted interval shares at least one index with it, no
/// matter how small the overlap. A predicted interval that overlaps several
/// labels marks each of them detected but is itself never counted as a false
/// positive; several predictions on one label still yield exactly one TP.
inline Confusion match_anomalies(const std::vector<AnomalyInterval>& predicted,
                                 const std::vector<AnomalyInterval>& labeled) {
    for (std::size_t i = 0; i < labeled.size(); ++i)
        for (std::size_t j = i + 1; j < labeled.size(); ++j)
            if (labeled[i].overlaps(labeled[j]))
                throw std::invalid_argument("match_anomalies: labeled intervals overlap");

    Confusion c;
    for (const auto& lab : labeled) {
        bool hit = false;
        for (const auto& pred : predicted)
            if (pred.overlaps(lab)) { hit = true; break; }
        if (hit)
            ++c.tp;
        else
            ++c.fn;
    }
    for (const auto& pred : predicted) {
        bool hit = false;
        for (const auto& lab : labeled)
            if (pred.overlaps(lab)) { hit = true; break; }
        if (!hit) ++c.fp;
    }
    return c;
}

/// Time-point-level confusion: per-index set intersections of the predicted
/// and labelled index sets over a series of the given length.
inline Confusion point_confusion(const std::vector<AnomalyInterval>& predicted,
                                 const std::vector<AnomalyInterval>& labeled,
                                 std::size_t length) {
    std::vector<char> pred_mask(length, 0), lab_mask(length, 0);
    auto fill = [&](const std::vector<AnomalyInterval>& ivs, std::vector<char>& mask,
                    const char* which) {
        for (const auto& iv : ivs) {
            if (iv.end >= length)
                throw std::invalid_argument(std::string("point_confusion: ") + which +
                                            " interval out of range");
            for (std::size_t i = iv.start; i <= iv.end; ++i) mask[i] = 1;
        }
    };
    fill(predicted, pred_mask, "predicted");
    fill(labeled, lab_mask, "labeled");

    Confusion c;
    for (std::size_t i = 0; i < length; ++i) {
        if (pred_mask[i] && lab_mask[i]) ++c.tp;
        else if (pred_mask[i]) ++c.fp;
        else if (lab_mask[i]) ++c.fn;
    }
    return c;
}

/// F1 as a percentage: 100 * 2tp / (2tp + fp + fn). All-zero counts carry no
/// information and yield nullopt.
inline std::optional<double> f1_percent(const Confusion& c) {
    if (c.tp == 0 && c.fp == 0 && c.fn == 0) return std::nullopt;
    if (c.tp == 0) return 0.0;
    return 100.0 * 2.0 * static_cast<double>(c.tp) /
           (2.0 * static_cast<double>(c.tp) + static_cast<double>(c.fp) +
            static_cast<double>(c.fn));
}

/// Accuracy-per-cost: F1 percent per second of training wall clock.
inline double f1_per_second(double f1_percent_value, double total_training_seconds) {
    if (total_training_seconds <= 0.0)
        throw std::invalid_argument("f1_per_second: training seconds must be > 0");
    return f1_percent_value / total_training_seconds;
}

}  // namespace tal
