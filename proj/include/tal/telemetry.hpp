#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tal/matrix.hpp"

namespace tal {

enum class AnomalyKind { point, contextual, unspecified };

inline const char* to_string(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::point: return "point";
        case AnomalyKind::contextual: return "contextual";
        default: return "unspecified";
    }
}

inline AnomalyKind anomaly_kind_from_string(const std::string& s) {
    if (s == "point") return AnomalyKind::point;
    if (s == "contextual") return AnomalyKind::contextual;
    return AnomalyKind::unspecified;
}

/// Closed interval [start, end] of time indices, in the test split's index
/// space of one channel.
struct AnomalyInterval {
    std::size_t start = 0;
    std::size_t end = 0;
    AnomalyKind kind = AnomalyKind::unspecified;

    AnomalyInterval() = default;
    AnomalyInterval(std::size_t s, std::size_t e, AnomalyKind k = AnomalyKind::unspecified)
        : start(s), end(e), kind(k) {
        if (s > e) throw std::invalid_argument("AnomalyInterval: start > end");
    }

    std::size_t length() const { return end - start + 1; }
    bool overlaps(const AnomalyInterval& o) const { return start <= o.end && o.start <= end; }
    bool operator==(const AnomalyInterval& o) const {
        return start == o.start && end == o.end && kind == o.kind;
    }
};

/// One telemetry channel: an anomaly-free training matrix, a test matrix
/// containing the labelled anomalies, and the index of the target parameter.
/// Values are nominally scaled to [-1, 1]; context columns may be one-hot.
struct TelemetryChannel {
    std::string id;
    std::string spacecraft;  // "SMAP", "MSL", "SYNTH", ...
    Matrix train;
    Matrix test;
    std::size_t target_index = 0;
    std::vector<AnomalyInterval> labels;

    /// Enforces the structural invariants. Throws std::invalid_argument with
    /// the channel id in the message on the first violation found.
    void validate() const {
        auto fail = [this](const std::string& what) {
            throw std::invalid_argument("channel '" + id + "': " + what);
        };
        if (train.cols == 0 || train.cols != test.cols)
            fail("train and test must share a column count >= 1");
        if (target_index >= train.cols) fail("target_index out of range");
        if (!train.all_finite() || !test.all_finite()) fail("non-finite value in data");
        for (const auto& iv : labels) {
            if (iv.start > iv.end) fail("label interval with start > end");
            if (iv.end >= test.rows) fail("label interval exceeds test length");
        }
    }

    std::vector<double> train_target() const { return train.column(target_index); }
    std::vector<double> test_target() const { return test.column(target_index); }
};

struct ChannelDescriptor {
    std::string id;
    std::string spacecraft;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::size_t columns = 0;
    std::size_t anomaly_sequences = 0;
};

/// Summary of a loaded dataset; totals follow the loaded channels exactly.
struct DatasetManifest {
    std::vector<ChannelDescriptor> channels;
    std::size_t total_anomaly_sequences = 0;
    std::size_t total_test_values = 0;  // sum of test-target lengths

    std::size_t channel_count() const { return channels.size(); }
};

inline DatasetManifest make_manifest(const std::vector<TelemetryChannel>& channels) {
    DatasetManifest m;
    for (const auto& ch : channels) {
        m.channels.push_back({ch.id, ch.spacecraft, ch.train.rows, ch.test.rows,
                              ch.train.cols, ch.labels.size()});
        m.total_anomaly_sequences += ch.labels.size();
        m.total_test_values += ch.test.rows;
    }
    return m;
}

}  // namespace tal
