#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "tal/forecast.hpp"
#include "tal/telemetry.hpp"

namespace tal {

/// Absolute prediction errors and their EWMA smoothing for one channel.
/// offset is the first covered test index (= window size w): raw[i] is the
/// error at test index i + offset.
struct ErrorSeries {
    std::vector<double> raw;
    std::vector<double> smoothed;
    std::size_t offset = 0;
};

/// A contiguous run of smoothed errors above the selected threshold, still in
/// error-index space.
struct ErrorSequence {
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    double peak = 0.0;    // max smoothed error inside the run
};

struct ThresholdScore {
    double z = 0.0;
    double epsilon = 0.0;
    double score = 0.0;
    std::size_t removed_points = 0;
    std::size_t removed_sequences = 0;
};

struct ThresholdResult {
    double epsilon = 0.0;
    double z = 0.0;
    std::vector<ErrorSequence> sequences;
    std::vector<ThresholdScore> score_table;
};

struct DetectorConfig {
    double z_min = 2.0;
    double z_max = 10.0;
    double z_step = 0.5;
    std::size_t span = 0;      // 0: auto = min(T/2, 120)
    double prune_p = 0.13;

    std::vector<double> z_candidates() const {
        std::vector<double> zs;
        const auto count = static_cast<std::size_t>(std::llround((z_max - z_min) / z_step)) + 1;
        for (std::size_t i = 0; i < count; ++i) zs.push_back(z_min + z_step * static_cast<double>(i));
        return zs;
    }
};

inline std::vector<double> compute_errors(const std::vector<double>& predictions,
                                          const std::vector<double>& actual) {
    if (predictions.size() != actual.size())
        throw std::invalid_argument("compute_errors: length mismatch (" +
                                    std::to_string(predictions.size()) + " vs " +
                                    std::to_string(actual.size()) + ")");
    std::vector<double> raw(predictions.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = std::abs(predictions[i] - actual[i]);
    return raw;
}

/// EWMA with alpha = 2/(span+1), initialised at raw[0].
inline std::vector<double> smooth_errors(const std::vector<double>& raw, std::size_t span) {
    if (span < 1) throw std::invalid_argument("smooth_errors: span must be >= 1");
    std::vector<double> out(raw.size());
    if (raw.empty()) return out;
    const double alpha = 2.0 / (static_cast<double>(span) + 1.0);
    out[0] = raw[0];
    for (std::size_t i = 1; i < raw.size(); ++i)
        out[i] = alpha * raw[i] + (1.0 - alpha) * out[i - 1];
    return out;
}

namespace detect_detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sd) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    sd = std::sqrt(var);
}

inline std::vector<ErrorSequence> sequences_above(const std::vector<double>& s, double epsilon) {
    std::vector<ErrorSequence> seqs;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] > epsilon) {
            ErrorSequence seq{i, i, s[i]};
            while (seq.end + 1 < s.size() && s[seq.end + 1] > epsilon) {
                ++seq.end;
                seq.peak = std::max(seq.peak, s[seq.end]);
            }
            seqs.push_back(seq);
            i = seq.end + 1;
        } else {
            ++i;
        }
    }
    return seqs;
}

}  // namespace detect_detail

/// Nonparametric threshold selection over smoothed errors. Every candidate
/// epsilon(z) = mu + z*sigma is scored by how much its exceedances explain of
/// the series' mean and spread, discounted by how many points and sequences
/// have to be declared anomalous:
///   score(z) = (dmu/mu + dsigma/sigma) / (e_a + E_seq^2)
/// The argmax wins (ties to the smaller z). sigma = 0 has no threshold: flat
/// error series produce no anomalies.
inline ThresholdResult select_threshold(const std::vector<double>& smoothed,
                                        const std::vector<double>& z_candidates) {
    if (smoothed.size() < 10)
        throw std::invalid_argument("select_threshold: need at least 10 smoothed errors");
    if (z_candidates.empty()) throw std::invalid_argument("select_threshold: no candidates");

    double mu, sigma;
    detect_detail::mean_std(smoothed, mu, sigma);

    ThresholdResult result;
    if (sigma == 0.0) {
        result.epsilon = mu;
        result.z = 0.0;
        return result;
    }

    double best_score = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (double z : z_candidates) {
        const double epsilon = mu + z * sigma;
        double rem_sum = 0.0, rem_sq = 0.0;
        std::size_t removed = 0, seq_count = 0;
        bool in_seq = false;
        for (double v : smoothed) {
            if (v > epsilon) {
                ++removed;
                if (!in_seq) { ++seq_count; in_seq = true; }
            } else {
                rem_sum += v;
                rem_sq += v * v;
                in_seq = false;
            }
        }
        ThresholdScore entry{z, epsilon, 0.0, removed, seq_count};
        if (removed == 0) {
            entry.score = -std::numeric_limits<double>::infinity();
            result.score_table.push_back(entry);
            continue;
        }
        const double n_rem = static_cast<double>(smoothed.size() - removed);
        const double mean_rem = rem_sum / n_rem;
        const double var_rem = std::max(rem_sq / n_rem - mean_rem * mean_rem, 0.0);
        const double delta_mu = mu - mean_rem;
        const double delta_sigma = sigma - std::sqrt(var_rem);
        entry.score = (delta_mu / mu + delta_sigma / sigma) /
                      (static_cast<double>(removed) +
                       static_cast<double>(seq_count) * static_cast<double>(seq_count));
        result.score_table.push_back(entry);
        if (entry.score > best_score) {
            best_score = entry.score;
            result.z = z;
            result.epsilon = epsilon;
            any = true;
        }
    }

    if (!any) {
        // Nothing exceeds even the lowest candidate; report the most
        // conservative threshold and no sequences.
        result.z = z_candidates.back();
        result.epsilon = mu + result.z * sigma;
        return result;
    }

    result.sequences = detect_detail::sequences_above(smoothed, result.epsilon);
    return result;
}

/// Telemanom-style pruning: sort sequence peaks descending and append the
/// highest non-anomalous smoothed value; walk the stepwise relative decreases
/// d_i, marking a sequence whenever the decrease below it is under p and
/// rescuing all marks whenever a decrease reaches p. Sequences still marked
/// at the end do not stand out and are dropped.
inline std::vector<ErrorSequence> prune_sequences(const std::vector<ErrorSequence>& sequences,
                                                  const std::vector<double>& smoothed,
                                                  double p = 0.13) {
    if (sequences.empty()) return {};

    std::vector<std::size_t> order(sequences.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sequences[a].peak != sequences[b].peak) return sequences[a].peak > sequences[b].peak;
        return sequences[a].start < sequences[b].start;
    });

    std::vector<char> covered(smoothed.size(), 0);
    for (const auto& s : sequences)
        for (std::size_t i = s.start; i <= s.end; ++i) covered[i] = 1;
    double background = 0.0;
    for (std::size_t i = 0; i < smoothed.size(); ++i)
        if (!covered[i]) background = std::max(background, smoothed[i]);

    std::vector<double> maxima;
    maxima.reserve(order.size() + 1);
    for (std::size_t idx : order) maxima.push_back(sequences[idx].peak);
    maxima.push_back(background);

    std::vector<std::size_t> marked;
    for (std::size_t i = 0; i + 1 < maxima.size(); ++i) {
        const double d = maxima[i] > 0.0 ? (maxima[i] - maxima[i + 1]) / maxima[i] : 0.0;
        if (d < p)
            marked.push_back(i);  // rank i does not stand out over the next
        else
            marked.clear();
    }

    std::vector<char> drop(sequences.size(), 0);
    for (std::size_t rank : marked) drop[order[rank]] = 1;

    std::vector<ErrorSequence> kept;
    for (std::size_t i = 0; i < sequences.size(); ++i)
        if (!drop[i]) kept.push_back(sequences[i]);
    return kept;
}

/// One detected anomaly in test-index space.
struct DetectedAnomaly {
    AnomalyInterval interval;
    double peak_error = 0.0;
};

struct DetectionResult {
    std::vector<DetectedAnomaly> anomalies;
    double epsilon = 0.0;
    double z = 0.0;
    ErrorSeries errors;
};

/// Full per-channel pipeline: predict -> absolute errors -> EWMA -> threshold
/// -> prune, with intervals shifted by the window into test-index space.
inline DetectionResult detect_channel(const TrainedForecaster& forecaster,
                                      const TelemetryChannel& channel,
                                      const DetectorConfig& config = {}) {
    const std::size_t w = forecaster.spec.window;
    const std::vector<double> predictions = predict(forecaster, channel.test);
    const std::vector<double> target = channel.test_target();
    const std::vector<double> actual(target.begin() + static_cast<std::ptrdiff_t>(w), target.end());

    DetectionResult result;
    result.errors.offset = w;
    result.errors.raw = compute_errors(predictions, actual);
    const std::size_t span = config.span > 0
                                 ? config.span
                                 : std::max<std::size_t>(1, std::min(result.errors.raw.size() / 2,
                                                                     std::size_t{120}));
    result.errors.smoothed = smooth_errors(result.errors.raw, span);

    ThresholdResult thr = select_threshold(result.errors.smoothed, config.z_candidates());
    result.epsilon = thr.epsilon;
    result.z = thr.z;

    const auto kept = prune_sequences(thr.sequences, result.errors.smoothed, config.prune_p);
    for (const auto& seq : kept) {
        DetectedAnomaly da;
        da.interval = AnomalyInterval(seq.start + w, seq.end + w);
        da.peak_error = seq.peak;
        result.anomalies.push_back(da);
    }
    return result;
}

}  // namespace tal
