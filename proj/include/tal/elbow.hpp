#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tal/kmeans.hpp"

namespace tal {

/// Distortion-vs-k curve plus the automatically chosen knee.
struct ElbowCurve {
    std::vector<std::pair<std::size_t, double>> entries;  // (k, distortion)
    std::size_t chosen_k = 0;
};

/// Fits K-means for every k in [k_min, k_max] and picks the knee as the k
/// with the largest discrete second difference of distortion,
///   d2(k) = D(k-1) - 2 D(k) + D(k+1),
/// evaluated over interior k. A flat curve has no knee; the argmax then
/// degenerates to the smallest interior k, which is the documented fallback.
inline ElbowCurve elbow_select(const std::vector<ChannelSignature>& signatures,
                               std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                               const KMeansParams& params = {}) {
    if (k_min < 1) throw std::invalid_argument("elbow_select: k_min must be >= 1");
    if (k_max < k_min + 2)
        throw std::invalid_argument("elbow_select: need at least 3 k values for a second difference");

    ElbowCurve curve;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        auto model = kmeans_fit(signatures, k, derive_seed(seed, "elbow", k), params);
        curve.entries.emplace_back(k, model.distortion);
    }

    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < curve.entries.size(); ++i) {
        const double d2 = curve.entries[i - 1].second - 2.0 * curve.entries[i].second +
                          curve.entries[i + 1].second;
        if (d2 > best) {
            best = d2;
            curve.chosen_k = curve.entries[i].first;
        }
    }
    return curve;
}

}  // namespace tal
