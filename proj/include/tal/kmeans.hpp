#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <vector>

#include "tal/moments.hpp"
#include "tal/rng.hpp"

namespace tal {

using SignaturePoint = std::array<double, 4>;

/// Result of one K-means clustering of channel signatures.
/// Invariants: assignments[i] is the index of the centroid nearest to point i
/// (squared Euclidean, ties to the lowest index), and distortion is the sum
/// of those squared distances.
struct ClusterModel {
    std::size_t k = 0;
    std::vector<SignaturePoint> centroids;
    std::vector<std::size_t> assignments;  // by input position
    double distortion = 0.0;
    std::uint64_t seed = 0;
};

struct KMeansParams {
    std::size_t max_iter = 300;
    double tol = 1e-6;
    std::size_t restarts = 10;
};

namespace kmeans_detail {

inline double dist_sq(const SignaturePoint& a, const SignaturePoint& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

inline std::size_t nearest(const SignaturePoint& p, const std::vector<SignaturePoint>& centroids) {
    std::size_t best = 0;
    double best_d = dist_sq(p, centroids[0]);
    for (std::size_t j = 1; j < centroids.size(); ++j) {
        const double d = dist_sq(p, centroids[j]);
        if (d < best_d) {  // strict: ties keep the lowest index
            best_d = d;
            best = j;
        }
    }
    return best;
}

/// k-means++ seeding: first centroid uniform, the rest proportionally to the
/// squared distance from the nearest centroid chosen so far.
inline std::vector<SignaturePoint> seed_plus_plus(const std::vector<SignaturePoint>& points,
                                                  std::size_t k, Rng& rng) {
    std::vector<SignaturePoint> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.next_below(points.size())]);
    std::vector<double> d2(points.size());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            d2[i] = dist_sq(points[i], centroids[0]);
            for (std::size_t j = 1; j < centroids.size(); ++j)
                d2[i] = std::min(d2[i], dist_sq(points[i], centroids[j]));
            total += d2[i];
        }
        if (total <= 0.0) {
            // All remaining mass is on already-chosen positions (duplicate
            // points); any distinct point works, take the first unused one.
            for (const auto& p : points) {
                bool used = false;
                for (const auto& c : centroids)
                    if (dist_sq(p, c) == 0.0) { used = true; break; }
                if (!used) { centroids.push_back(p); break; }
            }
            continue;
        }
        double target = rng.next_double() * total;
        std::size_t pick = points.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            acc += d2[i];
            if (acc >= target) { pick = i; break; }
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

struct FitResult {
    std::vector<SignaturePoint> centroids;
    std::vector<std::size_t> assignments;
    double distortion = 0.0;
};

inline FitResult lloyd(const std::vector<SignaturePoint>& points, std::size_t k,
                       Rng& rng, const KMeansParams& params) {
    FitResult res;
    res.centroids = seed_plus_plus(points, k, rng);
    res.assignments.assign(points.size(), 0);

    for (std::size_t iter = 0; iter < params.max_iter; ++iter) {
        for (std::size_t i = 0; i < points.size(); ++i)
            res.assignments[i] = nearest(points[i], res.centroids);

        std::vector<SignaturePoint> sums(k, SignaturePoint{});
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            for (std::size_t d = 0; d < 4; ++d) sums[res.assignments[i]][d] += points[i][d];
            ++counts[res.assignments[i]];
        }

        double shift = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (counts[j] == 0) {
                // Empty cluster: reseed at the point farthest from its
                // assigned centroid (deterministic; ties to lowest index).
                std::size_t far = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < points.size(); ++i) {
                    const double d = dist_sq(points[i], res.centroids[res.assignments[i]]);
                    if (d > far_d) { far_d = d; far = i; }
                }
                shift += dist_sq(res.centroids[j], points[far]);
                res.centroids[j] = points[far];
                res.assignments[far] = j;  // so a second empty cluster picks elsewhere
                continue;
            }
            SignaturePoint next;
            for (std::size_t d = 0; d < 4; ++d)
                next[d] = sums[j][d] / static_cast<double>(counts[j]);
            shift += dist_sq(res.centroids[j], next);
            res.centroids[j] = next;
        }
        if (shift <= params.tol * params.tol) break;
    }

    // Final assignment pass so assignments match the final centroids exactly.
    res.distortion = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        res.assignments[i] = nearest(points[i], res.centroids);
        res.distortion += dist_sq(points[i], res.centroids[res.assignments[i]]);
    }
    return res;
}

inline std::size_t count_distinct(const std::vector<SignaturePoint>& points) {
    std::set<SignaturePoint> s(points.begin(), points.end());
    return s.size();
}

}  // namespace kmeans_detail

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
/// distortion. Deterministic given the seed: restart r uses an RNG stream
/// derived as (seed, "kmeans", r), and ties between restarts keep the lower r.
inline ClusterModel kmeans_fit(const std::vector<ChannelSignature>& signatures, std::size_t k,
                               std::uint64_t seed, const KMeansParams& params = {}) {
    if (signatures.empty()) throw std::invalid_argument("kmeans_fit: empty input");
    if (k < 1) throw std::invalid_argument("kmeans_fit: k must be >= 1");

    std::vector<SignaturePoint> points;
    points.reserve(signatures.size());
    for (const auto& s : signatures) points.push_back(s.as_array());

    const std::size_t distinct = kmeans_detail::count_distinct(points);
    if (k > distinct)
        throw std::invalid_argument("kmeans_fit: k=" + std::to_string(k) +
                                    " exceeds the " + std::to_string(distinct) +
                                    " distinct signatures");

    kmeans_detail::FitResult best;
    best.distortion = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < params.restarts; ++r) {
        Rng rng(derive_seed(seed, "kmeans", r));
        auto fit = kmeans_detail::lloyd(points, k, rng, params);
        if (fit.distortion < best.distortion) best = std::move(fit);
    }

    ClusterModel model;
    model.k = k;
    model.centroids = std::move(best.centroids);
    model.assignments = std::move(best.assignments);
    model.distortion = best.distortion;
    model.seed = seed;
    return model;
}

/// Routes a signature to the nearest centroid (squared Euclidean, ties to
/// the lowest index).
inline std::size_t assign_cluster(const ClusterModel& model, const ChannelSignature& sig) {
    if (model.centroids.empty()) throw std::invalid_argument("assign_cluster: empty model");
    return kmeans_detail::nearest(sig.as_array(), model.centroids);
}

}  // namespace tal
