#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tal/moments.hpp"

namespace tal {

/// 2-D projection of the 4-D signature cloud, for plotting.
struct Projection2D {
    std::vector<std::array<double, 2>> points;      // by input position
    std::array<double, 2> explained_variance{};     // top-2 eigenvalues, descending
    std::array<std::array<double, 4>, 2> components{};  // orthonormal rows
};

namespace pca_detail {

constexpr std::size_t kDim = 4;
using Mat4 = std::array<std::array<double, kDim>, kDim>;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Small and exact
/// enough for 4x4 covariance work; returns (eigenvalues, eigenvectors as
/// columns), unsorted.
inline std::pair<std::array<double, kDim>, Mat4> jacobi_eigen(Mat4 a) {
    Mat4 v{};
    for (std::size_t i = 0; i < kDim; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < kDim; ++p)
            for (std::size_t q = p + 1; q < kDim; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;

        for (std::size_t p = 0; p < kDim; ++p) {
            for (std::size_t q = p + 1; q < kDim; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t i = 0; i < kDim; ++i) {
                    const double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < kDim; ++i) {
                    const double api = a[p][i], aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < kDim; ++i) {
                    const double vip = v[i][p], viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }

    std::array<double, kDim> eigenvalues{};
    for (std::size_t i = 0; i < kDim; ++i) eigenvalues[i] = a[i][i];
    return {eigenvalues, v};
}

}  // namespace pca_detail

/// Projects signatures onto the top-2 principal components of their (4x4,
/// population) covariance. Sign convention: within each component the
/// largest-magnitude coordinate is made positive, so repeated runs and
/// independent solvers agree up to that rule.
inline Projection2D pca_project(const std::vector<ChannelSignature>& signatures) {
    const std::size_t n = signatures.size();
    if (n < 3) throw std::invalid_argument("pca_project: need at least 3 signatures");

    std::array<double, 4> mean{};
    for (const auto& s : signatures) {
        const auto p = s.as_array();
        for (std::size_t d = 0; d < 4; ++d) mean[d] += p[d];
    }
    for (std::size_t d = 0; d < 4; ++d) mean[d] /= static_cast<double>(n);

    pca_detail::Mat4 cov{};
    for (const auto& s : signatures) {
        const auto p = s.as_array();
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j)
                cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]);
    }
    double total_var = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) cov[i][j] /= static_cast<double>(n);
        total_var += cov[i][i];
    }
    if (total_var <= 0.0) throw std::invalid_argument("pca_project: no variance to project");

    auto [eigenvalues, vectors] = pca_detail::jacobi_eigen(cov);

    std::array<std::size_t, 4> order{0, 1, 2, 3};
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return eigenvalues[a] > eigenvalues[b]; });

    Projection2D proj;
    for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t idx = order[c];
        proj.explained_variance[c] = std::max(eigenvalues[idx], 0.0);
        std::array<double, 4> comp{};
        for (std::size_t d = 0; d < 4; ++d) comp[d] = vectors[d][idx];
        // Fix the sign: largest-magnitude coordinate positive (first wins ties).
        std::size_t imax = 0;
        for (std::size_t d = 1; d < 4; ++d)
            if (std::abs(comp[d]) > std::abs(comp[imax])) imax = d;
        if (comp[imax] < 0.0)
            for (auto& x : comp) x = -x;
        proj.components[c] = comp;
    }

    proj.points.reserve(n);
    for (const auto& s : signatures) {
        const auto p = s.as_array();
        std::array<double, 2> xy{};
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t d = 0; d < 4; ++d)
                xy[c] += proj.components[c][d] * (p[d] - mean[d]);
        proj.points.push_back(xy);
    }
    return proj;
}

}  // namespace tal
