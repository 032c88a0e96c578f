#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>

namespace tal {

/// Four central moments fingerprinting one channel's training-set target
/// series: mean, population standard deviation, biased skewness (m3/m2^1.5)
/// and excess kurtosis (m4/m2^2 - 3). A constant series makes skewness and
/// kurtosis 0/0; those NaNs are coerced to 0, so it fingerprints as
/// (c, 0, 0, 0).
struct ChannelSignature {
    double mean = 0.0;
    double std = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0;

    std::array<double, 4> as_array() const { return {mean, std, skewness, kurtosis}; }
    bool operator==(const ChannelSignature&) const = default;
};

inline ChannelSignature compute_signature(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 2) throw std::invalid_argument("compute_signature: need at least 2 samples");
    for (double v : series)
        if (!std::isfinite(v)) throw std::invalid_argument("compute_signature: non-finite input");

    bool constant = true;
    for (double v : series)
        if (v != series[0]) { constant = false; break; }
    if (constant) return {series[0], 0.0, 0.0, 0.0};  // exact (c, 0, 0, 0)

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : series) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);

    ChannelSignature sig;
    sig.mean = mean;
    sig.std = std::sqrt(m2);
    sig.skewness = m3 / (m2 * sig.std);  // m3 / m2^1.5
    sig.kurtosis = m4 / (m2 * m2) - 3.0;

    // NaN -> 0 rule for zero-variance series.
    if (!std::isfinite(sig.skewness)) sig.skewness = 0.0;
    if (!std::isfinite(sig.kurtosis)) sig.kurtosis = 0.0;
    if (!std::isfinite(sig.std)) sig.std = 0.0;
    return sig;
}

inline double signature_distance_sq(const ChannelSignature& a, const ChannelSignature& b) {
    const auto pa = a.as_array();
    const auto pb = b.as_array();
    double s = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double d = pa[i] - pb[i];
        s += d * d;
    }
    return s;
}

}  // namespace tal
