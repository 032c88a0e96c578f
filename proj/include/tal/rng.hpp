#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

namespace tal {

/// Deterministic PRNG used everywhere in the library.
///
/// splitmix64 core: tiny state, excellent mixing, and identical output on
/// every platform (unlike the std:: distributions, which the standard leaves
/// implementation-defined). All stochastic behaviour in the pipeline flows
/// from one of these, seeded through derive_seed().
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t next_below(std::uint64_t n) {
        // Rejection-free modulo bias is negligible for the small n used here,
        // but reject anyway so results do not depend on n's magnitude.
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    /// Standard normal via Box-Muller (cached spare).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return next_double() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t mix(std::uint64_t h) {
    Rng r(h);
    return r.next_u64();
}

}  // namespace detail

/// Derives an independent child seed from a parent seed and a label.
/// The per-channel / per-restart RNG streams are all derived this way, so a
/// single global seed reproduces the whole run regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    return detail::mix(detail::fnv1a(detail::fnv1a(0xcbf29ce484222325ULL, parent), label));
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::string_view label, std::uint64_t index) {
    return detail::mix(detail::fnv1a(detail::fnv1a(detail::fnv1a(0xcbf29ce484222325ULL, parent), label), index));
}

}  // namespace tal
