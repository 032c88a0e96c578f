#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "tal/rng.hpp"
#include "tal/telemetry.hpp"

namespace tal {

/// The five telemetry behaviour types the generator can produce.
enum class ChannelKind { binary, flat, oscillating, spiky, complex_mix };

inline const char* to_string(ChannelKind k) {
    switch (k) {
        case ChannelKind::binary: return "binary";
        case ChannelKind::flat: return "flat";
        case ChannelKind::oscillating: return "oscillating";
        case ChannelKind::spiky: return "spiky";
        default: return "complex";
    }
}

inline ChannelKind channel_kind_from_string(const std::string& s) {
    if (s == "binary") return ChannelKind::binary;
    if (s == "flat") return ChannelKind::flat;
    if (s == "oscillating") return ChannelKind::oscillating;
    if (s == "spiky") return ChannelKind::spiky;
    if (s == "complex") return ChannelKind::complex_mix;
    throw std::invalid_argument("unknown channel kind '" + s + "'");
}

inline const std::vector<ChannelKind>& all_channel_kinds() {
    static const std::vector<ChannelKind> kinds = {
        ChannelKind::binary, ChannelKind::flat, ChannelKind::oscillating,
        ChannelKind::spiky, ChannelKind::complex_mix};
    return kinds;
}

struct PlantedAnomaly {
    AnomalyInterval interval;
    double magnitude = 0.0;  // additive level shift applied to the test target
};

struct SynthSpec {
    std::string id;
    ChannelKind kind = ChannelKind::flat;
    std::size_t train_length = 2048;
    std::size_t test_length = 1024;
    std::size_t n_context = 2;
    std::vector<PlantedAnomaly> anomalies;
    std::uint64_t seed = 0;
};

/// Generator shape constants. The five kinds are placed so that their moment
/// signatures form well-separated, comparably spaced clusters in the raw
/// 4-D moment space (no standardisation happens before K-means, so the
/// spacing must hold in natural units).
namespace synth_constants {

// flat: constant level, no noise (signature must be exactly (c, 0, 0, 0)).
inline constexpr double kFlatLevelLo = -0.90;
inline constexpr double kFlatLevelHi = -0.80;

// binary: two exact values, Markov dwell times.
inline constexpr double kBinaryLow = -1.0;
inline constexpr double kBinaryHigh = 1.0;
inline constexpr double kBinaryHighFraction = 0.27;  // stationary P(high)
inline constexpr double kBinarySwitchRate = 0.35;

// oscillating: sine plus a noise band wide enough to lift kurtosis off the
// pure-sine floor of -1.5.
inline constexpr double kOscCenter = 0.80;
inline constexpr double kOscAmplitude = 0.28;
inline constexpr double kOscNoise = 0.185;
inline constexpr double kOscPeriodLo = 32.0;
inline constexpr double kOscPeriodHi = 96.0;

// spiky: noisy band with occasional large two-sided excursions. The spike
// count is fixed per length so kurtosis stays stable across channels.
inline constexpr double kSpikyBase = 0.35;
inline constexpr double kSpikyNoise = 0.48;
inline constexpr double kSpikyRate = 0.09;
inline constexpr double kSpikyMagLo = 1.00;
inline constexpr double kSpikyMagHi = 1.10;

// complex: regime-switching mixture of the other shapes plus sparse
// downward spikes.
inline constexpr double kComplexFlatLevel = -0.90;
inline constexpr double kComplexHighLevel = 0.30;
inline constexpr double kComplexHighFraction = 0.60;  // time share of the high level
inline constexpr double kComplexSineAmplitude = 0.30;
inline constexpr double kComplexSinePeriodLo = 24.0;
inline constexpr double kComplexSinePeriodHi = 48.0;
inline constexpr double kComplexNoise = 0.05;
inline constexpr double kComplexSegmentLo = 48.0;
inline constexpr double kComplexSegmentHi = 120.0;
inline constexpr double kComplexSpikeRate = 0.06;
inline constexpr double kComplexSpikeMagLo = 1.10;
inline constexpr double kComplexSpikeMagHi = 1.30;

// per-channel jitter of the base level, shared by all kinds
inline constexpr double kLevelJitter = 0.05;

// context columns: one-hot command pulses
inline constexpr double kContextEventRate = 0.01;
inline constexpr int kContextPulseMax = 4;

inline constexpr std::size_t kMinLength = 300;

}  // namespace synth_constants

namespace synth_detail {

/// Emits `length` samples of the kind's target shape into `out`.
inline void generate_target(ChannelKind kind, std::size_t length, Rng& rng,
                            std::vector<double>& out) {
    namespace sc = synth_constants;
    out.resize(length);
    switch (kind) {
        case ChannelKind::flat: {
            const double level = rng.uniform(sc::kFlatLevelLo, sc::kFlatLevelHi);
            for (auto& v : out) v = level;
            break;
        }
        case ChannelKind::binary: {
            const double q = sc::kBinaryHighFraction;
            const double to_high = sc::kBinarySwitchRate * q;
            const double to_low = sc::kBinarySwitchRate * (1.0 - q);
            bool high = rng.bernoulli(q);
            for (auto& v : out) {
                v = high ? sc::kBinaryHigh : sc::kBinaryLow;
                if (high ? rng.bernoulli(to_low) : rng.bernoulli(to_high)) high = !high;
            }
            break;
        }
        case ChannelKind::oscillating: {
            const double center = sc::kOscCenter + rng.uniform(-sc::kLevelJitter, sc::kLevelJitter);
            const double period = rng.uniform(sc::kOscPeriodLo, sc::kOscPeriodHi);
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double omega = 2.0 * std::numbers::pi / period;
            for (std::size_t t = 0; t < length; ++t)
                out[t] = center + sc::kOscAmplitude * std::sin(omega * static_cast<double>(t) + phase) +
                         rng.normal(0.0, sc::kOscNoise);
            break;
        }
        case ChannelKind::spiky: {
            const double base = sc::kSpikyBase + rng.uniform(-sc::kLevelJitter, sc::kLevelJitter);
            for (auto& v : out) v = base + rng.normal(0.0, sc::kSpikyNoise);
            const auto n_spikes = static_cast<std::size_t>(
                std::llround(sc::kSpikyRate * static_cast<double>(length)));
            for (std::size_t i = 0; i < n_spikes; ++i) {
                const auto pos = static_cast<std::size_t>(rng.next_below(length));
                const double mag = rng.uniform(sc::kSpikyMagLo, sc::kSpikyMagHi);
                out[pos] += rng.bernoulli(0.5) ? mag : -mag;
            }
            break;
        }
        case ChannelKind::complex_mix: {
            // Two-level regime switching with a sine riding on top, band
            // noise, and sparse downward spikes -- a blend of the other kinds.
            const double jitter = rng.uniform(-sc::kLevelJitter, sc::kLevelJitter);
            const double period =
                rng.uniform(sc::kComplexSinePeriodLo, sc::kComplexSinePeriodHi);
            const double omega = 2.0 * std::numbers::pi / period;
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            // High dwells are stretched so the high level holds the
            // configured share of time.
            const double stretch =
                sc::kComplexHighFraction / (1.0 - sc::kComplexHighFraction);
            bool high = rng.bernoulli(sc::kComplexHighFraction);
            std::size_t t = 0;
            while (t < length) {
                double seg = rng.uniform(sc::kComplexSegmentLo, sc::kComplexSegmentHi);
                if (high) seg *= stretch;
                const auto run = static_cast<std::size_t>(seg);
                const double level = high ? sc::kComplexHighLevel : sc::kComplexFlatLevel;
                for (std::size_t i = 0; i < run && t < length; ++i, ++t)
                    out[t] = level + jitter +
                             sc::kComplexSineAmplitude *
                                 std::sin(omega * static_cast<double>(t) + phase) +
                             rng.normal(0.0, sc::kComplexNoise);
                high = !high;
            }
            const auto n_spikes = static_cast<std::size_t>(
                std::llround(sc::kComplexSpikeRate * static_cast<double>(length)));
            for (std::size_t i = 0; i < n_spikes; ++i) {
                const auto pos = static_cast<std::size_t>(rng.next_below(length));
                out[pos] -= rng.uniform(sc::kComplexSpikeMagLo, sc::kComplexSpikeMagHi);
            }
            break;
        }
    }
}

inline void generate_context_column(std::size_t length, Rng& rng, Matrix& m, std::size_t col) {
    namespace sc = synth_constants;
    std::size_t t = 0;
    while (t < length) {
        if (rng.bernoulli(sc::kContextEventRate)) {
            const auto pulse =
                1 + static_cast<std::size_t>(rng.next_below(sc::kContextPulseMax));
            for (std::size_t i = 0; i < pulse && t < length; ++i, ++t) m.at(t, col) = 1.0;
        } else {
            m.at(t, col) = 0.0;
            ++t;
        }
    }
}

}  // namespace synth_detail

/// Generates one synthetic channel. Deterministic given the spec: the same
/// (kind, lengths, seed) always produce identical matrices, and planted
/// anomalies only add a level shift to the test target, so a clean twin of
/// the same seed differs exactly by those shifts.
inline TelemetryChannel synthesize_channel(const SynthSpec& spec) {
    namespace sc = synth_constants;
    if (spec.train_length < sc::kMinLength || spec.test_length < sc::kMinLength)
        throw std::invalid_argument("synthesize_channel: lengths must be >= " +
                                    std::to_string(sc::kMinLength));
    for (const auto& a : spec.anomalies) {
        if (a.magnitude <= 0.0)
            throw std::invalid_argument("synthesize_channel: planted magnitude must be > 0");
        if (a.interval.start > a.interval.end || a.interval.end >= spec.test_length)
            throw std::invalid_argument("synthesize_channel: planted interval outside test split");
    }

    TelemetryChannel ch;
    ch.id = spec.id.empty() ? std::string(to_string(spec.kind)) + "-" + std::to_string(spec.seed)
                            : spec.id;
    ch.spacecraft = "SYNTH";
    ch.target_index = 0;

    const std::size_t cols = 1 + spec.n_context;
    ch.train = Matrix(spec.train_length, cols);
    ch.test = Matrix(spec.test_length, cols);

    Rng rng(derive_seed(spec.seed, "synth-channel"));
    std::vector<double> target;

    synth_detail::generate_target(spec.kind, spec.train_length, rng, target);
    for (std::size_t t = 0; t < spec.train_length; ++t) ch.train.at(t, 0) = target[t];
    synth_detail::generate_target(spec.kind, spec.test_length, rng, target);
    for (std::size_t t = 0; t < spec.test_length; ++t) ch.test.at(t, 0) = target[t];

    for (std::size_t c = 1; c < cols; ++c) {
        synth_detail::generate_context_column(spec.train_length, rng, ch.train, c);
        synth_detail::generate_context_column(spec.test_length, rng, ch.test, c);
    }

    for (const auto& a : spec.anomalies) {
        for (std::size_t t = a.interval.start; t <= a.interval.end; ++t)
            ch.test.at(t, 0) += a.magnitude;
        ch.labels.push_back(a.interval);
    }

    ch.validate();
    return ch;
}

/// Builds the desk-scale benchmark corpus: `per_kind` channels of each of the
/// five behaviour kinds. Per-channel seeds derive from (seed, "corpus", i),
/// so the corpus is reproducible and independent of generation order.
struct CorpusChannel {
    TelemetryChannel channel;
    ChannelKind kind;
};

inline std::vector<CorpusChannel> make_kind_corpus(std::size_t per_kind, std::size_t train_length,
                                                   std::size_t test_length, std::size_t n_context,
                                                   std::uint64_t seed,
                                                   const std::vector<PlantedAnomaly>& plant = {}) {
    std::vector<CorpusChannel> corpus;
    std::size_t index = 0;
    for (ChannelKind kind : all_channel_kinds()) {
        for (std::size_t i = 0; i < per_kind; ++i, ++index) {
            SynthSpec spec;
            spec.id = std::string(1, "BFOSC"[static_cast<int>(kind)]) + "-" + std::to_string(i + 1);
            spec.kind = kind;
            spec.train_length = train_length;
            spec.test_length = test_length;
            spec.n_context = n_context;
            spec.anomalies = plant;
            spec.seed = derive_seed(seed, "corpus", index);
            corpus.push_back({synthesize_channel(spec), kind});
        }
    }
    return corpus;
}

}  // namespace tal
