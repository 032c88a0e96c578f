#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tal/archive.hpp"
#include "tal/detect.hpp"
#include "tal/forecast.hpp"
#include "tal/rng.hpp"
#include "tal/synth.hpp"

namespace tal {

inline constexpr const char* kToolVersion = "0.1.0";

struct ArchitectureConfig {
    std::string name;  // report id; defaults to the preset name
    ForecasterSpec spec;
};

struct ClusteringConfig {
    std::size_t k_min = 1;
    std::size_t k_max = 10;
    std::size_t restarts = 10;
};

struct SynthConfig {
    std::size_t channels_per_kind = 20;
    std::size_t train_length = 2048;
    std::size_t test_length = 1024;
    std::size_t n_context = 2;
    bool plant_anomalies = true;
    double anomaly_magnitude = 1.0;
    std::size_t anomaly_length = 60;
    double tail_fraction = 0.5;  // share of planted anomalies anchored at the test tail
    bool force = false;
};

/// Whole-run configuration: one structured file, flag overrides on top.
struct RunConfig {
    std::string dataset;
    std::string output = "out";
    std::uint64_t seed = 1;
    std::size_t parallel = 1;
    std::vector<ArchitectureConfig> architectures;
    ClusteringConfig clustering;
    DetectorConfig detector;
    SynthConfig synth;

    /// Default architecture set: one preset per reference family.
    static std::vector<ArchitectureConfig> default_architectures() {
        std::vector<ArchitectureConfig> archs;
        for (auto family : {ForecasterFamily::persistence, ForecasterFamily::linear_ar,
                            ForecasterFamily::mlp, ForecasterFamily::recurrent})
            archs.push_back({to_string(family), preset_spec(family)});
        return archs;
    }
};

inline nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json archs = nlohmann::json::array();
    for (const auto& a : cfg.architectures) {
        nlohmann::json j = spec_to_json(a.spec);
        j["name"] = a.name;
        archs.push_back(j);
    }
    return {
        {"dataset", cfg.dataset},
        {"output", cfg.output},
        {"seed", cfg.seed},
        {"parallel", cfg.parallel},
        {"architectures", archs},
        {"clustering",
         {{"k_min", cfg.clustering.k_min},
          {"k_max", cfg.clustering.k_max},
          {"restarts", cfg.clustering.restarts}}},
        {"detector",
         {{"z_min", cfg.detector.z_min},
          {"z_max", cfg.detector.z_max},
          {"z_step", cfg.detector.z_step},
          {"span", cfg.detector.span},
          {"prune_p", cfg.detector.prune_p}}},
        {"synth",
         {{"channels_per_kind", cfg.synth.channels_per_kind},
          {"train_length", cfg.synth.train_length},
          {"test_length", cfg.synth.test_length},
          {"n_context", cfg.synth.n_context},
          {"plant_anomalies", cfg.synth.plant_anomalies},
          {"anomaly_magnitude", cfg.synth.anomaly_magnitude},
          {"anomaly_length", cfg.synth.anomaly_length},
          {"tail_fraction", cfg.synth.tail_fraction}}},
    };
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.dataset = j.value("dataset", cfg.dataset);
    cfg.output = j.value("output", cfg.output);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.parallel = j.value("parallel", cfg.parallel);

    if (j.contains("architectures")) {
        for (const auto& a : j.at("architectures")) {
            ArchitectureConfig ac;
            const std::string preset = a.value("preset", a.value("family", std::string{}));
            if (preset.empty())
                throw std::runtime_error("architecture entry needs a 'preset' or 'family' field");
            ac.spec = preset_spec(forecaster_family_from_string(preset));
            ac.spec.window = a.value("window", ac.spec.window);
            ac.spec.hidden = a.value("hidden", ac.spec.hidden);
            ac.spec.epochs = a.value("epochs", ac.spec.epochs);
            ac.spec.base_lr = a.value("base_lr", ac.spec.base_lr);
            ac.spec.lr_patience = a.value("lr_patience", ac.spec.lr_patience);
            ac.spec.lr_factor = a.value("lr_factor", ac.spec.lr_factor);
            ac.name = a.value("name", preset);
            cfg.architectures.push_back(ac);
        }
    }

    if (j.contains("clustering")) {
        const auto& c = j.at("clustering");
        cfg.clustering.k_min = c.value("k_min", cfg.clustering.k_min);
        cfg.clustering.k_max = c.value("k_max", cfg.clustering.k_max);
        cfg.clustering.restarts = c.value("restarts", cfg.clustering.restarts);
    }
    if (j.contains("detector")) {
        const auto& d = j.at("detector");
        cfg.detector.z_min = d.value("z_min", cfg.detector.z_min);
        cfg.detector.z_max = d.value("z_max", cfg.detector.z_max);
        cfg.detector.z_step = d.value("z_step", cfg.detector.z_step);
        cfg.detector.span = d.value("span", cfg.detector.span);
        cfg.detector.prune_p = d.value("prune_p", cfg.detector.prune_p);
    }
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        cfg.synth.channels_per_kind = s.value("channels_per_kind", cfg.synth.channels_per_kind);
        cfg.synth.train_length = s.value("train_length", cfg.synth.train_length);
        cfg.synth.test_length = s.value("test_length", cfg.synth.test_length);
        cfg.synth.n_context = s.value("n_context", cfg.synth.n_context);
        cfg.synth.plant_anomalies = s.value("plant_anomalies", cfg.synth.plant_anomalies);
        cfg.synth.anomaly_magnitude = s.value("anomaly_magnitude", cfg.synth.anomaly_magnitude);
        cfg.synth.anomaly_length = s.value("anomaly_length", cfg.synth.anomaly_length);
        cfg.synth.tail_fraction = s.value("tail_fraction", cfg.synth.tail_fraction);
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

/// Deterministic hash of the canonicalised config (sorted keys, shortest
/// round-trip floats) -- the ledger records it so a run can be tied to the
/// exact configuration that produced it.
inline std::string config_hash(const RunConfig& cfg) {
    const std::string canon = to_json(cfg).dump();
    std::uint64_t h = detail::fnv1a(0xcbf29ce484222325ULL, canon);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

/// Seed for one (architecture, channel) training, derived from the global
/// seed by a fixed rule so results do not depend on scheduling.
inline std::uint64_t channel_training_seed(const RunConfig& cfg, const std::string& architecture,
                                           const std::string& channel_id) {
    return derive_seed(cfg.seed, "train/" + architecture + "/" + channel_id);
}

}  // namespace tal
