#pragma once

#include <array>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tal/config.hpp"
#include "tal/csv.hpp"
#include "tal/dataset.hpp"
#include "tal/detect.hpp"
#include "tal/elbow.hpp"
#include "tal/kmeans.hpp"
#include "tal/metrics.hpp"
#include "tal/moments.hpp"
#include "tal/parallel.hpp"
#include "tal/pca.hpp"
#include "tal/report.hpp"
#include "tal/synth.hpp"

namespace tal {

namespace pipeline_detail {

inline std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string opt_f1_str(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

inline LoadResult load_dataset_checked(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw std::runtime_error("no dataset directory configured");
    LoadResult loaded = load_dataset(cfg.dataset);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
    return loaded;
}

inline std::map<std::string, std::size_t> read_cluster_assignments(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cluster assignments '" + path +
                                      "' (run `tal cluster` first)");
    std::map<std::string, std::size_t> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (first) { first = false; continue; }  // header
        if (fields.size() < 2) throw std::runtime_error(path + ": malformed row '" + line + "'");
        out[fields[0]] = static_cast<std::size_t>(parse_int(fields[1], path));
    }
    return out;
}

struct LedgerStage {
    std::string started;
    std::string finished;
};

inline void update_ledger(const RunConfig& cfg, const std::string& stage,
                          const LedgerStage& times,
                          const std::map<std::string, std::map<std::string, double>>* training) {
    namespace fs = std::filesystem;
    const fs::path path = fs::path(cfg.output) / "ledger.json";
    nlohmann::json j;
    if (fs::exists(path)) {
        std::ifstream in(path);
        in >> j;
    }
    j["config_hash"] = config_hash(cfg);
    j["tool_version"] = kToolVersion;
    j["stages"][stage] = {{"started", times.started}, {"finished", times.finished}};
    if (training) {
        for (const auto& [arch, per_channel] : *training)
            for (const auto& [id, sec] : per_channel)
                j["training_seconds"][arch][id] = sec;
    }
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

}  // namespace pipeline_detail

struct SynthSummary {
    std::size_t channels = 0;
    std::size_t anomalies = 0;
};

/// Writes a synthetic ingest-layout dataset under cfg.dataset.
inline SynthSummary run_synth(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    if (cfg.dataset.empty()) throw std::runtime_error("synth: no dataset directory configured");

    const fs::path root(cfg.dataset);
    if (fs::exists(root) && !fs::is_empty(root) && !cfg.synth.force)
        throw std::runtime_error("synth: '" + cfg.dataset +
                                 "' exists and is not empty (use --force to overwrite)");
    fs::create_directories(root);

    std::vector<TelemetryChannel> channels;
    std::size_t index = 0;
    for (ChannelKind kind : all_channel_kinds()) {
        for (std::size_t i = 0; i < cfg.synth.channels_per_kind; ++i, ++index) {
            SynthSpec spec;
            spec.id = std::string(1, "BFOSC"[static_cast<int>(kind)]) + "-" + std::to_string(i + 1);
            spec.kind = kind;
            spec.train_length = cfg.synth.train_length;
            spec.test_length = cfg.synth.test_length;
            spec.n_context = cfg.synth.n_context;
            spec.seed = derive_seed(cfg.seed, "corpus", index);

            if (cfg.synth.plant_anomalies) {
                Rng plant(derive_seed(cfg.seed, "plant", index));
                const std::size_t len = std::max<std::size_t>(
                    1, static_cast<std::size_t>(plant.uniform(
                           0.8 * static_cast<double>(cfg.synth.anomaly_length),
                           1.2 * static_cast<double>(cfg.synth.anomaly_length))));
                const double mag = cfg.synth.anomaly_magnitude * plant.uniform(0.9, 1.1);
                const std::size_t t = cfg.synth.test_length;
                std::size_t start;
                if (plant.next_double() < cfg.synth.tail_fraction) {
                    start = t - std::min(len, t / 2);
                } else {
                    start = static_cast<std::size_t>(
                        plant.uniform(0.25 * static_cast<double>(t), 0.6 * static_cast<double>(t)));
                }
                const std::size_t end = std::min(start + len - 1, t - 1);
                const AnomalyKind akind =
                    (end - start + 1) <= 3 ? AnomalyKind::point : AnomalyKind::contextual;
                spec.anomalies.push_back({AnomalyInterval(start, end, akind), mag});
            }
            channels.push_back(synthesize_channel(spec));
        }
    }

    write_dataset(cfg.dataset, channels);

    SynthSummary summary;
    summary.channels = channels.size();
    for (const auto& ch : channels) summary.anomalies += ch.labels.size();
    return summary;
}

struct ClusterSummary {
    std::size_t channels = 0;
    std::size_t chosen_k = 0;
    ElbowCurve elbow;
    ClusterModel model;
    std::vector<std::string> ids;
};

/// Signatures, elbow selection, K-means at the chosen k and the PCA
/// projection; writes the four plot-ready CSV artifacts.
inline ClusterSummary run_cluster(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    LoadResult loaded = pipeline_detail::load_dataset_checked(cfg);
    if (loaded.channels.empty()) throw std::runtime_error("cluster: dataset has no channels");

    std::vector<ChannelSignature> signatures(loaded.channels.size());
    parallel_for(loaded.channels.size(), cfg.parallel, [&](std::size_t i) {
        const auto target = loaded.channels[i].train_target();
        signatures[i] = compute_signature(target);
    });

    KMeansParams params;
    params.restarts = cfg.clustering.restarts;

    std::set<std::array<double, 4>> distinct;
    for (const auto& s : signatures) distinct.insert(s.as_array());
    const std::size_t k_max = std::min(cfg.clustering.k_max, distinct.size());
    if (k_max < cfg.clustering.k_max)
        std::cerr << "warning: k_max clamped to " << k_max << " (distinct signatures)\n";

    ClusterSummary summary;
    summary.channels = loaded.channels.size();
    summary.elbow = elbow_select(signatures, cfg.clustering.k_min, k_max,
                                 derive_seed(cfg.seed, "cluster"), params);
    summary.chosen_k = summary.elbow.chosen_k;
    summary.model = kmeans_fit(signatures, summary.chosen_k, derive_seed(cfg.seed, "cluster"),
                               params);
    Projection2D projection = pca_project(signatures);

    fs::create_directories(cfg.output);
    for (const auto& ch : loaded.channels) summary.ids.push_back(ch.id);

    {
        std::ofstream out(fs::path(cfg.output) / "signatures.csv");
        CsvWriter w(out, {"id", "mean", "std", "skew", "kurtosis"});
        for (std::size_t i = 0; i < signatures.size(); ++i)
            w.row({summary.ids[i], format_double(signatures[i].mean),
                   format_double(signatures[i].std), format_double(signatures[i].skewness),
                   format_double(signatures[i].kurtosis)});
    }
    {
        std::ofstream out(fs::path(cfg.output) / "clusters.csv");
        CsvWriter w(out, {"id", "cluster"});
        for (std::size_t i = 0; i < signatures.size(); ++i)
            w.row({summary.ids[i], std::to_string(summary.model.assignments[i])});
    }
    {
        std::ofstream out(fs::path(cfg.output) / "elbow.csv");
        CsvWriter w(out, {"k", "distortion"});
        for (const auto& [k, distortion] : summary.elbow.entries)
            w.row({std::to_string(k), format_double(distortion)});
    }
    {
        std::ofstream out(fs::path(cfg.output) / "pca.csv");
        CsvWriter w(out, {"id", "x", "y", "cluster"});
        for (std::size_t i = 0; i < signatures.size(); ++i)
            w.row({summary.ids[i], format_double(projection.points[i][0]),
                   format_double(projection.points[i][1]),
                   std::to_string(summary.model.assignments[i])});
    }
    return summary;
}

struct TrainSummary {
    std::size_t models = 0;
    double total_seconds = 0.0;
};

/// Trains every configured architecture on every channel and writes one
/// model archive per (architecture, channel) plus the run ledger.
inline TrainSummary run_train(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    LoadResult loaded = pipeline_detail::load_dataset_checked(cfg);
    if (loaded.channels.empty()) throw std::runtime_error("train: dataset has no channels");

    const auto archs = cfg.architectures.empty() ? RunConfig::default_architectures()
                                                 : cfg.architectures;

    pipeline_detail::LedgerStage times;
    times.started = pipeline_detail::timestamp_now();

    struct Job {
        std::size_t arch;
        std::size_t channel;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < archs.size(); ++a)
        for (std::size_t c = 0; c < loaded.channels.size(); ++c) jobs.push_back({a, c});

    for (const auto& arch : archs)
        fs::create_directories(fs::path(cfg.output) / "models" / arch.name);

    std::vector<double> seconds(jobs.size(), 0.0);
    parallel_for(jobs.size(), cfg.parallel, [&](std::size_t j) {
        const auto& arch = archs[jobs[j].arch];
        const auto& channel = loaded.channels[jobs[j].channel];
        ForecasterSpec spec = arch.spec;
        spec.seed = channel_training_seed(cfg, arch.name, channel.id);
        TrainedForecaster tf = train(spec, channel);
        seconds[j] = tf.training_seconds;
        const fs::path path = fs::path(cfg.output) / "models" / arch.name / (channel.id + ".json");
        save_forecaster(path.string(), tf);
    });

    times.finished = pipeline_detail::timestamp_now();

    std::map<std::string, std::map<std::string, double>> training;
    TrainSummary summary;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        training[archs[jobs[j].arch].name][loaded.channels[jobs[j].channel].id] = seconds[j];
        summary.total_seconds += seconds[j];
    }
    summary.models = jobs.size();
    pipeline_detail::update_ledger(cfg, "train", times, &training);
    return summary;
}

struct DetectSummary {
    std::size_t channels = 0;
    std::size_t detections = 0;
};

/// Runs the detector for every stored model and writes per-channel detection
/// CSVs under detections/<architecture>/<id>.csv.
inline DetectSummary run_detect(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    LoadResult loaded = pipeline_detail::load_dataset_checked(cfg);

    const fs::path models_dir = fs::path(cfg.output) / "models";
    if (!fs::is_directory(models_dir))
        throw std::runtime_error("detect: no models under '" + models_dir.string() +
                                 "' (run `tal train` first)");

    std::vector<std::string> arch_names;
    for (const auto& entry : fs::directory_iterator(models_dir))
        if (entry.is_directory()) arch_names.push_back(entry.path().filename().string());
    std::sort(arch_names.begin(), arch_names.end());
    if (arch_names.empty()) throw std::runtime_error("detect: models directory is empty");

    struct Job {
        std::size_t arch;
        std::size_t channel;
    };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < arch_names.size(); ++a)
        for (std::size_t c = 0; c < loaded.channels.size(); ++c) jobs.push_back({a, c});

    for (const auto& name : arch_names)
        fs::create_directories(fs::path(cfg.output) / "detections" / name);

    pipeline_detail::LedgerStage times;
    times.started = pipeline_detail::timestamp_now();

    std::vector<std::size_t> counts(jobs.size(), 0);
    parallel_for(jobs.size(), cfg.parallel, [&](std::size_t j) {
        const auto& name = arch_names[jobs[j].arch];
        const auto& channel = loaded.channels[jobs[j].channel];
        const fs::path model_path = models_dir / name / (channel.id + ".json");
        if (!fs::exists(model_path))
            throw std::runtime_error("detect: missing model archive '" + model_path.string() + "'");
        TrainedForecaster tf = load_forecaster(model_path.string());
        DetectionResult res = detect_channel(tf, channel, cfg.detector);
        counts[j] = res.anomalies.size();

        std::ofstream out(fs::path(cfg.output) / "detections" / name / (channel.id + ".csv"));
        CsvWriter w(out, {"start", "end", "peak_error", "epsilon", "z"});
        for (const auto& a : res.anomalies)
            w.row({std::to_string(a.interval.start), std::to_string(a.interval.end),
                   format_double(a.peak_error), format_double(res.epsilon),
                   format_double(res.z)});
    });

    times.finished = pipeline_detail::timestamp_now();
    pipeline_detail::update_ledger(cfg, "detect", times, nullptr);

    DetectSummary summary;
    summary.channels = loaded.channels.size();
    for (auto c : counts) summary.detections += c;
    return summary;
}

struct EvaluateSummary {
    std::vector<ChannelResult> results;
    ClusterReport cluster_report;
    EnsembleSelection ensemble;
};

namespace pipeline_detail {

inline std::vector<AnomalyInterval> read_detection_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open detections '" + path + "'");
    std::vector<AnomalyInterval> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        if (first) { first = false; continue; }
        auto fields = split_csv_line(line);
        if (fields.size() < 2) throw std::runtime_error(path + ": malformed row '" + line + "'");
        out.emplace_back(static_cast<std::size_t>(parse_int(fields[0], path)),
                         static_cast<std::size_t>(parse_int(fields[1], path)));
    }
    return out;
}

}  // namespace pipeline_detail

/// Scores stored detections against the dataset labels, aggregates per
/// architecture and per cluster, selects the ensemble and writes the report
/// artifacts (results_by_architecture.csv, results_by_cluster.csv,
/// ensemble.json).
inline EvaluateSummary run_evaluate(const RunConfig& cfg) {
    namespace fs = std::filesystem;
    LoadResult loaded = pipeline_detail::load_dataset_checked(cfg);

    std::size_t labelled = 0;
    for (const auto& ch : loaded.channels) labelled += ch.labels.size();
    if (labelled == 0)
        throw std::runtime_error("evaluate: dataset has no labelled anomalies to score against");

    const fs::path det_dir = fs::path(cfg.output) / "detections";
    if (!fs::is_directory(det_dir))
        throw std::runtime_error("evaluate: no detections under '" + det_dir.string() +
                                 "' (run `tal detect` first)");

    const fs::path ledger_path = fs::path(cfg.output) / "ledger.json";
    if (!fs::exists(ledger_path))
        throw std::runtime_error("evaluate: missing ledger '" + ledger_path.string() + "'");
    nlohmann::json ledger;
    {
        std::ifstream in(ledger_path);
        in >> ledger;
    }

    auto assignments = pipeline_detail::read_cluster_assignments(
        (fs::path(cfg.output) / "clusters.csv").string());

    std::vector<std::string> arch_names;
    for (const auto& entry : fs::directory_iterator(det_dir))
        if (entry.is_directory()) arch_names.push_back(entry.path().filename().string());
    std::sort(arch_names.begin(), arch_names.end());
    if (arch_names.empty()) throw std::runtime_error("evaluate: detections directory is empty");

    EvaluateSummary summary;
    for (const auto& name : arch_names) {
        for (const auto& channel : loaded.channels) {
            const fs::path path = det_dir / name / (channel.id + ".csv");
            if (!fs::exists(path))
                throw std::runtime_error("evaluate: missing detections '" + path.string() + "'");
            const auto predicted = pipeline_detail::read_detection_csv(path.string());

            ChannelResult r;
            r.channel = channel.id;
            r.architecture = name;
            r.anomaly_confusion = match_anomalies(predicted, channel.labels);
            r.point_confusion = point_confusion(predicted, channel.labels, channel.test.rows);
            if (ledger.contains("training_seconds") &&
                ledger["training_seconds"].contains(name) &&
                ledger["training_seconds"][name].contains(channel.id))
                r.training_seconds = ledger["training_seconds"][name][channel.id].get<double>();
            summary.results.push_back(std::move(r));
        }
    }

    summary.cluster_report = aggregate_cluster(summary.results, assignments);
    summary.ensemble = select_ensemble(summary.cluster_report);

    // results_by_architecture.csv -- one row per architecture, totals across
    // all channels, sorted by F1 anomaly descending.
    struct ArchTotals {
        Confusion anomaly, point;
        double seconds = 0.0;
        std::size_t channels = 0;
    };
    std::map<std::string, ArchTotals> totals;
    for (const auto& r : summary.results) {
        auto& t = totals[r.architecture];
        t.anomaly += r.anomaly_confusion;
        t.point += r.point_confusion;
        t.seconds += r.training_seconds;
        ++t.channels;
    }
    std::vector<std::pair<std::string, ArchTotals>> rows(totals.begin(), totals.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        const double fa = f1_percent(a.second.anomaly).value_or(-1.0);
        const double fb = f1_percent(b.second.anomaly).value_or(-1.0);
        if (fa != fb) return fa > fb;
        return a.first < b.first;
    });
    {
        std::ofstream out(fs::path(cfg.output) / "results_by_architecture.csv");
        CsvWriter w(out, {"architecture", "total_seconds", "avg_seconds_per_channel", "f1_point",
                          "tp", "fp", "fn", "f1_anomaly"});
        for (const auto& [name, t] : rows) {
            w.row({name, format_double(t.seconds),
                   format_double(t.channels ? t.seconds / static_cast<double>(t.channels) : 0.0),
                   pipeline_detail::opt_f1_str(f1_percent(t.point)), std::to_string(t.anomaly.tp),
                   std::to_string(t.anomaly.fp), std::to_string(t.anomaly.fn),
                   pipeline_detail::opt_f1_str(f1_percent(t.anomaly))});
        }
    }
    {
        std::ofstream out(fs::path(cfg.output) / "results_by_cluster.csv");
        CsvWriter w(out, {"architecture", "cluster", "f1_point", "f1_anomaly"});
        for (const auto& e : summary.cluster_report.entries)
            w.row({e.architecture, std::to_string(e.cluster),
                   pipeline_detail::opt_f1_str(e.f1_point),
                   pipeline_detail::opt_f1_str(e.f1_anomaly)});
    }
    {
        nlohmann::json j;
        for (const auto& [cluster, choice] : summary.ensemble.best)
            j["clusters"][std::to_string(cluster)] = {{"architecture", choice.architecture},
                                                      {"f1_anomaly", choice.f1_anomaly}};
        j["mean_f1_anomaly"] = summary.ensemble.mean_f1;
        std::ofstream out(fs::path(cfg.output) / "ensemble.json");
        out << j.dump(2) << '\n';
    }
    return summary;
}

/// Prints a compact text report from the evaluate artifacts.
inline void run_report(const RunConfig& cfg, std::ostream& out) {
    namespace fs = std::filesystem;
    const fs::path arch_csv = fs::path(cfg.output) / "results_by_architecture.csv";
    const fs::path cluster_csv = fs::path(cfg.output) / "results_by_cluster.csv";
    const fs::path ensemble_json = fs::path(cfg.output) / "ensemble.json";
    if (!fs::exists(arch_csv) || !fs::exists(cluster_csv) || !fs::exists(ensemble_json))
        throw std::runtime_error("report: missing evaluate outputs under '" + cfg.output +
                                 "' (run `tal evaluate` first)");

    auto dump_csv = [&](const fs::path& path, const std::string& title) {
        out << "== " << title << " ==\n";
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            auto fields = split_csv_line(line);
            for (std::size_t i = 0; i < fields.size(); ++i)
                out << (i ? "  " : "") << fields[i];
            out << '\n';
        }
        out << '\n';
    };
    dump_csv(arch_csv, "results by architecture");
    dump_csv(cluster_csv, "results by cluster");

    nlohmann::json j;
    {
        std::ifstream in(ensemble_json);
        in >> j;
    }
    out << "== ensemble ==\n";
    if (j.contains("clusters"))
        for (const auto& [cluster, choice] : j["clusters"].items())
            out << "cluster " << cluster << " -> " << choice["architecture"].get<std::string>()
                << " (F1 " << choice["f1_anomaly"].get<double>() << ")\n";
    out << "mean F1 anomaly: " << j["mean_f1_anomaly"].get<double>() << '\n';
}

}  // namespace tal
