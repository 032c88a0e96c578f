// tal -- telemetry anomaly lab
//
// Orchestrates the pipeline end to end: synthesize or load a channel
// dataset, cluster channels by moment signature, train one forecaster per
// channel, run the dynamic-threshold detector, and score the detections.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tal/pipeline.hpp"

namespace {

struct FlagOverrides {
    std::string config_path;
    std::string dataset;
    std::string output;
    std::uint64_t seed = 0;
    std::size_t parallel = 0;
    bool seed_set = false;
};

/// Precedence: flag > TAL_OUTPUT_DIR > config file > built-in default.
tal::RunConfig resolve_config(const FlagOverrides& flags, CLI::App* sub) {
    tal::RunConfig cfg;
    if (!flags.config_path.empty()) cfg = tal::load_config(flags.config_path);
    if (const char* env = std::getenv("TAL_OUTPUT_DIR"); env && *env) cfg.output = env;
    if (sub->count("--dataset")) cfg.dataset = flags.dataset;
    if (sub->count("--output")) cfg.output = flags.output;
    if (sub->count("--seed")) cfg.seed = flags.seed;
    if (sub->count("--parallel")) cfg.parallel = flags.parallel;
    return cfg;
}

void add_common_flags(CLI::App* sub, FlagOverrides& flags) {
    sub->add_option("--config", flags.config_path, "JSON config file");
    sub->add_option("--dataset", flags.dataset, "dataset root directory");
    sub->add_option("--output", flags.output, "output directory");
    sub->add_option("--seed", flags.seed, "global seed");
    sub->add_option("--parallel", flags.parallel, "worker count (defaults to 1)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tal -- telemetry anomaly-detection workbench"};
    app.require_subcommand(1);

    FlagOverrides flags;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    add_common_flags(synth, flags);
    bool force = false;
    bool clean = false;
    std::size_t per_kind = 0;
    synth->add_flag("--force", force, "overwrite an existing non-empty dataset directory");
    synth->add_flag("--clean", clean, "do not plant anomalies");
    synth->add_option("--per-kind", per_kind, "channels per behaviour kind");

    auto* cluster = app.add_subcommand("cluster", "fingerprint and cluster channels");
    add_common_flags(cluster, flags);

    auto* train = app.add_subcommand("train", "train one forecaster per channel");
    add_common_flags(train, flags);
    std::vector<std::string> arch_flags;
    train->add_option("--arch", arch_flags, "architecture preset (repeatable)");

    auto* detect = app.add_subcommand("detect", "run the threshold detector");
    add_common_flags(detect, flags);

    auto* evaluate = app.add_subcommand("evaluate", "score detections against labels");
    add_common_flags(evaluate, flags);

    auto* report = app.add_subcommand("report", "print the evaluation summary");
    add_common_flags(report, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        tal::RunConfig cfg = resolve_config(flags, sub);

        if (sub == synth) {
            if (force) cfg.synth.force = true;
            if (clean) cfg.synth.plant_anomalies = false;
            if (per_kind > 0) cfg.synth.channels_per_kind = per_kind;
            auto s = tal::run_synth(cfg);
            std::cout << "wrote " << s.channels << " channels (" << s.anomalies
                      << " planted anomalies) under " << cfg.dataset << '\n';
        } else if (sub == cluster) {
            auto s = tal::run_cluster(cfg);
            std::cout << "clustered " << s.channels << " channels; elbow chose k=" << s.chosen_k
                      << "; artifacts in " << cfg.output << '\n';
        } else if (sub == train) {
            if (!arch_flags.empty()) {
                cfg.architectures.clear();
                for (const auto& a : arch_flags) {
                    tal::ArchitectureConfig ac;
                    ac.name = a;
                    ac.spec = tal::preset_spec(tal::forecaster_family_from_string(a));
                    cfg.architectures.push_back(ac);
                }
            }
            auto s = tal::run_train(cfg);
            std::cout << "trained " << s.models << " models in " << s.total_seconds
                      << " s (wall clock per training, summed)\n";
        } else if (sub == detect) {
            auto s = tal::run_detect(cfg);
            std::cout << "detected " << s.detections << " sequences across " << s.channels
                      << " channels\n";
        } else if (sub == evaluate) {
            auto s = tal::run_evaluate(cfg);
            std::cout << "evaluated " << s.results.size() << " (architecture, channel) pairs; "
                      << "ensemble mean F1 " << s.ensemble.mean_f1 << '\n';
        } else if (sub == report) {
            tal::run_report(cfg, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
