#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tal/metrics.hpp"

namespace tal {

/// Per-(channel, architecture) scoring record.
struct ChannelResult {
    std::string channel;
    std::string architecture;
    Confusion anomaly_confusion;
    Confusion point_confusion;
    double training_seconds = 0.0;
};

/// Summed confusions and recomputed F1s for one (architecture, cluster) cell.
struct ClusterEntry {
    std::string architecture;
    std::size_t cluster = 0;
    Confusion anomaly_confusion;
    Confusion point_confusion;
    std::optional<double> f1_anomaly;
    std::optional<double> f1_point;
    std::size_t channels = 0;
};

struct ClusterReport {
    std::vector<ClusterEntry> entries;  // grouped by cluster, ranked by F1 anomaly desc

    std::vector<const ClusterEntry*> cluster_ranking(std::size_t cluster) const {
        std::vector<const ClusterEntry*> out;
        for (const auto& e : entries)
            if (e.cluster == cluster) out.push_back(&e);
        return out;
    }
};

struct EnsembleChoice {
    std::string architecture;
    double f1_anomaly = 0.0;
};

/// Per-cluster winner routing plus the unweighted mean of the winning F1s.
struct EnsembleSelection {
    std::map<std::size_t, EnsembleChoice> best;
    double mean_f1 = 0.0;
};

/// Sums confusions across each cluster's member channels (micro aggregation:
/// sum first, then one F1 from the sums — never a mean of per-channel F1s)
/// and ranks architectures inside each cluster by F1 anomaly.
inline ClusterReport aggregate_cluster(const std::vector<ChannelResult>& results,
                                       const std::map<std::string, std::size_t>& assignments) {
    std::map<std::pair<std::string, std::size_t>, ClusterEntry> cells;
    for (const auto& r : results) {
        auto it = assignments.find(r.channel);
        if (it == assignments.end())
            throw std::invalid_argument("aggregate_cluster: channel '" + r.channel +
                                        "' has no cluster assignment");
        auto& cell = cells[{r.architecture, it->second}];
        cell.architecture = r.architecture;
        cell.cluster = it->second;
        cell.anomaly_confusion += r.anomaly_confusion;
        cell.point_confusion += r.point_confusion;
        ++cell.channels;
    }

    ClusterReport report;
    for (auto& [key, cell] : cells) {
        cell.f1_anomaly = f1_percent(cell.anomaly_confusion);
        cell.f1_point = f1_percent(cell.point_confusion);
        report.entries.push_back(cell);
    }
    std::sort(report.entries.begin(), report.entries.end(),
              [](const ClusterEntry& a, const ClusterEntry& b) {
                  if (a.cluster != b.cluster) return a.cluster < b.cluster;
                  const double fa = a.f1_anomaly.value_or(-1.0);
                  const double fb = b.f1_anomaly.value_or(-1.0);
                  if (fa != fb) return fa > fb;
                  return a.architecture < b.architecture;
              });
    return report;
}

/// Picks the best architecture per cluster by F1 anomaly (ties to the
/// lexicographically smaller architecture id) and averages the winners.
inline EnsembleSelection select_ensemble(const ClusterReport& report) {
    if (report.entries.empty()) throw std::invalid_argument("select_ensemble: empty report");

    EnsembleSelection sel;
    for (const auto& e : report.entries) {
        const double f1 = e.f1_anomaly.value_or(0.0);
        auto it = sel.best.find(e.cluster);
        if (it == sel.best.end() || f1 > it->second.f1_anomaly ||
            (f1 == it->second.f1_anomaly && e.architecture < it->second.architecture)) {
            sel.best[e.cluster] = {e.architecture, f1};
        }
    }
    double sum = 0.0;
    for (const auto& [cluster, choice] : sel.best) sum += choice.f1_anomaly;
    sel.mean_f1 = sum / static_cast<double>(sel.best.size());
    return sel;
}

}  // namespace tal
