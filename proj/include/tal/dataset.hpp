#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tal/csv.hpp"
#include "tal/npy.hpp"
#include "tal/telemetry.hpp"

namespace tal {

namespace fs = std::filesystem;

/// One row of the label table.
struct LabelRow {
    std::string spacecraft;
    std::vector<AnomalyInterval> intervals;
    std::size_t num_values = 0;  // declared test length
};

using LabelTable = std::map<std::string, LabelRow>;

namespace dataset_detail {

/// Parses "[[100, 200], [300, 400]]" into (start, end) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> parse_interval_list(
    const std::string& text, std::size_t row_no) {
    const std::string where = "label row " + std::to_string(row_no);
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::vector<long long> numbers;
    std::string digits;
    int depth = 0;
    bool expect_pairs = false;
    for (char c : text) {
        if (c == '[') { ++depth; expect_pairs = true; continue; }
        if ((c >= '0' && c <= '9') || c == '-') { digits.push_back(c); continue; }
        if (!digits.empty()) {
            numbers.push_back(parse_int(digits, where));
            digits.clear();
        }
        if (c == ']') { --depth; continue; }
        if (c == ',' || c == ' ' || c == '\t') continue;
        throw std::runtime_error(where + ": malformed interval list '" + text + "'");
    }
    if (!digits.empty()) numbers.push_back(parse_int(digits, where));
    if (depth != 0 || !expect_pairs || numbers.size() % 2 != 0)
        throw std::runtime_error(where + ": malformed interval list '" + text + "'");
    for (std::size_t i = 0; i + 1 < numbers.size(); i += 2) {
        if (numbers[i] < 0 || numbers[i + 1] < 0)
            throw std::runtime_error(where + ": negative interval bound");
        if (numbers[i] > numbers[i + 1])
            throw std::runtime_error(where + ": interval start " + std::to_string(numbers[i]) +
                                     " > end " + std::to_string(numbers[i + 1]));
        out.emplace_back(static_cast<std::size_t>(numbers[i]),
                         static_cast<std::size_t>(numbers[i + 1]));
    }
    return out;
}

inline std::vector<std::string> parse_class_list(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == '[' || c == ']') continue;
        if (c == ',') {
            out.emplace_back(trim(current));
            current.clear();
            continue;
        }
        current.push_back(c);
    }
    auto last = trim(current);
    if (!last.empty()) out.emplace_back(last);
    return out;
}

inline Matrix load_array(const fs::path& path) {
    if (path.extension() == ".npy") return load_npy(path.string());
    return read_csv_matrix(path.string());
}

}  // namespace dataset_detail

/// Parses the label table. Columns: chan_id,spacecraft,anomaly_sequences,
/// class,num_values. Classes pair with intervals positionally; rows with
/// fewer classes than intervals leave the tail unspecified, and unknown
/// class strings map to unspecified.
inline LabelTable parse_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open label table '" + path + "'");

    LabelTable table;
    std::string line;
    std::size_t row_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            first = false;
            if (!fields.empty() && fields[0] == "chan_id") continue;  // header
        }
        if (fields.size() < 5)
            throw std::runtime_error(path + ": label row " + std::to_string(row_no) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields, expected 5");
        LabelRow row;
        row.spacecraft = fields[1];
        const auto pairs = dataset_detail::parse_interval_list(fields[2], row_no);
        if (pairs.empty())
            throw std::runtime_error(path + ": label row " + std::to_string(row_no) +
                                     " declares no anomaly sequences");
        const auto classes = dataset_detail::parse_class_list(fields[3]);
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            AnomalyKind kind = i < classes.size() ? anomaly_kind_from_string(classes[i])
                                                  : AnomalyKind::unspecified;
            row.intervals.emplace_back(pairs[i].first, pairs[i].second, kind);
        }
        row.num_values = static_cast<std::size_t>(
            parse_int(fields[4], path + ": label row " + std::to_string(row_no)));
        table[fields[0]] = std::move(row);
    }
    return table;
}

struct LoadResult {
    DatasetManifest manifest;
    std::vector<TelemetryChannel> channels;
    std::vector<std::string> warnings;
};

/// Loads a dataset root: train/<id>.{npy,csv}, test/<id>.{npy,csv} and
/// labeled_anomalies.csv. Every id must appear in both directories; a row in
/// the label table whose files are missing is a hard error naming the
/// channel. Channels on disk without a label row load with an empty label
/// list. Channels come back sorted by id.
inline LoadResult load_dataset(const std::string& root) {
    const fs::path base(root);
    const fs::path train_dir = base / "train";
    const fs::path test_dir = base / "test";
    if (!fs::is_directory(train_dir) || !fs::is_directory(test_dir))
        throw std::runtime_error("dataset root '" + root + "' must contain train/ and test/");

    auto scan = [](const fs::path& dir) {
        std::map<std::string, fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension();
            if (ext != ".npy" && ext != ".csv") continue;
            files[entry.path().stem().string()] = entry.path();
        }
        return files;
    };
    const auto train_files = scan(train_dir);
    const auto test_files = scan(test_dir);

    LabelTable labels;
    const fs::path label_path = base / "labeled_anomalies.csv";
    if (fs::exists(label_path)) labels = parse_labels(label_path.string());

    for (const auto& [id, row] : labels) {
        if (!train_files.count(id))
            throw std::runtime_error("labeled channel '" + id + "' has no train file");
        if (!test_files.count(id))
            throw std::runtime_error("labeled channel '" + id + "' has no test file");
    }
    for (const auto& [id, path] : train_files)
        if (!test_files.count(id))
            throw std::runtime_error("channel '" + id + "' present in train/ but not test/");
    for (const auto& [id, path] : test_files)
        if (!train_files.count(id))
            throw std::runtime_error("channel '" + id + "' present in test/ but not train/");

    LoadResult result;
    for (const auto& [id, train_path] : train_files) {
        TelemetryChannel ch;
        ch.id = id;
        ch.train = dataset_detail::load_array(train_path);
        ch.test = dataset_detail::load_array(test_files.at(id));
        ch.target_index = 0;
        auto it = labels.find(id);
        if (it != labels.end()) {
            ch.spacecraft = it->second.spacecraft;
            ch.labels = it->second.intervals;
            if (it->second.num_values != ch.test.rows)
                result.warnings.push_back("channel '" + id + "': label table declares " +
                                          std::to_string(it->second.num_values) +
                                          " test values, file has " +
                                          std::to_string(ch.test.rows));
        } else {
            ch.spacecraft = "UNKNOWN";
        }
        for (const auto& iv : ch.labels)
            if (iv.end >= ch.test.rows)
                throw std::runtime_error("channel '" + id + "': label interval [" +
                                         std::to_string(iv.start) + "," + std::to_string(iv.end) +
                                         "] exceeds test length " + std::to_string(ch.test.rows));
        ch.validate();

        bool out_of_range = false;
        for (double v : ch.train.data)
            if (v < -1.0 || v > 1.0) { out_of_range = true; break; }
        if (!out_of_range)
            for (double v : ch.test.data)
                if (v < -1.0 || v > 1.0) { out_of_range = true; break; }
        if (out_of_range)
            result.warnings.push_back("channel '" + id + "': values outside [-1, 1]");

        result.channels.push_back(std::move(ch));
    }

    result.manifest = make_manifest(result.channels);
    return result;
}

/// Writes channels in the ingest layout (train/test NPY float64 plus the
/// label table). Channels without labels get no label row.
inline void write_dataset(const std::string& root, const std::vector<TelemetryChannel>& channels) {
    const fs::path base(root);
    fs::create_directories(base / "train");
    fs::create_directories(base / "test");

    std::ofstream labels(base / "labeled_anomalies.csv");
    if (!labels) throw std::runtime_error("cannot write label table under '" + root + "'");
    labels << "chan_id,spacecraft,anomaly_sequences,class,num_values\n";

    for (const auto& ch : channels) {
        save_npy((base / "train" / (ch.id + ".npy")).string(), ch.train);
        save_npy((base / "test" / (ch.id + ".npy")).string(), ch.test);
        if (ch.labels.empty()) continue;
        labels << ch.id << ',' << ch.spacecraft << ",\"[";
        for (std::size_t i = 0; i < ch.labels.size(); ++i) {
            if (i) labels << ", ";
            labels << '[' << ch.labels[i].start << ", " << ch.labels[i].end << ']';
        }
        labels << "]\",\"[";
        for (std::size_t i = 0; i < ch.labels.size(); ++i) {
            if (i) labels << ", ";
            labels << to_string(ch.labels[i].kind);
        }
        labels << "]\"," << ch.test.rows << '\n';
    }
}

}  // namespace tal
