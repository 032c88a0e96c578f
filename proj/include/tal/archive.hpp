#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tal/forecast.hpp"

namespace tal {

/// Self-describing single-file trained-model archive (JSON, version field
/// first). Weights are dumped as named arrays; shapes are implied by the
/// spec plus the stored input column count.

inline constexpr int kArchiveVersion = 1;

inline nlohmann::json spec_to_json(const ForecasterSpec& s) {
    return {
        {"family", to_string(s.family)}, {"window", s.window},   {"horizon", s.horizon},
        {"hidden", s.hidden},            {"epochs", s.epochs},   {"base_lr", s.base_lr},
        {"lr_patience", s.lr_patience},  {"lr_factor", s.lr_factor}, {"seed", s.seed},
    };
}

inline ForecasterSpec spec_from_json(const nlohmann::json& j) {
    ForecasterSpec s;
    s.family = forecaster_family_from_string(j.at("family").get<std::string>());
    s.window = j.at("window").get<std::size_t>();
    s.horizon = j.at("horizon").get<std::size_t>();
    s.hidden = j.at("hidden").get<std::size_t>();
    s.epochs = j.at("epochs").get<std::size_t>();
    s.base_lr = j.at("base_lr").get<double>();
    s.lr_patience = j.at("lr_patience").get<std::size_t>();
    s.lr_factor = j.at("lr_factor").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

inline nlohmann::json forecaster_to_json(TrainedForecaster& tf) {
    nlohmann::json weights = nlohmann::json::object();
    std::visit(
        [&](auto& model) {
            using M = std::decay_t<decltype(model)>;
            if constexpr (!std::is_same_v<M, PersistenceModel>) {
                for (auto& view : model.params()) weights[view.name] = *view.values;
            }
        },
        tf.model);
    return {
        {"format_version", kArchiveVersion},
        {"spec", spec_to_json(tf.spec)},
        {"input_cols", tf.input_cols},
        {"target_index", tf.target_index},
        {"weights", weights},
        {"training_seconds", tf.training_seconds},
        {"loss_history", tf.loss_history},
    };
}

inline TrainedForecaster forecaster_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != kArchiveVersion)
        throw std::runtime_error("unsupported model archive version");

    TrainedForecaster tf;
    tf.spec = spec_from_json(j.at("spec"));
    tf.input_cols = j.at("input_cols").get<std::size_t>();
    tf.target_index = j.at("target_index").get<std::size_t>();
    tf.training_seconds = j.at("training_seconds").get<double>();
    tf.loss_history = j.at("loss_history").get<std::vector<double>>();

    const auto& weights = j.at("weights");
    auto fill = [&](auto& model) {
        for (auto& view : model.params()) {
            const auto& arr = weights.at(view.name);
            if (arr.size() != view.values->size())
                throw std::runtime_error("model archive: array '" + view.name +
                                         "' has wrong length");
            *view.values = arr.template get<std::vector<double>>();
        }
    };

    switch (tf.spec.family) {
        case ForecasterFamily::persistence:
            tf.model = PersistenceModel{tf.input_cols, tf.target_index};
            break;
        case ForecasterFamily::linear_ar: {
            LinearModel m(tf.spec.window * tf.input_cols);
            fill(m);
            tf.model = std::move(m);
            break;
        }
        case ForecasterFamily::mlp: {
            MlpModel m(tf.spec.window * tf.input_cols, tf.spec.hidden);
            fill(m);
            tf.model = std::move(m);
            break;
        }
        case ForecasterFamily::recurrent: {
            GruModel m(tf.input_cols, tf.spec.hidden);
            fill(m);
            tf.model = std::move(m);
            break;
        }
    }
    return tf;
}

inline void save_forecaster(const std::string& path, TrainedForecaster& tf) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << forecaster_to_json(tf).dump(2) << '\n';
}

inline TrainedForecaster load_forecaster(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model archive '" + path + "'");
    nlohmann::json j;
    in >> j;
    return forecaster_from_json(j);
}

}  // namespace tal
