#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tal/matrix.hpp"
#include "tal/nn.hpp"
#include "tal/rng.hpp"
#include "tal/telemetry.hpp"
#include "tal/windows.hpp"

namespace tal {

enum class ForecasterFamily { persistence, linear_ar, mlp, recurrent };

inline const char* to_string(ForecasterFamily f) {
    switch (f) {
        case ForecasterFamily::persistence: return "persistence";
        case ForecasterFamily::linear_ar: return "linear_ar";
        case ForecasterFamily::mlp: return "mlp";
        default: return "recurrent";
    }
}

inline ForecasterFamily forecaster_family_from_string(const std::string& s) {
    if (s == "persistence") return ForecasterFamily::persistence;
    if (s == "linear_ar") return ForecasterFamily::linear_ar;
    if (s == "mlp") return ForecasterFamily::mlp;
    if (s == "recurrent") return ForecasterFamily::recurrent;
    throw std::invalid_argument("unknown forecaster family '" + s + "'");
}

/// Hyperparameters of one per-channel forecaster. Horizon is fixed at one
/// step; the detector downstream assumes single-step alignment.
struct ForecasterSpec {
    ForecasterFamily family = ForecasterFamily::linear_ar;
    std::size_t window = 100;
    std::size_t horizon = 1;
    std::size_t hidden = 32;     // neural families only
    std::size_t epochs = 60;
    double base_lr = 0.01;
    std::size_t lr_patience = 1;
    double lr_factor = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        if (window < 1) throw std::invalid_argument("ForecasterSpec: window must be >= 1");
        if (horizon != 1) throw std::invalid_argument("ForecasterSpec: horizon is fixed at 1");
        if (lr_factor <= 0.0 || lr_factor >= 1.0)
            throw std::invalid_argument("ForecasterSpec: lr_factor must be in (0,1)");
        if ((family == ForecasterFamily::mlp || family == ForecasterFamily::recurrent) && hidden < 1)
            throw std::invalid_argument("ForecasterSpec: hidden must be >= 1 for neural families");
    }
};

/// Family presets used by the CLI. Window sizes are desk-scale; the defaults
/// deliberately stay small enough that training 10..100 channels is a
/// seconds-scale affair on a laptop core.
inline ForecasterSpec preset_spec(ForecasterFamily family) {
    ForecasterSpec s;
    s.family = family;
    switch (family) {
        case ForecasterFamily::persistence:
            s.window = 1;
            s.epochs = 0;
            break;
        case ForecasterFamily::linear_ar:
            s.window = 30;
            s.epochs = 80;
            s.base_lr = 0.008;
            break;
        case ForecasterFamily::mlp:
            s.window = 30;
            s.hidden = 32;
            s.epochs = 40;
            s.base_lr = 0.02;
            break;
        case ForecasterFamily::recurrent:
            s.window = 30;
            s.hidden = 12;
            s.epochs = 12;
            s.base_lr = 0.04;
            break;
    }
    return s;
}

inline constexpr std::size_t kBatchSize = 64;

/// One-cycle learning-rate schedule (linear warmup over the first 30% of
/// steps, cosine decay after) whose ceiling is cut by `lr_factor` whenever
/// the epoch loss plateaus: relative improvement below `threshold` for
/// `patience` consecutive epochs.
class OneCycleSchedule {
public:
    OneCycleSchedule(double base_lr, std::size_t total_steps, double lr_factor,
                     std::size_t patience, double threshold = 1e-4)
        : base_lr_(base_lr), total_steps_(total_steps), lr_factor_(lr_factor),
          patience_(patience == 0 ? 1 : patience), threshold_(threshold) {}

    double lr(std::size_t step) const {
        const double warm = 0.3 * static_cast<double>(total_steps_);
        double shape;
        if (static_cast<double>(step) < warm) {
            shape = base_lr_ * (static_cast<double>(step) + 1.0) / warm;
        } else if (total_steps_ <= static_cast<std::size_t>(warm) + 1) {
            shape = base_lr_;
        } else {
            const double progress = (static_cast<double>(step) - warm) /
                                    (static_cast<double>(total_steps_) - warm);
            shape = base_lr_ * 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
        }
        return shape * ceiling_scale_;
    }

    /// Feeds one epoch's training loss; returns true when the plateau rule
    /// fired (ceiling multiplied by lr_factor).
    bool on_epoch_end(double loss) {
        bool fired = false;
        if (has_prev_) {
            const double rel = (prev_loss_ - loss) / std::max(std::abs(prev_loss_), 1e-12);
            if (rel < threshold_) {
                if (++streak_ >= patience_) {
                    ceiling_scale_ *= lr_factor_;
                    streak_ = 0;
                    fired = true;
                }
            } else {
                streak_ = 0;
            }
        }
        prev_loss_ = loss;
        has_prev_ = true;
        return fired;
    }

    double ceiling_scale() const { return ceiling_scale_; }

private:
    double base_lr_;
    std::size_t total_steps_;
    double lr_factor_;
    std::size_t patience_;
    double threshold_;
    double ceiling_scale_ = 1.0;
    double prev_loss_ = 0.0;
    bool has_prev_ = false;
    std::size_t streak_ = 0;
};

/// Persistence "model": predicts the previous target value. Needs only the
/// target column index.
struct PersistenceModel {
    std::size_t input_dim = 0;
    std::size_t target_index = 0;
};

/// Linear autoregressive model over the flattened window, plus bias.
struct LinearModel {
    std::size_t input_dim = 0;  // w * D
    std::vector<double> weights;
    std::vector<double> bias{0.0};
    std::vector<double> gweights, gbias{0.0};

    LinearModel() = default;
    LinearModel(std::size_t n) : input_dim(n), weights(n, 0.0), gweights(n, 0.0) {}

    double forward(std::span<const double> x) const {
        double y = bias[0];
        for (std::size_t i = 0; i < input_dim; ++i) y += weights[i] * x[i];
        return y;
    }

    double forward_backward(std::span<const double> x, double dy_scale, double target) {
        const double y = forward(x);
        const double err = y - target;
        const double dy = dy_scale * 2.0 * err;
        gbias[0] += dy;
        for (std::size_t i = 0; i < input_dim; ++i) gweights[i] += dy * x[i];
        return err * err;
    }

    std::vector<ParamView> params() {
        return {{"weights", &weights, &gweights}, {"bias", &bias, &gbias}};
    }
};

/// A trained per-channel forecaster: the spec it was built from, the fitted
/// weights, the wall-clock training duration (feeds the F1/s metric) and the
/// per-epoch loss trace.
struct TrainedForecaster {
    ForecasterSpec spec;
    std::size_t input_cols = 0;  // D of the training matrix
    std::size_t target_index = 0;
    std::variant<PersistenceModel, LinearModel, MlpModel, GruModel> model;
    double training_seconds = 0.0;
    std::vector<double> loss_history;
};

namespace forecast_detail {

template <typename Model>
void sgd_train(Model& model, const WindowedDataset& ds, const ForecasterSpec& spec,
               std::vector<double>& loss_history, bool per_step_window /*GRU*/) {
    const std::size_t n = ds.count();
    const std::size_t steps_per_epoch = (n + kBatchSize - 1) / kBatchSize;
    OneCycleSchedule schedule(spec.base_lr, spec.epochs * steps_per_epoch, spec.lr_factor,
                              spec.lr_patience);

    Rng rng(derive_seed(spec.seed, "sgd"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    auto views = model.params();
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_sse = 0.0;
        for (std::size_t b = 0; b < n; b += kBatchSize) {
            const std::size_t count = std::min(kBatchSize, n - b);
            for (auto& v : views) std::fill(v.grads->begin(), v.grads->end(), 0.0);
            const double scale = 1.0 / static_cast<double>(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t idx = order[b + i];
                if constexpr (std::is_same_v<Model, GruModel>) {
                    epoch_sse += model.forward_backward(ds.input(idx), ds.window, scale,
                                                        ds.targets[idx]);
                } else {
                    epoch_sse += model.forward_backward(ds.input(idx), scale, ds.targets[idx]);
                }
            }
            const double lr = schedule.lr(step++);
            for (auto& v : views)
                for (std::size_t i = 0; i < v.values->size(); ++i)
                    (*v.values)[i] -= lr * (*v.grads)[i];
        }
        const double epoch_loss = epoch_sse / static_cast<double>(n);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error(std::string("training diverged (non-finite loss) at epoch ") +
                                     std::to_string(epoch) + " for family " +
                                     to_string(spec.family));
        loss_history.push_back(epoch_loss);
        schedule.on_epoch_end(epoch_loss);
    }
    (void)per_step_window;
}

}  // namespace forecast_detail

/// Trains one forecaster on a channel's training matrix. Deterministic given
/// (spec, data); the wall clock covers exactly this call.
inline TrainedForecaster train(const ForecasterSpec& spec, const Matrix& train_data,
                               std::size_t target_index) {
    spec.validate();
    if (target_index >= train_data.cols)
        throw std::invalid_argument("train: target index out of range");

    TrainedForecaster tf;
    tf.spec = spec;
    tf.input_cols = train_data.cols;
    tf.target_index = target_index;

    if (spec.family == ForecasterFamily::persistence) {
        tf.model = PersistenceModel{train_data.cols, target_index};
        tf.training_seconds = 0.0;
        return tf;
    }

    const auto t0 = std::chrono::steady_clock::now();
    WindowedDataset ds = make_windows(train_data, target_index, spec.window);
    const std::size_t flat = spec.window * train_data.cols;

    Rng init_rng(derive_seed(spec.seed, "init"));
    switch (spec.family) {
        case ForecasterFamily::linear_ar: {
            LinearModel m(flat);
            forecast_detail::sgd_train(m, ds, spec, tf.loss_history, false);
            tf.model = std::move(m);
            break;
        }
        case ForecasterFamily::mlp: {
            MlpModel m(flat, spec.hidden);
            m.init(init_rng);
            forecast_detail::sgd_train(m, ds, spec, tf.loss_history, false);
            tf.model = std::move(m);
            break;
        }
        case ForecasterFamily::recurrent: {
            GruModel m(train_data.cols, spec.hidden);
            m.init(init_rng);
            forecast_detail::sgd_train(m, ds, spec, tf.loss_history, true);
            tf.model = std::move(m);
            break;
        }
        default: break;
    }
    const auto t1 = std::chrono::steady_clock::now();
    tf.training_seconds = std::chrono::duration<double>(t1 - t0).count();
    return tf;
}

inline TrainedForecaster train(const ForecasterSpec& spec, const TelemetryChannel& channel) {
    return train(spec, channel.train, channel.target_index);
}

/// Predicts the test split's target one step ahead. The result has length
/// T_test - w and prediction i forecasts test index i + w.
inline std::vector<double> predict(const TrainedForecaster& tf, const Matrix& test_data) {
    if (test_data.cols != tf.input_cols)
        throw std::invalid_argument("predict: test matrix has " + std::to_string(test_data.cols) +
                                    " columns, forecaster expects " + std::to_string(tf.input_cols));
    const std::size_t w = tf.spec.window;
    if (test_data.rows <= w)
        throw std::invalid_argument("predict: test series shorter than window");

    const std::size_t n = test_data.rows - w;
    std::vector<double> out(n);

    if (std::holds_alternative<PersistenceModel>(tf.model)) {
        const auto& m = std::get<PersistenceModel>(tf.model);
        for (std::size_t i = 0; i < n; ++i) out[i] = test_data.at(i + w - 1, m.target_index);
        return out;
    }

    WindowedDataset ds = make_windows(test_data, tf.target_index, w);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::holds_alternative<LinearModel>(tf.model)) {
            out[i] = std::get<LinearModel>(tf.model).forward(ds.input(i));
        } else if (std::holds_alternative<MlpModel>(tf.model)) {
            out[i] = std::get<MlpModel>(tf.model).forward(ds.input(i));
        } else {
            out[i] = std::get<GruModel>(tf.model).forward(ds.input(i), w);
        }
    }
    return out;
}

/// Compares analytic gradients against central finite differences on a
/// sample batch. Returns the max relative error over >= `samples` randomly
/// chosen weights (all weights when the model is smaller than that).
inline double gradient_check(const ForecasterSpec& spec, const WindowedDataset& batch,
                             std::size_t samples = 100, double h = 1e-5) {
    spec.validate();
    if (spec.family != ForecasterFamily::mlp && spec.family != ForecasterFamily::recurrent)
        throw std::invalid_argument("gradient_check: neural families only");
    if (batch.count() == 0) throw std::invalid_argument("gradient_check: empty batch");

    const std::size_t flat = batch.window * batch.dims;
    Rng init_rng(derive_seed(spec.seed, "init"));
    std::variant<MlpModel, GruModel> holder;
    if (spec.family == ForecasterFamily::mlp) {
        MlpModel m(flat, spec.hidden);
        m.init(init_rng);
        holder = std::move(m);
    } else {
        GruModel m(batch.dims, spec.hidden);
        m.init(init_rng);
        holder = std::move(m);
    }

    auto views = std::visit([](auto& m) { return m.params(); }, holder);

    auto loss_only = [&]() {
        double sse = 0.0;
        std::visit(
            [&](auto& m) {
                using M = std::decay_t<decltype(m)>;
                for (std::size_t i = 0; i < batch.count(); ++i) {
                    double pred;
                    if constexpr (std::is_same_v<M, GruModel>)
                        pred = m.forward(batch.input(i), batch.window);
                    else
                        pred = m.forward(batch.input(i));
                    const double e = pred - batch.targets[i];
                    sse += e * e;
                }
            },
            holder);
        return sse / static_cast<double>(batch.count());
    };

    // Analytic pass: mean-squared-error over the batch.
    for (auto& v : views) std::fill(v.grads->begin(), v.grads->end(), 0.0);
    const double scale = 1.0 / static_cast<double>(batch.count());
    std::visit(
        [&](auto& m) {
            using M = std::decay_t<decltype(m)>;
            for (std::size_t i = 0; i < batch.count(); ++i) {
                if constexpr (std::is_same_v<M, GruModel>)
                    m.forward_backward(batch.input(i), batch.window, scale, batch.targets[i]);
                else
                    m.forward_backward(batch.input(i), scale, batch.targets[i]);
            }
        },
        holder);

    std::size_t total_weights = 0;
    for (const auto& v : views) total_weights += v.values->size();

    Rng pick(derive_seed(spec.seed, "gradcheck"));
    double max_rel = 0.0;
    const std::size_t checks = std::min(samples, total_weights);
    for (std::size_t s = 0; s < checks; ++s) {
        std::size_t flat_idx = samples >= total_weights
                                   ? s
                                   : static_cast<std::size_t>(pick.next_below(total_weights));
        std::size_t block = 0;
        while (flat_idx >= views[block].values->size()) {
            flat_idx -= views[block].values->size();
            ++block;
        }
        double& w = (*views[block].values)[flat_idx];
        const double analytic = (*views[block].grads)[flat_idx];
        const double saved = w;
        w = saved + h;
        const double lp = loss_only();
        w = saved - h;
        const double lm = loss_only();
        w = saved;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(analytic - fd) /
                           std::max({std::abs(analytic), std::abs(fd), 1e-8});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace tal
