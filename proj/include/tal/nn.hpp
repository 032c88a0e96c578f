#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tal/rng.hpp"

namespace tal {

/// Named view over one parameter array and its gradient accumulator.
/// Models expose their weights through this so the trainer, the archive
/// writer and the finite-difference checker all share one interface.
struct ParamView {
    std::string name;
    std::vector<double>* values;
    std::vector<double>* grads;
};

namespace nn_detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void init_uniform(std::vector<double>& w, std::size_t fan_in, Rng& rng) {
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
    for (auto& x : w) x = rng.uniform(-r, r);
}

}  // namespace nn_detail

/// One-hidden-layer perceptron with tanh activation and a linear readout.
/// Input is a flattened window (w x D); output is the next target value.
class MlpModel {
public:
    MlpModel() = default;
    MlpModel(std::size_t input_dim, std::size_t hidden)
        : input_dim_(input_dim), hidden_(hidden),
          w1_(hidden * input_dim), b1_(hidden), w2_(hidden), b2_(1),
          gw1_(w1_.size()), gb1_(hidden), gw2_(hidden), gb2_(1) {}

    void init(Rng& rng) {
        nn_detail::init_uniform(w1_, input_dim_, rng);
        nn_detail::init_uniform(b1_, input_dim_, rng);
        nn_detail::init_uniform(w2_, hidden_, rng);
        nn_detail::init_uniform(b2_, hidden_, rng);
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden() const { return hidden_; }

    double forward(std::span<const double> x) const {
        double y = b2_[0];
        for (std::size_t h = 0; h < hidden_; ++h) {
            double z = b1_[h];
            const double* row = w1_.data() + h * input_dim_;
            for (std::size_t i = 0; i < input_dim_; ++i) z += row[i] * x[i];
            y += w2_[h] * std::tanh(z);
        }
        return y;
    }

    /// Forward plus gradient accumulation for one sample; dy is dL/dyhat.
    double forward_backward(std::span<const double> x, double dy_scale, double target,
                            double* out_pred = nullptr) {
        std::vector<double>& a = scratch_a_;
        a.resize(hidden_);
        double y = b2_[0];
        for (std::size_t h = 0; h < hidden_; ++h) {
            double z = b1_[h];
            const double* row = w1_.data() + h * input_dim_;
            for (std::size_t i = 0; i < input_dim_; ++i) z += row[i] * x[i];
            a[h] = std::tanh(z);
            y += w2_[h] * a[h];
        }
        if (out_pred) *out_pred = y;
        const double err = y - target;
        const double dy = dy_scale * 2.0 * err;
        gb2_[0] += dy;
        for (std::size_t h = 0; h < hidden_; ++h) {
            gw2_[h] += dy * a[h];
            const double dz = dy * w2_[h] * (1.0 - a[h] * a[h]);
            gb1_[h] += dz;
            double* grow = gw1_.data() + h * input_dim_;
            for (std::size_t i = 0; i < input_dim_; ++i) grow[i] += dz * x[i];
        }
        return err * err;
    }

    std::vector<ParamView> params() {
        return {{"W1", &w1_, &gw1_}, {"b1", &b1_, &gb1_}, {"w2", &w2_, &gw2_}, {"b2", &b2_, &gb2_}};
    }

private:
    std::size_t input_dim_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> w1_, b1_, w2_, b2_;
    std::vector<double> gw1_, gb1_, gw2_, gb2_;
    std::vector<double> scratch_a_;
};

/// Single gated recurrent cell (update + reset gates) run across the window,
/// with a linear readout from the final hidden state.
class GruModel {
public:
    GruModel() = default;
    GruModel(std::size_t input_dim, std::size_t hidden)
        : input_dim_(input_dim), hidden_(hidden) {
        auto alloc = [&](std::vector<double>& v, std::size_t n) { v.assign(n, 0.0); };
        const std::size_t hd = hidden * input_dim, hh = hidden * hidden;
        alloc(wz_, hd); alloc(uz_, hh); alloc(bz_, hidden);
        alloc(wr_, hd); alloc(ur_, hh); alloc(br_, hidden);
        alloc(wn_, hd); alloc(un_, hh); alloc(bn_, hidden);
        alloc(v_, hidden); alloc(c_, 1);
        alloc(gwz_, hd); alloc(guz_, hh); alloc(gbz_, hidden);
        alloc(gwr_, hd); alloc(gur_, hh); alloc(gbr_, hidden);
        alloc(gwn_, hd); alloc(gun_, hh); alloc(gbn_, hidden);
        alloc(gv_, hidden); alloc(gc_, 1);
    }

    void init(Rng& rng) {
        nn_detail::init_uniform(wz_, input_dim_, rng);
        nn_detail::init_uniform(uz_, hidden_, rng);
        nn_detail::init_uniform(wr_, input_dim_, rng);
        nn_detail::init_uniform(ur_, hidden_, rng);
        nn_detail::init_uniform(wn_, input_dim_, rng);
        nn_detail::init_uniform(un_, hidden_, rng);
        nn_detail::init_uniform(v_, hidden_, rng);
        // gate biases start at zero
    }

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden() const { return hidden_; }

    /// Runs the cell over a window of `steps` rows, each `input_dim_` wide.
    double forward(std::span<const double> window, std::size_t steps) const {
        std::vector<double> h(hidden_, 0.0), hn(hidden_);
        std::vector<double> z(hidden_), r(hidden_), n(hidden_);
        for (std::size_t t = 0; t < steps; ++t) {
            std::span<const double> x = window.subspan(t * input_dim_, input_dim_);
            step(x, h, z, r, n, nullptr);
            for (std::size_t j = 0; j < hidden_; ++j)
                hn[j] = (1.0 - z[j]) * n[j] + z[j] * h[j];
            h.swap(hn);
        }
        double y = c_[0];
        for (std::size_t j = 0; j < hidden_; ++j) y += v_[j] * h[j];
        return y;
    }

    /// Forward + full BPTT for one window. Returns the squared error.
    double forward_backward(std::span<const double> window, std::size_t steps,
                            double dy_scale, double target, double* out_pred = nullptr) {
        Cache& cache = cache_;
        cache.resize(steps, hidden_);

        std::vector<double>& h = cache.h_prev;
        h.assign(hidden_, 0.0);
        for (std::size_t t = 0; t < steps; ++t) {
            std::span<const double> x = window.subspan(t * input_dim_, input_dim_);
            auto zs = cache.row(cache.z, t);
            auto rs = cache.row(cache.r, t);
            auto ns = cache.row(cache.n, t);
            auto hs = cache.row(cache.h, t);
            auto unh = cache.row(cache.un_h, t);
            std::copy(h.begin(), h.end(), cache.row(cache.hprev, t).begin());
            step(x, h, zs, rs, ns, unh.data());
            for (std::size_t j = 0; j < hidden_; ++j)
                hs[j] = (1.0 - zs[j]) * ns[j] + zs[j] * h[j];
            std::copy(hs.begin(), hs.end(), h.begin());
        }

        double y = c_[0];
        for (std::size_t j = 0; j < hidden_; ++j) y += v_[j] * h[j];
        if (out_pred) *out_pred = y;
        const double err = y - target;
        const double dy = dy_scale * 2.0 * err;

        gc_[0] += dy;
        std::vector<double>& dh = cache.dh;
        dh.assign(hidden_, 0.0);
        for (std::size_t j = 0; j < hidden_; ++j) {
            gv_[j] += dy * h[j];
            dh[j] = dy * v_[j];
        }

        std::vector<double>& dh_prev = cache.dh_prev;
        for (std::size_t t = steps; t-- > 0;) {
            std::span<const double> x = window.subspan(t * input_dim_, input_dim_);
            auto zs = cache.row(cache.z, t);
            auto rs = cache.row(cache.r, t);
            auto ns = cache.row(cache.n, t);
            auto hp = cache.row(cache.hprev, t);
            auto unh = cache.row(cache.un_h, t);
            dh_prev.assign(hidden_, 0.0);

            for (std::size_t j = 0; j < hidden_; ++j) {
                const double dzpre = dh[j] * (hp[j] - ns[j]) * zs[j] * (1.0 - zs[j]);
                const double dn = dh[j] * (1.0 - zs[j]) * (1.0 - ns[j] * ns[j]);
                const double drpre = dn * unh[j] * rs[j] * (1.0 - rs[j]);
                const double dun_h = dn * rs[j];
                dh_prev[j] += dh[j] * zs[j];

                gbz_[j] += dzpre;
                gbr_[j] += drpre;
                gbn_[j] += dn;
                double* gwz_row = gwz_.data() + j * input_dim_;
                double* gwr_row = gwr_.data() + j * input_dim_;
                double* gwn_row = gwn_.data() + j * input_dim_;
                for (std::size_t i = 0; i < input_dim_; ++i) {
                    gwz_row[i] += dzpre * x[i];
                    gwr_row[i] += drpre * x[i];
                    gwn_row[i] += dn * x[i];
                }
                double* guz_row = guz_.data() + j * hidden_;
                double* gur_row = gur_.data() + j * hidden_;
                double* gun_row = gun_.data() + j * hidden_;
                const double* uz_row = uz_.data() + j * hidden_;
                const double* ur_row = ur_.data() + j * hidden_;
                const double* un_row = un_.data() + j * hidden_;
                for (std::size_t i = 0; i < hidden_; ++i) {
                    guz_row[i] += dzpre * hp[i];
                    gur_row[i] += drpre * hp[i];
                    gun_row[i] += dun_h * hp[i];
                    dh_prev[i] += uz_row[i] * dzpre + ur_row[i] * drpre + un_row[i] * dun_h;
                }
            }
            dh.swap(dh_prev);
        }
        return err * err;
    }

    std::vector<ParamView> params() {
        return {{"Wz", &wz_, &gwz_}, {"Uz", &uz_, &guz_}, {"bz", &bz_, &gbz_},
                {"Wr", &wr_, &gwr_}, {"Ur", &ur_, &gur_}, {"br", &br_, &gbr_},
                {"Wn", &wn_, &gwn_}, {"Un", &un_, &gun_}, {"bn", &bn_, &gbn_},
                {"v", &v_, &gv_},   {"c", &c_, &gc_}};
    }

private:
    struct Cache {
        std::vector<double> z, r, n, h, hprev, un_h;
        std::vector<double> h_prev, dh, dh_prev;
        std::size_t hidden = 0;
        void resize(std::size_t steps, std::size_t hid) {
            hidden = hid;
            z.resize(steps * hid); r.resize(steps * hid); n.resize(steps * hid);
            h.resize(steps * hid); hprev.resize(steps * hid); un_h.resize(steps * hid);
        }
        std::span<double> row(std::vector<double>& v, std::size_t t) {
            return {v.data() + t * hidden, hidden};
        }
    };

    /// One cell step; writes gate activations into the provided spans.
    /// `un_h_out` (optional) receives Un * h_prev, needed by the backward pass.
    void step(std::span<const double> x, const std::vector<double>& h_prev,
              std::span<double> z, std::span<double> r, std::span<double> n,
              double* un_h_out) const {
        for (std::size_t j = 0; j < hidden_; ++j) {
            double az = bz_[j], ar = br_[j];
            const double* wz_row = wz_.data() + j * input_dim_;
            const double* wr_row = wr_.data() + j * input_dim_;
            for (std::size_t i = 0; i < input_dim_; ++i) {
                az += wz_row[i] * x[i];
                ar += wr_row[i] * x[i];
            }
            const double* uz_row = uz_.data() + j * hidden_;
            const double* ur_row = ur_.data() + j * hidden_;
            for (std::size_t i = 0; i < hidden_; ++i) {
                az += uz_row[i] * h_prev[i];
                ar += ur_row[i] * h_prev[i];
            }
            z[j] = nn_detail::sigmoid(az);
            r[j] = nn_detail::sigmoid(ar);
        }
        for (std::size_t j = 0; j < hidden_; ++j) {
            double uh = 0.0;
            const double* un_row = un_.data() + j * hidden_;
            for (std::size_t i = 0; i < hidden_; ++i) uh += un_row[i] * h_prev[i];
            if (un_h_out) un_h_out[j] = uh;
            double an = bn_[j] + r[j] * uh;
            const double* wn_row = wn_.data() + j * input_dim_;
            for (std::size_t i = 0; i < input_dim_; ++i) an += wn_row[i] * x[i];
            n[j] = std::tanh(an);
        }
    }

    // mutable step scratch is avoided; forward() allocates locally

    std::size_t input_dim_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> wz_, uz_, bz_, wr_, ur_, br_, wn_, un_, bn_, v_, c_;
    std::vector<double> gwz_, guz_, gbz_, gwr_, gur_, gbr_, gwn_, gun_, gbn_, gv_, gc_;
    Cache cache_;
};

}  // namespace tal
