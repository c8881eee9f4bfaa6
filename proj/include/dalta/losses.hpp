#pragma once

#include <cmath>
#include <utility>

#include "dalta/errors.hpp"
#include "dalta/tensor.hpp"

namespace dalta {

constexpr double kRecLogGuard = 1e-10;

struct LossWeights {
    double w_adv = 1.0;
    double w_cons = 0.1;
    double w_kl = 1.0;

    void validate() const {
        if (w_adv < 0.0 || w_cons < 0.0 || w_kl < 0.0)
            throw ConfigError("LossWeights: weights must be non-negative");
    }
};

struct LossBreakdown {
    double rec_source = 0.0;
    double rec_target = 0.0;
    double adv = 0.0;
    double cons = 0.0;
    double kl = 0.0;
    double total = 0.0;
    int n_source = 0;
    int n_target = 0;
};

// Mean over documents of -sum_w x_w ln(word_dist_w + guard). Counts, not
// frequencies, weight the log-likelihood.
inline double rec_loss(const Tensor2& x, const Tensor2& word_dist) {
    if (!x.same_shape(word_dist)) throw DimensionError("rec_loss: shape mismatch");
    double total = 0.0;
    for (int i = 0; i < x.rows; ++i) {
        const double* xr = x.row_ptr(i);
        const double* yr = word_dist.row_ptr(i);
        for (int j = 0; j < x.cols; ++j) {
            if (xr[j] != 0.0) total -= xr[j] * std::log(yr[j] + kRecLogGuard);
        }
    }
    return total / x.rows;
}

inline Tensor2 rec_loss_backward(const Tensor2& x, const Tensor2& word_dist) {
    Tensor2 d(x.rows, x.cols);
    const double inv_n = 1.0 / x.rows;
    for (size_t i = 0; i < x.data.size(); ++i)
        d.data[i] = -inv_n * x.data[i] / (word_dist.data[i] + kRecLogGuard);
    return d;
}

// mean(ln p_source) + mean(ln(1 - p_target)). The discriminator ascends this,
// the encoder descends it.
inline double adv_loss(const Tensor2& p_source, const Tensor2& p_target) {
    if (p_source.cols != 1 || p_target.cols != 1) throw DimensionError("adv_loss: expect Nx1 probs");
    double ls = 0.0, lt = 0.0;
    for (double p : p_source.data) ls += std::log(p);
    for (double p : p_target.data) lt += std::log1p(-p);
    return ls / p_source.rows + lt / p_target.rows;
}

inline std::pair<Tensor2, Tensor2> adv_loss_backward(const Tensor2& p_source,
                                                     const Tensor2& p_target) {
    Tensor2 ds(p_source.rows, 1), dt(p_target.rows, 1);
    for (int i = 0; i < p_source.rows; ++i) ds.data[i] = 1.0 / (p_source.rows * p_source.data[i]);
    for (int i = 0; i < p_target.rows; ++i)
        dt.data[i] = -1.0 / (p_target.rows * (1.0 - p_target.data[i]));
    return {std::move(ds), std::move(dt)};
}

// Squared Euclidean distance between the two decoders' word distributions,
// averaged per batch and summed over the two batches.
inline double cons_loss(const Tensor2& wd_s_on_zs, const Tensor2& wd_t_on_zs,
                        const Tensor2& wd_s_on_zt, const Tensor2& wd_t_on_zt) {
    auto term = [](const Tensor2& a, const Tensor2& b) {
        if (!a.same_shape(b)) throw DimensionError("cons_loss: shape mismatch");
        double s = 0.0;
        for (size_t i = 0; i < a.data.size(); ++i) {
            const double d = a.data[i] - b.data[i];
            s += d * d;
        }
        return a.rows > 0 ? s / a.rows : 0.0;
    };
    return term(wd_s_on_zs, wd_t_on_zs) + term(wd_s_on_zt, wd_t_on_zt);
}

struct ConsGrads {
    Tensor2 d_s_on_zs, d_t_on_zs, d_s_on_zt, d_t_on_zt;
};

inline ConsGrads cons_loss_backward(const Tensor2& wd_s_on_zs, const Tensor2& wd_t_on_zs,
                                    const Tensor2& wd_s_on_zt, const Tensor2& wd_t_on_zt) {
    auto pair_grads = [](const Tensor2& a, const Tensor2& b, Tensor2& da, Tensor2& db) {
        da = Tensor2(a.rows, a.cols);
        db = Tensor2(a.rows, a.cols);
        const double scale = a.rows > 0 ? 2.0 / a.rows : 0.0;
        for (size_t i = 0; i < a.data.size(); ++i) {
            const double d = scale * (a.data[i] - b.data[i]);
            da.data[i] = d;
            db.data[i] = -d;
        }
    };
    ConsGrads g;
    pair_grads(wd_s_on_zs, wd_t_on_zs, g.d_s_on_zs, g.d_t_on_zs);
    pair_grads(wd_s_on_zt, wd_t_on_zt, g.d_s_on_zt, g.d_t_on_zt);
    return g;
}

// Closed-form KL(N(mu, diag(exp(logvar))) || N(0, I)), mean over documents.
inline double kl_loss(const Tensor2& mu, const Tensor2& logvar) {
    if (!mu.same_shape(logvar)) throw DimensionError("kl_loss: shape mismatch");
    double total = 0.0;
    for (size_t i = 0; i < mu.data.size(); ++i) {
        const double m = mu.data[i];
        const double lv = logvar.data[i];
        total += 0.5 * (std::exp(lv) + m * m - 1.0 - lv);
    }
    return total / mu.rows;
}

inline std::pair<Tensor2, Tensor2> kl_loss_backward(const Tensor2& mu, const Tensor2& logvar) {
    Tensor2 dmu(mu.rows, mu.cols), dlv(mu.rows, mu.cols);
    const double inv_n = 1.0 / mu.rows;
    for (size_t i = 0; i < mu.data.size(); ++i) {
        dmu.data[i] = inv_n * mu.data[i];
        dlv.data[i] = inv_n * 0.5 * (std::exp(logvar.data[i]) - 1.0);
    }
    return {std::move(dmu), std::move(dlv)};
}

// Weighted total; adv enters the generator-side objective with +w_adv.
inline LossBreakdown total_loss(double rec_source, double rec_target, double adv, double cons,
                                double kl, const LossWeights& w, int n_source, int n_target) {
    LossBreakdown b;
    b.rec_source = rec_source;
    b.rec_target = rec_target;
    b.adv = adv;
    b.cons = cons;
    b.kl = kl;
    b.n_source = n_source;
    b.n_target = n_target;
    b.total = rec_source + rec_target + w.w_adv * adv + w.w_cons * cons + w.w_kl * kl;
    return b;
}

} // namespace dalta
