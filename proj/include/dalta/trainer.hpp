#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "dalta/corpus.hpp"
#include "dalta/losses.hpp"
#include "dalta/model.hpp"
#include "dalta/optim.hpp"
#include "dalta/rng.hpp"

namespace dalta {

struct TrainConfig {
    int epochs = 20;
    int batch_size = 64;
    double mu_start = 0.7;
    double mu_end = 0.3;
    LossWeights weights;
    double lr_gen = 1e-2;
    double lr_disc = 5e-3;
    uint64_t seed = 0;
    int checkpoint_every = 0;  // steps; 0 = final checkpoint only
    bool target_only = false;  // ablation mode: no source batches, no adversary
    ModelConfig model;

    void validate() const {
        if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
        if (batch_size < 2) throw ConfigError("TrainConfig: batch_size must be >= 2");
        if (!(mu_end > 0.0 && mu_end <= mu_start && mu_start < 1.0))
            throw ConfigError("TrainConfig: need 0 < mu_end <= mu_start < 1");
        if (lr_gen <= 0.0 || lr_disc <= 0.0) throw ConfigError("TrainConfig: learning rates must be > 0");
        if (checkpoint_every < 0) throw ConfigError("TrainConfig: checkpoint_every must be >= 0");
        weights.validate();
    }
};

struct TrainLogRow {
    long step = 0;
    double rec_s = 0.0, rec_t = 0.0, adv = 0.0, cons = 0.0, kl = 0.0, total = 0.0;
    double mu = 0.0;
};

struct TrainState {
    EncoderParams encoder;
    DecoderParams decoder_source;
    DecoderParams decoder_target;
    DiscriminatorParams discriminator;
    long epoch = 0;
    long step = 0;
    Rng rng;
    std::vector<TrainLogRow> log;

    TrainState(const ModelConfig& m, uint64_t seed)
        : encoder(m.vocab_size, m.hidden, m.latent),
          decoder_source("decoder_s", m.latent, m.k_source, m.vocab_size),
          decoder_target("decoder_t", m.latent, m.k_target, m.vocab_size),
          discriminator(m.latent, m.disc_hidden), rng(seed) {
        m.validate();
        encoder.init(rng);
        decoder_source.init(rng);
        decoder_target.init(rng);
        discriminator.init(rng);
    }

    std::vector<ParamBlock*> generator_params() {
        std::vector<ParamBlock*> out = encoder.all();
        for (ParamBlock* p : decoder_source.all()) out.push_back(p);
        for (ParamBlock* p : decoder_target.all()) out.push_back(p);
        return out;
    }

    std::vector<ParamBlock*> all_params() {
        std::vector<ParamBlock*> out = generator_params();
        for (ParamBlock* p : discriminator.all()) out.push_back(p);
        return out;
    }
};

// Linear decay from mu_start to mu_end across the epoch budget; the endpoints
// are returned exactly.
inline double mu_schedule(int epoch, const TrainConfig& cfg) {
    if (epoch < 0 || epoch >= cfg.epochs) throw ConfigError("mu_schedule: epoch out of range");
    if (epoch == 0 || cfg.epochs == 1) return cfg.mu_start;
    if (epoch == cfg.epochs - 1) return cfg.mu_end;
    const double frac = static_cast<double>(epoch) / (cfg.epochs - 1);
    return cfg.mu_start + (cfg.mu_end - cfg.mu_start) * frac;
}

inline Tensor2 gather_rows(const Tensor2& m, const std::vector<int>& idx) {
    Tensor2 out(static_cast<int>(idx.size()), m.cols);
    for (size_t i = 0; i < idx.size(); ++i)
        std::copy(m.row_ptr(idx[i]), m.row_ptr(idx[i]) + m.cols,
                  out.row_ptr(static_cast<int>(i)));
    return out;
}

struct BatchIndices {
    std::vector<int> source;
    std::vector<int> target;
};

// n_src = clamp(round(mu * batch), 1, batch-1); rows drawn uniformly without
// replacement within the batch.
inline BatchIndices sample_batch_indices(int n_source_total, int n_target_total, double mu,
                                         int batch_size, Rng& rng) {
    if (n_source_total < 1 || n_target_total < 1)
        throw ConfigError("sample_batch: both corpora must be non-empty");
    long n_src = std::lround(mu * batch_size);
    n_src = std::max<long>(1, std::min<long>(n_src, batch_size - 1));
    const long n_tgt = batch_size - n_src;
    BatchIndices b;
    b.source = rng.sample_indices(n_source_total, static_cast<int>(n_src));
    b.target = rng.sample_indices(n_target_total, static_cast<int>(n_tgt));
    return b;
}

inline std::pair<Tensor2, Tensor2> sample_batch(const BowMatrix& source, const BowMatrix& target,
                                                double mu, int batch_size, Rng& rng) {
    const BatchIndices idx =
        sample_batch_indices(source.n_docs(), target.n_docs(), mu, batch_size, rng);
    return {gather_rows(source.counts, idx.source), gather_rows(target.counts, idx.target)};
}

// Joint forward/backward over both domains with frozen noise. When want_grad
// is set, gradients accumulate into the encoder and both decoders; they flow
// into the discriminator only when grad_into_disc is also set (used by the
// gradient checker; the generator update keeps the discriminator frozen).
inline LossBreakdown dalta_forward_backward(EncoderParams& enc, DecoderParams& dec_s,
                                            DecoderParams& dec_t, DiscriminatorParams& disc,
                                            const Tensor2& xs, const Tensor2& xt,
                                            const Tensor2& eps_s, const Tensor2& eps_t,
                                            const LossWeights& w, bool want_grad,
                                            bool grad_into_disc) {
    const int ns = xs.rows, nt = xt.rows;

    // Target-only reduction: reconstruction + KL on the target batch.
    if (ns == 0) {
        const EncoderTrace et = encode_with_eps(xt, enc, eps_t);
        const DecodeTrace tt = decode(et.lat.z, dec_t);
        const double rec_t = rec_loss(xt, tt.word_dist);
        const double kl = kl_loss(et.lat.mu, et.lat.logvar);
        LossBreakdown b = total_loss(0.0, rec_t, 0.0, 0.0, kl, w, 0, nt);
        if (want_grad) {
            const Tensor2 d_wd = rec_loss_backward(xt, tt.word_dist);
            Tensor2 d_z = decoder_backward(tt, et.lat.z, dec_t, d_wd);
            auto [d_mu, d_lv] = kl_loss_backward(et.lat.mu, et.lat.logvar);
            d_mu.scale(w.w_kl);
            d_lv.scale(w.w_kl);
            encoder_backward(et, enc, d_mu, d_lv, d_z);
        }
        return b;
    }

    const EncoderTrace es = encode_with_eps(xs, enc, eps_s);
    const EncoderTrace et = encode_with_eps(xt, enc, eps_t);

    const DecodeTrace ss = decode(es.lat.z, dec_s); // source decoder on z_S
    const DecodeTrace ts = decode(es.lat.z, dec_t); // target decoder on z_S
    const DecodeTrace st = decode(et.lat.z, dec_s); // source decoder on z_T
    const DecodeTrace tt = decode(et.lat.z, dec_t); // target decoder on z_T

    const DiscTrace ds = discriminate(es.lat.z, disc);
    const DiscTrace dt = discriminate(et.lat.z, disc);

    const double rec_s = rec_loss(xs, ss.word_dist);
    const double rec_t = rec_loss(xt, tt.word_dist);
    const double adv = adv_loss(ds.prob, dt.prob);
    const double cons = cons_loss(ss.word_dist, ts.word_dist, st.word_dist, tt.word_dist);
    const double kl_s = kl_loss(es.lat.mu, es.lat.logvar);
    const double kl_t = kl_loss(et.lat.mu, et.lat.logvar);
    const double kl = (ns * kl_s + nt * kl_t) / (ns + nt);

    LossBreakdown b = total_loss(rec_s, rec_t, adv, cons, kl, w, ns, nt);
    if (!want_grad) return b;

    const ConsGrads cg =
        cons_loss_backward(ss.word_dist, ts.word_dist, st.word_dist, tt.word_dist);

    Tensor2 d_ss = rec_loss_backward(xs, ss.word_dist);
    for (size_t i = 0; i < d_ss.data.size(); ++i) d_ss.data[i] += w.w_cons * cg.d_s_on_zs.data[i];
    Tensor2 d_ts = cg.d_t_on_zs;
    d_ts.scale(w.w_cons);
    Tensor2 d_st = cg.d_s_on_zt;
    d_st.scale(w.w_cons);
    Tensor2 d_tt = rec_loss_backward(xt, tt.word_dist);
    for (size_t i = 0; i < d_tt.data.size(); ++i) d_tt.data[i] += w.w_cons * cg.d_t_on_zt.data[i];

    Tensor2 d_zs = decoder_backward(ss, es.lat.z, dec_s, d_ss);
    d_zs += decoder_backward(ts, es.lat.z, dec_t, d_ts);
    Tensor2 d_zt = decoder_backward(st, et.lat.z, dec_s, d_st);
    d_zt += decoder_backward(tt, et.lat.z, dec_t, d_tt);

    auto [d_ps, d_pt] = adv_loss_backward(ds.prob, dt.prob);
    d_ps.scale(w.w_adv);
    d_pt.scale(w.w_adv);
    d_zs += discriminator_backward(ds, es.lat.z, grad_into_disc ? &disc : nullptr, d_ps, disc);
    d_zt += discriminator_backward(dt, et.lat.z, grad_into_disc ? &disc : nullptr, d_pt, disc);

    auto [d_mu_s, d_lv_s] = kl_loss_backward(es.lat.mu, es.lat.logvar);
    const double scale_s = w.w_kl * ns / static_cast<double>(ns + nt);
    d_mu_s.scale(scale_s);
    d_lv_s.scale(scale_s);
    auto [d_mu_t, d_lv_t] = kl_loss_backward(et.lat.mu, et.lat.logvar);
    const double scale_t = w.w_kl * nt / static_cast<double>(ns + nt);
    d_mu_t.scale(scale_t);
    d_lv_t.scale(scale_t);

    encoder_backward(es, enc, d_mu_s, d_lv_s, d_zs);
    encoder_backward(et, enc, d_mu_t, d_lv_t, d_zt);
    return b;
}

// Ascends L_adv in the discriminator only (one Adam step on -dL_adv/dC).
inline double discriminator_step(TrainState& s, const Tensor2& z_s, const Tensor2& z_t,
                                 double lr) {
    const DiscTrace ds = discriminate(z_s, s.discriminator);
    const DiscTrace dt = discriminate(z_t, s.discriminator);
    const double adv = adv_loss(ds.prob, dt.prob);

    zero_grad_all(s.discriminator.all());
    auto [d_ps, d_pt] = adv_loss_backward(ds.prob, dt.prob);
    d_ps.scale(-1.0); // ascend
    d_pt.scale(-1.0);
    discriminator_backward(ds, z_s, &s.discriminator, d_ps);
    discriminator_backward(dt, z_t, &s.discriminator, d_pt);

    AdamConfig adam;
    adam.lr = lr;
    adam_step_all(s.discriminator.all(), adam);
    return adv;
}

// One Algorithm-1 iteration: generator update minimizing the full objective
// with the discriminator frozen, then a discriminator update ascending the
// adversarial objective on a re-encoding of the same batch. Returns the
// pre-update breakdown.
inline LossBreakdown train_step(TrainState& s, const Tensor2& xs, const Tensor2& xt,
                                const TrainConfig& cfg) {
    Tensor2 eps_s(xs.rows, s.encoder.latent_dim());
    Tensor2 eps_t(xt.rows, s.encoder.latent_dim());
    for (double& v : eps_s.data) v = s.rng.normal();
    for (double& v : eps_t.data) v = s.rng.normal();

    zero_grad_all(s.generator_params());
    const LossBreakdown b =
        dalta_forward_backward(s.encoder, s.decoder_source, s.decoder_target, s.discriminator,
                               xs, xt, eps_s, eps_t, cfg.weights, true, false);
    if (!std::isfinite(b.total))
        throw TrainingDivergence("non-finite loss at step " + std::to_string(s.step));

    AdamConfig gen_adam;
    gen_adam.lr = cfg.lr_gen;
    adam_step_all(s.generator_params(), gen_adam);

    if (xs.rows > 0 && !cfg.target_only) {
        // Re-encode with the updated encoder; no gradient flows into it.
        for (double& v : eps_s.data) v = s.rng.normal();
        for (double& v : eps_t.data) v = s.rng.normal();
        const EncoderTrace es = encode_with_eps(xs, s.encoder, eps_s);
        const EncoderTrace et = encode_with_eps(xt, s.encoder, eps_t);
        discriminator_step(s, es.lat.z, et.lat.z, cfg.lr_disc);
    }
    return b;
}

using CheckpointFn = std::function<void(const TrainState&, long)>;

// Training loop over a caller-prepared state: epochs * ceil(n_docs / batch)
// steps, one log row per step, checkpoints via callback every
// checkpoint_every steps and at the end.
inline void fit_state(TrainState& state, const BowMatrix& source, const BowMatrix& target,
                      const TrainConfig& cfg, const CheckpointFn& on_checkpoint = nullptr) {
    cfg.validate();
    if (target.n_docs() < 1) throw ConfigError("fit: target corpus is empty");
    if (!cfg.target_only && source.n_docs() < 1) throw ConfigError("fit: source corpus is empty");
    if (!cfg.target_only && source.vocab_size() != target.vocab_size())
        throw DimensionError("fit: corpora must share one vocabulary");

    const int docs_per_epoch = cfg.target_only ? target.n_docs() : source.n_docs() + target.n_docs();
    const int steps_per_epoch = (docs_per_epoch + cfg.batch_size - 1) / cfg.batch_size;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        state.epoch = epoch;
        const double mu = mu_schedule(epoch, cfg);
        for (int i = 0; i < steps_per_epoch; ++i) {
            Tensor2 xs(0, target.vocab_size()), xt;
            if (cfg.target_only) {
                const int n = std::min(cfg.batch_size, target.n_docs());
                xt = gather_rows(target.counts, state.rng.sample_indices(target.n_docs(), n));
            } else {
                auto [bs, bt] = sample_batch(source, target, mu, cfg.batch_size, state.rng);
                xs = std::move(bs);
                xt = std::move(bt);
            }
            const LossBreakdown b = train_step(state, xs, xt, cfg);
            state.step += 1;
            state.log.push_back({state.step, b.rec_source, b.rec_target, b.adv, b.cons, b.kl,
                                 b.total, mu});
            if (on_checkpoint && cfg.checkpoint_every > 0 && state.step % cfg.checkpoint_every == 0)
                on_checkpoint(state, state.step);
        }
    }
    if (on_checkpoint) on_checkpoint(state, state.step);
}

inline TrainState fit(const BowMatrix& source, const BowMatrix& target, const TrainConfig& cfg,
                      const CheckpointFn& on_checkpoint = nullptr) {
    cfg.validate();
    ModelConfig m = cfg.model;
    m.vocab_size = target.vocab_size();
    TrainState state(m, cfg.seed);
    fit_state(state, source, target, cfg, on_checkpoint);
    return state;
}

// Mean reconstruction loss of one domain's decoder in evaluation mode (z=mu).
inline double evaluate_rec_loss(TrainState& s, const Tensor2& x, Domain domain) {
    const EncoderTrace t = encode(x, s.encoder, nullptr, false);
    const DecoderParams& dec = domain == Domain::Source ? s.decoder_source : s.decoder_target;
    const DecodeTrace d = decode(t.lat.z, dec);
    return rec_loss(x, d.word_dist);
}

} // namespace dalta
