#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "dalta/corpus.hpp"
#include "dalta/optim.hpp"
#include "dalta/rng.hpp"
#include "dalta/tensor.hpp"

namespace dalta {

constexpr double kLogvarClamp = 8.0;
constexpr double kLogitClamp = 15.0;

struct ModelConfig {
    int vocab_size = 0;
    int hidden = 256;      // encoder hidden width, softplus activation
    int latent = 50;
    int disc_hidden = 128; // discriminator hidden width, rectifier activation
    int k_source = 50;
    int k_target = 20;

    void validate() const {
        if (vocab_size < 2) throw ConfigError("ModelConfig: vocab_size must be >= 2");
        if (hidden < 1 || latent < 1 || disc_hidden < 1)
            throw ConfigError("ModelConfig: layer widths must be >= 1");
        if (k_source < 2 || k_target < 2) throw ConfigError("ModelConfig: topic counts must be >= 2");
    }
};

namespace detail {

// Affine weights ~ N(0, 2/(fan_in+fan_out)) (variance), biases zero.
inline void init_affine(ParamBlock& w, ParamBlock& b, Rng& rng) {
    const double stddev = std::sqrt(2.0 / (w.value.rows + w.value.cols));
    for (double& v : w.value.data) v = rng.normal(0.0, stddev);
    b.value.fill(0.0);
}

} // namespace detail

// Shared encoder: softplus hidden layer, then mu and logvar heads. BoW rows
// are length-normalized to term frequencies before the first affine layer.
struct EncoderParams {
    ParamBlock w1, b1;     // |V| -> H
    ParamBlock w_mu, b_mu; // H -> L
    ParamBlock w_lv, b_lv; // H -> L

    EncoderParams(int vocab, int hidden, int latent)
        : w1("encoder.w1", vocab, hidden), b1("encoder.b1", 1, hidden),
          w_mu("encoder.w_mu", hidden, latent), b_mu("encoder.b_mu", 1, latent),
          w_lv("encoder.w_lv", hidden, latent), b_lv("encoder.b_lv", 1, latent) {}

    void init(Rng& rng) {
        detail::init_affine(w1, b1, rng);
        detail::init_affine(w_mu, b_mu, rng);
        detail::init_affine(w_lv, b_lv, rng);
    }

    std::vector<ParamBlock*> all() { return {&w1, &b1, &w_mu, &b_mu, &w_lv, &b_lv}; }
    int latent_dim() const { return w_mu.value.cols; }
    int vocab_size() const { return w1.value.rows; }
};

// Per-domain decoder: proportion head (L -> K_d, row softmax) and an
// unnormalized topic-word matrix beta whose row softmax gives the topics.
struct DecoderParams {
    ParamBlock w_prop, b_prop; // L -> K_d
    ParamBlock beta;           // K_d x |V|

    DecoderParams(const std::string& tag, int latent, int k, int vocab)
        : w_prop(tag + ".w_prop", latent, k), b_prop(tag + ".b_prop", 1, k),
          beta(tag + ".beta", k, vocab) {}

    void init(Rng& rng) {
        detail::init_affine(w_prop, b_prop, rng);
        // Small beta init keeps initial topics near-uniform.
        const double stddev = std::sqrt(0.02);
        for (double& v : beta.value.data) v = rng.normal(0.0, stddev);
    }

    std::vector<ParamBlock*> all() { return {&w_prop, &b_prop, &beta}; }
    int n_topics() const { return beta.value.rows; }
};

// Domain discriminator: rectifier hidden layer, sigmoid output. Logits are
// clamped to [-kLogitClamp, kLogitClamp] so the adversarial logs stay finite.
struct DiscriminatorParams {
    ParamBlock w1, b1; // L -> D
    ParamBlock w2, b2; // D -> 1

    explicit DiscriminatorParams(int latent, int hidden, const std::string& tag = "disc")
        : w1(tag + ".w1", latent, hidden), b1(tag + ".b1", 1, hidden),
          w2(tag + ".w2", hidden, 1), b2(tag + ".b2", 1, 1) {}

    void init(Rng& rng) {
        detail::init_affine(w1, b1, rng);
        detail::init_affine(w2, b2, rng);
    }

    std::vector<ParamBlock*> all() { return {&w1, &b1, &w2, &b2}; }
};

struct LatentSample {
    Tensor2 mu;     // N x L
    Tensor2 logvar; // clamped
    Tensor2 eps;
    Tensor2 z; // mu + exp(logvar/2) .* eps
};

struct EncoderTrace {
    Tensor2 xnorm;  // row-normalized input
    Tensor2 pre_h;  // pre-softplus
    Tensor2 h;
    Tensor2 logvar_raw; // before clamping
    LatentSample lat;
};

// Recomputes z from (mu, logvar, eps); also used when eps is supplied frozen.
inline void encode_finish(EncoderTrace& t) {
    t.lat.z = Tensor2(t.lat.mu.rows, t.lat.mu.cols);
    for (size_t i = 0; i < t.lat.z.data.size(); ++i)
        t.lat.z.data[i] = t.lat.mu.data[i] + std::exp(0.5 * t.lat.logvar.data[i]) * t.lat.eps.data[i];
    ensure_finite(t.lat.z, "encoder.z");
}

// Draws eps from rng when sample is true; eval mode (sample=false) sets z=mu.
inline EncoderTrace encode(const Tensor2& x, const EncoderParams& p, Rng* rng, bool sample) {
    if (x.cols != p.vocab_size()) throw DimensionError("encode: input width != vocab size");
    EncoderTrace t;

    t.xnorm = x;
    for (int i = 0; i < x.rows; ++i) {
        double* row = t.xnorm.row_ptr(i);
        const double sum = std::accumulate(row, row + x.cols, 0.0);
        if (sum <= 0.0) throw DimensionError("encode: document row with zero total count");
        for (int j = 0; j < x.cols; ++j) row[j] /= sum;
    }

    t.pre_h = add_row_bias(matmul(t.xnorm, p.w1.value), p.b1.value);
    ensure_finite(t.pre_h, "encoder.hidden");
    t.h = softplus(t.pre_h);

    t.lat.mu = add_row_bias(matmul(t.h, p.w_mu.value), p.b_mu.value);
    ensure_finite(t.lat.mu, "encoder.mu");
    t.logvar_raw = add_row_bias(matmul(t.h, p.w_lv.value), p.b_lv.value);
    ensure_finite(t.logvar_raw, "encoder.logvar");

    t.lat.logvar = t.logvar_raw;
    for (double& v : t.lat.logvar.data) v = std::clamp(v, -kLogvarClamp, kLogvarClamp);

    t.lat.eps = Tensor2(t.lat.mu.rows, t.lat.mu.cols);
    if (sample) {
        if (rng == nullptr) throw ConfigError("encode: sampling requested without an rng");
        for (double& v : t.lat.eps.data) v = rng->normal();
    }
    encode_finish(t);
    return t;
}

// Variant with caller-provided noise, for frozen-noise gradient checks.
inline EncoderTrace encode_with_eps(const Tensor2& x, const EncoderParams& p, const Tensor2& eps) {
    EncoderTrace t = encode(x, p, nullptr, false);
    if (!eps.same_shape(t.lat.mu)) throw DimensionError("encode_with_eps: eps shape");
    t.lat.eps = eps;
    encode_finish(t);
    return t;
}

// Accumulates parameter gradients given upstream gradients w.r.t. mu, logvar
// and z. Gradients through the logvar clamp vanish outside (-8, 8).
inline void encoder_backward(const EncoderTrace& t, EncoderParams& p, const Tensor2& d_mu_in,
                             const Tensor2& d_logvar_in, const Tensor2& d_z) {
    Tensor2 d_mu = d_mu_in;
    Tensor2 d_lv = d_logvar_in;
    for (size_t i = 0; i < d_z.data.size(); ++i) {
        const double dz = d_z.data[i];
        d_mu.data[i] += dz;
        d_lv.data[i] += dz * 0.5 * std::exp(0.5 * t.lat.logvar.data[i]) * t.lat.eps.data[i];
    }
    for (size_t i = 0; i < d_lv.data.size(); ++i) {
        if (std::fabs(t.logvar_raw.data[i]) >= kLogvarClamp) d_lv.data[i] = 0.0;
    }

    p.w_mu.grad += matmul_tn(t.h, d_mu);
    p.b_mu.grad += column_sums(d_mu);
    p.w_lv.grad += matmul_tn(t.h, d_lv);
    p.b_lv.grad += column_sums(d_lv);

    Tensor2 d_h = matmul_nt(d_mu, p.w_mu.value);
    d_h += matmul_nt(d_lv, p.w_lv.value);
    const Tensor2 d_pre = softplus_backward(t.pre_h, d_h);

    p.w1.grad += matmul_tn(t.xnorm, d_pre);
    p.b1.grad += column_sums(d_pre);
}

struct DecodeTrace {
    Tensor2 prop_logits;
    Tensor2 alpha;     // N x K_d document-topic proportions
    Tensor2 beta_rows; // softmax_rows(beta), K_d x |V|
    Tensor2 word_dist; // alpha * beta_rows, rows on the simplex
};

inline DecodeTrace decode(const Tensor2& z, const DecoderParams& p) {
    if (z.cols != p.w_prop.value.rows) throw DimensionError("decode: latent width mismatch");
    DecodeTrace t;
    t.prop_logits = add_row_bias(matmul(z, p.w_prop.value), p.b_prop.value);
    ensure_finite(t.prop_logits, "decoder.proportions");
    t.alpha = softmax_rows(t.prop_logits);
    t.beta_rows = softmax_rows(p.beta.value);
    t.word_dist = matmul(t.alpha, t.beta_rows);
    return t;
}

// Accumulates decoder gradients and returns dL/dz.
inline Tensor2 decoder_backward(const DecodeTrace& t, const Tensor2& z, DecoderParams& p,
                                const Tensor2& d_word_dist) {
    const Tensor2 d_alpha = matmul_nt(d_word_dist, t.beta_rows);
    const Tensor2 d_beta_rows = matmul_tn(t.alpha, d_word_dist);
    p.beta.grad += softmax_rows_backward(t.beta_rows, d_beta_rows);

    const Tensor2 d_logits = softmax_rows_backward(t.alpha, d_alpha);
    p.w_prop.grad += matmul_tn(z, d_logits);
    p.b_prop.grad += column_sums(d_logits);
    return matmul_nt(d_logits, p.w_prop.value);
}

struct DiscTrace {
    Tensor2 pre_h;
    Tensor2 h;
    Tensor2 logit_raw;
    Tensor2 logit; // clamped
    Tensor2 prob;  // N x 1, strictly inside (0, 1)
};

inline DiscTrace discriminate(const Tensor2& z, const DiscriminatorParams& p) {
    if (z.cols != p.w1.value.rows) throw DimensionError("discriminate: latent width mismatch");
    DiscTrace t;
    t.pre_h = add_row_bias(matmul(z, p.w1.value), p.b1.value);
    ensure_finite(t.pre_h, "discriminator.hidden");
    t.h = relu(t.pre_h);
    t.logit_raw = add_row_bias(matmul(t.h, p.w2.value), p.b2.value);
    ensure_finite(t.logit_raw, "discriminator.logit");
    t.logit = t.logit_raw;
    for (double& v : t.logit.data) v = std::clamp(v, -kLogitClamp, kLogitClamp);
    t.prob = Tensor2(z.rows, 1);
    for (int i = 0; i < z.rows; ++i) t.prob.data[i] = sigmoid(t.logit.data[i]);
    return t;
}

// Accumulates discriminator gradients when params is non-null (null freezes
// the discriminator, as in the generator update) and returns dL/dz.
inline Tensor2 discriminator_backward(const DiscTrace& t, const Tensor2& z,
                                      DiscriminatorParams* params, const Tensor2& d_prob,
                                      const DiscriminatorParams& frozen) {
    Tensor2 d_logit(t.logit.rows, 1);
    for (int i = 0; i < t.logit.rows; ++i) {
        const double pr = t.prob.data[i];
        const double mask = std::fabs(t.logit_raw.data[i]) >= kLogitClamp ? 0.0 : 1.0;
        d_logit.data[i] = d_prob.data[i] * pr * (1.0 - pr) * mask;
    }
    Tensor2 d_h = matmul_nt(d_logit, frozen.w2.value);
    const Tensor2 d_pre = relu_backward(t.pre_h, d_h);
    if (params != nullptr) {
        params->w2.grad += matmul_tn(t.h, d_logit);
        params->b2.grad += column_sums(d_logit);
        params->w1.grad += matmul_tn(z, d_pre);
        params->b1.grad += column_sums(d_pre);
    }
    return matmul_nt(d_pre, frozen.w1.value);
}

inline Tensor2 discriminator_backward(const DiscTrace& t, const Tensor2& z,
                                      DiscriminatorParams* params, const Tensor2& d_prob) {
    if (params == nullptr) throw ConfigError("discriminator_backward: need params for weights");
    return discriminator_backward(t, z, params, d_prob, *params);
}

struct TopicWord {
    std::string word;
    double weight = 0.0;
};

struct Topic {
    int id = 0;
    std::vector<TopicWord> words; // descending weight, ties by vocabulary order
};

struct TopicReport {
    std::string domain;
    std::vector<Topic> topics;
};

// Top-k words per topic from softmax_rows(beta), ties broken by vocab order.
inline TopicReport extract_topics(const DecoderParams& p, const Vocabulary& vocab, int top_k,
                                  const std::string& domain_tag) {
    if (top_k < 1 || top_k > vocab.size()) throw ConfigError("extract_topics: top_k out of range");
    if (p.beta.value.cols != vocab.size())
        throw DimensionError("extract_topics: beta width != vocab size");

    const Tensor2 rows = softmax_rows(p.beta.value);
    TopicReport report;
    report.domain = domain_tag;
    for (int k = 0; k < rows.rows; ++k) {
        std::vector<int> order(vocab.size());
        for (int v = 0; v < vocab.size(); ++v) order[v] = v;
        const double* w = rows.row_ptr(k);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });

        Topic topic;
        topic.id = k;
        for (int i = 0; i < top_k; ++i)
            topic.words.push_back({vocab.words[order[i]], w[order[i]]});
        report.topics.push_back(std::move(topic));
    }
    return report;
}

} // namespace dalta
