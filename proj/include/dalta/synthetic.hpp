#pragma once

#include <string>
#include <vector>

#include "dalta/corpus.hpp"
#include "dalta/rng.hpp"
#include "dalta/tensor.hpp"

namespace dalta {

// Two-domain corpus generator with known ground truth. Each domain's topic
// set is the shared topics plus its own domain-only topics; documents are
// drawn LDA-style from the mixture theta^T beta.
struct SyntheticSpec {
    int n_shared_topics = 4;
    int n_source_only = 2;
    int n_target_only = 2;
    int vocab_size = 300;
    double doc_length = 60.0; // mean tokens per document
    int n_source_docs = 800;
    int n_target_docs = 150;
    double concentration = 0.3;            // Dirichlet over per-document topic proportions
    double topic_word_concentration = 0.05; // sparse Dirichlet over topic-word rows
    uint64_t seed = 0;

    void validate() const {
        if (n_shared_topics < 1) throw ConfigError("SyntheticSpec: n_shared_topics must be >= 1");
        if (n_source_only < 0 || n_target_only < 0)
            throw ConfigError("SyntheticSpec: domain-only topic counts must be >= 0");
        if (vocab_size < 1 || n_source_docs < 1 || n_target_docs < 1)
            throw ConfigError("SyntheticSpec: counts must be >= 1");
        if (doc_length < 1.0) throw ConfigError("SyntheticSpec: doc_length must be >= 1");
        if (concentration <= 0.0 || topic_word_concentration <= 0.0)
            throw ConfigError("SyntheticSpec: concentrations must be > 0");
    }
};

struct SyntheticCorpus {
    std::vector<Document> source_docs;
    std::vector<Document> target_docs;
    Tensor2 beta_source; // K_S x V ground-truth topic rows, each on the simplex
    Tensor2 beta_target; // K_T x V
    Tensor2 theta_source; // per-doc topic proportions
    Tensor2 theta_target;
    std::vector<std::string> vocab_words;

    Vocabulary vocabulary() const { return Vocabulary(vocab_words); }
};

namespace detail {

inline std::string synthetic_word(int i) {
    std::string s = std::to_string(i);
    while (s.size() < 4) s.insert(s.begin(), '0');
    return "w" + s;
}

inline void generate_domain(Rng& rng, const SyntheticSpec& spec, const Tensor2& beta,
                            int n_docs, Domain domain, const std::vector<std::string>& words,
                            std::vector<Document>& docs, Tensor2& theta_out) {
    const int k = beta.rows;
    theta_out = Tensor2(n_docs, k);
    docs.reserve(n_docs);
    for (int d = 0; d < n_docs; ++d) {
        const std::vector<double> theta = rng.dirichlet(k, spec.concentration);
        std::copy(theta.begin(), theta.end(), theta_out.row_ptr(d));

        // token distribution = theta^T beta
        std::vector<double> mix(spec.vocab_size, 0.0);
        for (int t = 0; t < k; ++t) {
            const double w = theta[t];
            if (w == 0.0) continue;
            const double* row = beta.row_ptr(t);
            for (int v = 0; v < spec.vocab_size; ++v) mix[v] += w * row[v];
        }

        const int len = std::max(2, rng.poisson(spec.doc_length));
        Document doc;
        doc.domain = domain;
        doc.tokens.reserve(len);
        for (int i = 0; i < len; ++i) doc.tokens.push_back(words[rng.categorical(mix)]);

        int best = 0;
        for (int t = 1; t < k; ++t)
            if (theta[t] > theta[best]) best = t;
        doc.label = best; // dominant topic as class id

        docs.push_back(std::move(doc));
    }
}

} // namespace detail

inline SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SyntheticCorpus out;
    out.vocab_words.reserve(spec.vocab_size);
    for (int v = 0; v < spec.vocab_size; ++v) out.vocab_words.push_back(detail::synthetic_word(v));

    // Shared topics first, then domain-only topics, all from a sparse Dirichlet.
    auto draw_topic = [&](Tensor2& beta, int row) {
        const std::vector<double> t = rng.dirichlet(spec.vocab_size, spec.topic_word_concentration);
        std::copy(t.begin(), t.end(), beta.row_ptr(row));
    };

    const int ks = spec.n_shared_topics + spec.n_source_only;
    const int kt = spec.n_shared_topics + spec.n_target_only;
    out.beta_source = Tensor2(ks, spec.vocab_size);
    out.beta_target = Tensor2(kt, spec.vocab_size);

    Tensor2 shared(spec.n_shared_topics, spec.vocab_size);
    for (int t = 0; t < spec.n_shared_topics; ++t) draw_topic(shared, t);
    for (int t = 0; t < spec.n_shared_topics; ++t) {
        std::copy(shared.row_ptr(t), shared.row_ptr(t) + spec.vocab_size, out.beta_source.row_ptr(t));
        std::copy(shared.row_ptr(t), shared.row_ptr(t) + spec.vocab_size, out.beta_target.row_ptr(t));
    }
    for (int t = 0; t < spec.n_source_only; ++t)
        draw_topic(out.beta_source, spec.n_shared_topics + t);
    for (int t = 0; t < spec.n_target_only; ++t)
        draw_topic(out.beta_target, spec.n_shared_topics + t);

    detail::generate_domain(rng, spec, out.beta_source, spec.n_source_docs, Domain::Source,
                            out.vocab_words, out.source_docs, out.theta_source);
    detail::generate_domain(rng, spec, out.beta_target, spec.n_target_docs, Domain::Target,
                            out.vocab_words, out.target_docs, out.theta_target);
    return out;
}

} // namespace dalta
