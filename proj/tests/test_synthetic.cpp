#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "dalta/synthetic.hpp"

using namespace dalta;

TEST_CASE("synthetic corpora are bitwise reproducible per seed") {
    SyntheticSpec spec;
    spec.vocab_size = 60;
    spec.n_source_docs = 30;
    spec.n_target_docs = 20;
    spec.doc_length = 25;
    spec.seed = 77;

    const SyntheticCorpus a = generate_synthetic(spec);
    const SyntheticCorpus b = generate_synthetic(spec);
    REQUIRE(a.beta_source.data == b.beta_source.data);
    REQUIRE(a.beta_target.data == b.beta_target.data);
    REQUIRE(a.theta_source.data == b.theta_source.data);
    REQUIRE(a.source_docs.size() == b.source_docs.size());
    for (size_t i = 0; i < a.source_docs.size(); ++i)
        REQUIRE(a.source_docs[i].tokens == b.source_docs[i].tokens);
    for (size_t i = 0; i < a.target_docs.size(); ++i)
        REQUIRE(a.target_docs[i].tokens == b.target_docs[i].tokens);
}

TEST_CASE("no domain-only topics means identical topic matrices") {
    SyntheticSpec spec;
    spec.n_shared_topics = 3;
    spec.n_source_only = 0;
    spec.n_target_only = 0;
    spec.vocab_size = 40;
    spec.n_source_docs = 5;
    spec.n_target_docs = 5;
    spec.doc_length = 10;
    spec.seed = 5;
    const SyntheticCorpus c = generate_synthetic(spec);
    REQUIRE(c.beta_source.data == c.beta_target.data);
}

TEST_CASE("ground-truth rows and proportions live on the simplex") {
    SyntheticSpec spec;
    spec.vocab_size = 80;
    spec.n_source_docs = 40;
    spec.n_target_docs = 25;
    spec.doc_length = 20;
    spec.seed = 13;
    const SyntheticCorpus c = generate_synthetic(spec);

    auto check_rows = [](const Tensor2& m) {
        for (int i = 0; i < m.rows; ++i) {
            double sum = 0.0;
            for (int j = 0; j < m.cols; ++j) {
                REQUIRE(m.at(i, j) >= 0.0);
                sum += m.at(i, j);
            }
            REQUIRE(std::fabs(sum - 1.0) < 1e-9);
        }
    };
    check_rows(c.beta_source);
    check_rows(c.beta_target);
    check_rows(c.theta_source);
    check_rows(c.theta_target);

    REQUIRE(c.beta_source.rows == spec.n_shared_topics + spec.n_source_only);
    REQUIRE(c.beta_target.rows == spec.n_shared_topics + spec.n_target_only);
    for (const Document& d : c.source_docs) REQUIRE(d.domain == Domain::Source);
    for (const Document& d : c.target_docs) REQUIRE(d.label.has_value());
}

TEST_CASE("single fixed topic: empirical unigrams converge to the topic row") {
    // Independent oracle: with one topic, theta = [1] and every token is an
    // i.i.d. draw from that topic's word distribution, so the empirical
    // histogram of ~50k tokens must approach it in L1.
    SyntheticSpec spec;
    spec.n_shared_topics = 1;
    spec.n_source_only = 0;
    spec.n_target_only = 0;
    spec.vocab_size = 100;
    spec.doc_length = 50;
    spec.n_source_docs = 1000; // ~50k tokens
    spec.n_target_docs = 1;
    spec.concentration = 1.0;
    spec.seed = 2024;
    const SyntheticCorpus c = generate_synthetic(spec);

    std::map<std::string, long> counts;
    long total = 0;
    for (const Document& d : c.source_docs)
        for (const std::string& t : d.tokens) {
            counts[t] += 1;
            ++total;
        }
    REQUIRE(total >= 40000);

    double l1 = 0.0;
    for (int v = 0; v < spec.vocab_size; ++v) {
        const std::string w = c.vocab_words[v];
        const double emp = counts.count(w) ? static_cast<double>(counts[w]) / total : 0.0;
        l1 += std::fabs(emp - c.beta_source.at(0, v));
    }
    REQUIRE(l1 < 0.05);
}

TEST_CASE("synthetic spec validation") {
    SyntheticSpec spec;
    spec.concentration = 0.0;
    REQUIRE_THROWS_AS(generate_synthetic(spec), ConfigError);
    SyntheticSpec spec2;
    spec2.vocab_size = 0;
    REQUIRE_THROWS_AS(generate_synthetic(spec2), ConfigError);
}
