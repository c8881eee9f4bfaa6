#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "dalta/diagnostics.hpp"
#include "dalta/synthetic.hpp"

using namespace dalta;

namespace {

Tensor2 gaussian_cloud(Rng& rng, int n, int dims, double offset0 = 0.0) {
    Tensor2 z(n, dims);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < dims; ++j) z.at(i, j) = rng.normal() + (j == 0 ? offset0 : 0.0);
    }
    return z;
}

// Exhaustive optimal assignment between learned and truth rows, used as the
// oracle for the greedy matcher at small K.
double optimal_mean_cosine(const DecoderParams& learned, const Tensor2& truth) {
    const Tensor2 rows = softmax_rows(learned.beta.value);
    const int k = rows.rows;
    std::vector<int> perm(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
    auto cosine = [&](int a, int b) {
        double dot = 0, na = 0, nb = 0;
        for (int v = 0; v < truth.cols; ++v) {
            dot += rows.at(a, v) * truth.at(b, v);
            na += rows.at(a, v) * rows.at(a, v);
            nb += truth.at(b, v) * truth.at(b, v);
        }
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    double best = -1.0;
    do {
        double sum = 0.0;
        for (int i = 0; i < k; ++i) sum += cosine(i, perm[i]);
        best = std::max(best, sum / k);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

TEST_CASE("dH arithmetic identity from the classifier error") {
    REQUIRE(dh_from_error(0.5) == 0.0);
    REQUIRE(dh_from_error(0.0) == 2.0);
    REQUIRE(dh_from_error(0.25) == 1.0);
    REQUIRE(dh_from_error(0.9) == 0.0); // clamped
}

TEST_CASE("estimate_dh requires twenty vectors per domain") {
    Rng rng(1);
    const Tensor2 small = gaussian_cloud(rng, 10, 5);
    const Tensor2 ok = gaussian_cloud(rng, 30, 5);
    REQUIRE_THROWS_AS(estimate_dh(small, ok), SampleSizeError);
}

TEST_CASE("estimate_dh separates offset clouds and not identical ones") {
    Rng rng(2);
    ProbeConfig cfg;
    cfg.steps = 200;
    cfg.hidden = 16;
    cfg.seed = 5;

    const Tensor2 a = gaussian_cloud(rng, 120, 8);
    const Tensor2 b = gaussian_cloud(rng, 120, 8);
    const double null_dh = estimate_dh(a, b, cfg);
    REQUIRE(null_dh >= 0.0);
    REQUIRE(null_dh < 0.6);

    const Tensor2 c = gaussian_cloud(rng, 120, 8, 8.0);
    const double sep_dh = estimate_dh(a, c, cfg);
    REQUIRE(sep_dh > 1.6);
    REQUIRE(sep_dh <= 2.0);
}

TEST_CASE("alignment score fields reproduce the published arithmetic") {
    // Reported rows: (0.369, 564.68) -> -0.196 and (0.255, 726.58) -> -0.472.
    REQUIRE(alignment_score_value(0.369, 564.68) == Catch::Approx(-0.196).margin(5e-4));
    REQUIRE(alignment_score_value(0.255, 726.58) == Catch::Approx(-0.472).margin(5e-4));
}

TEST_CASE("alignment score is exactly reconstructible from its fields") {
    SyntheticSpec spec;
    spec.vocab_size = 50;
    spec.n_source_docs = 60;
    spec.n_target_docs = 40;
    spec.doc_length = 15;
    spec.seed = 17;
    const SyntheticCorpus corpus = generate_synthetic(spec);
    const Vocabulary vocab = corpus.vocabulary();
    const BowMatrix src = vectorize(corpus.source_docs, vocab).bow;
    const BowMatrix tgt = vectorize(corpus.target_docs, vocab).bow;

    TrainConfig cfg;
    cfg.seed = 4;
    cfg.batch_size = 16;
    cfg.model.hidden = 32;
    cfg.model.latent = 8;
    cfg.model.disc_hidden = 16;
    cfg.model.k_source = 4;
    cfg.model.k_target = 4;

    const AlignmentScore s = alignment_score(src, tgt, cfg, 3);
    REQUIRE(s.iterations_used == 3);
    REQUIRE(std::fabs(s.score - (s.domain_loss - 0.001 * s.target_rec_loss)) < 1e-12);
    REQUIRE(s.domain_loss >= 0.0); // negated adversarial objective
}

TEST_CASE("alignment score prefers a copy of the target over independent noise") {
    // Synthetic ordering oracle: the aligned candidate must win in most seeds.
    SyntheticSpec spec;
    spec.n_shared_topics = 3;
    spec.n_source_only = 1;
    spec.n_target_only = 1;
    spec.vocab_size = 80;
    spec.n_source_docs = 100;
    spec.n_target_docs = 80;
    spec.doc_length = 30;
    spec.seed = 21;
    const SyntheticCorpus corpus = generate_synthetic(spec);
    const Vocabulary vocab = corpus.vocabulary();
    const BowMatrix tgt = vectorize(corpus.target_docs, vocab).bow;

    // Independent noise: same vocabulary, unrelated topics.
    SyntheticSpec noise_spec = spec;
    noise_spec.seed = 99;
    noise_spec.n_shared_topics = 4;
    noise_spec.n_source_only = 0;
    noise_spec.n_target_only = 0;
    const SyntheticCorpus noise = generate_synthetic(noise_spec);
    const BowMatrix noise_bow = vectorize(noise.source_docs, vocab).bow;

    int copy_wins = 0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        TrainConfig cfg;
        cfg.seed = seed;
        cfg.batch_size = 16;
        cfg.model.hidden = 48;
        cfg.model.latent = 10;
        cfg.model.disc_hidden = 24;
        cfg.model.k_source = 4;
        cfg.model.k_target = 4;

        const AlignmentScore copy = alignment_score(tgt, tgt, cfg, 5);
        const AlignmentScore indep = alignment_score(noise_bow, tgt, cfg, 5);
        if (copy.score > indep.score) ++copy_wins;
    }
    REQUIRE(copy_wins >= 4);
}

TEST_CASE("bound report uses the sample proportions and assembles monotonically") {
    SyntheticSpec spec;
    spec.vocab_size = 40;
    spec.n_source_docs = 30;
    spec.n_target_docs = 30;
    spec.doc_length = 12;
    spec.seed = 31;
    const SyntheticCorpus corpus = generate_synthetic(spec);
    const Vocabulary vocab = corpus.vocabulary();
    const BowMatrix src = vectorize(corpus.source_docs, vocab).bow;
    const BowMatrix tgt = vectorize(corpus.target_docs, vocab).bow;

    ModelConfig m;
    m.vocab_size = vocab.size();
    m.hidden = 24;
    m.latent = 6;
    m.disc_hidden = 12;
    m.k_source = 4;
    m.k_target = 4;
    TrainState state(m, 7);

    ProbeConfig probe;
    probe.steps = 100;
    probe.hidden = 12;
    const BoundReport r = bound_report(state, src, tgt, std::nullopt, probe);
    REQUIRE(r.p_s == Catch::Approx(0.5));
    REQUIRE(r.p_t == Catch::Approx(0.5));
    REQUIRE(r.lambda_b == Catch::Approx(60.0));
    REQUIRE(std::isfinite(r.rhs_total));
    REQUIRE(r.rhs_total >= r.p_t * r.eps_hat_t);
    REQUIRE_FALSE(r.complexity_note.empty());

    // Inflating any component term by +1 cannot decrease the assembled bound.
    for (int term = 0; term < 5; ++term) {
        BoundReport inflated = r;
        if (term == 0) inflated.eps_hat_s += 1.0;
        if (term == 1) inflated.eps_hat_t += 1.0;
        if (term == 2) inflated.kl_term += 1.0;
        if (term == 3) inflated.dh_hat += 1.0;
        if (term == 4) inflated.cons_surrogate += 1.0;
        REQUIRE(assemble_bound_rhs(inflated) >= r.rhs_total);
    }
}

TEST_CASE("bound report on identical corpora with shared decoders is degenerate") {
    SyntheticSpec spec;
    spec.vocab_size = 50;
    spec.n_source_docs = 60;
    spec.n_target_docs = 60;
    spec.doc_length = 15;
    spec.seed = 41;
    const SyntheticCorpus corpus = generate_synthetic(spec);
    const Vocabulary vocab = corpus.vocabulary();
    const BowMatrix src = vectorize(corpus.source_docs, vocab).bow;

    ModelConfig m;
    m.vocab_size = vocab.size();
    m.hidden = 24;
    m.latent = 6;
    m.disc_hidden = 16;
    m.k_source = 4;
    m.k_target = 4;
    TrainState state(m, 11);
    // Share decoder weights so the consistency surrogate collapses.
    state.decoder_target.w_prop.value = state.decoder_source.w_prop.value;
    state.decoder_target.b_prop.value = state.decoder_source.b_prop.value;
    state.decoder_target.beta.value = state.decoder_source.beta.value;

    ProbeConfig probe;
    probe.steps = 300;
    probe.hidden = 16;
    probe.seed = 3;
    const BoundReport r = bound_report(state, src, src, std::nullopt, probe);
    REQUIRE(r.cons_surrogate <= 1e-6);
    REQUIRE(r.dh_hat <= 0.2);
    REQUIRE(r.eps_hat_s == Catch::Approx(r.eps_hat_t));
}

TEST_CASE("topic recovery is exact for identical and permuted topics") {
    Rng rng(6);
    Tensor2 truth(4, 30);
    for (int k = 0; k < 4; ++k) {
        const auto row = rng.dirichlet(30, 0.1);
        std::copy(row.begin(), row.end(), truth.row_ptr(k));
    }
    // Build a decoder whose softmax(beta) reproduces the truth rows, permuted.
    const int perm[4] = {2, 0, 3, 1};
    DecoderParams learned("d", 3, 4, 30);
    for (int k = 0; k < 4; ++k)
        for (int v = 0; v < 30; ++v)
            learned.beta.value.at(k, v) = std::log(truth.at(perm[k], v) + 1e-12);

    const RecoveryResult r = topic_recovery_score(learned, truth);
    REQUIRE(r.mean_cosine == Catch::Approx(1.0).margin(1e-6));
    for (const auto& [li, ti] : r.matching) REQUIRE(ti == perm[li]);
}

TEST_CASE("uniform learned topics against one-hot truth score 1/sqrt(V)") {
    const int v = 25;
    Tensor2 truth(3, v);
    truth.at(0, 0) = 1.0;
    truth.at(1, 5) = 1.0;
    truth.at(2, 9) = 1.0;
    DecoderParams learned("d", 2, 3, v); // beta zero -> uniform rows
    const RecoveryResult r = topic_recovery_score(learned, truth);
    REQUIRE(r.mean_cosine == Catch::Approx(1.0 / std::sqrt(v)).margin(1e-12));
}

TEST_CASE("topic recovery is invariant under permutations of learned topics") {
    Rng rng(7);
    Tensor2 truth(4, 20);
    for (int k = 0; k < 4; ++k) {
        const auto row = rng.dirichlet(20, 0.2);
        std::copy(row.begin(), row.end(), truth.row_ptr(k));
    }
    DecoderParams a("a", 2, 4, 20), b("b", 2, 4, 20);
    for (double& x : a.beta.value.data) x = rng.normal();
    const int perm[4] = {3, 1, 0, 2};
    for (int k = 0; k < 4; ++k)
        for (int v = 0; v < 20; ++v) b.beta.value.at(k, v) = a.beta.value.at(perm[k], v);

    REQUIRE(topic_recovery_score(a, truth).mean_cosine ==
            Catch::Approx(topic_recovery_score(b, truth).mean_cosine).margin(1e-12));
}

TEST_CASE("topic recovery handles topic-count mismatch by matching the smaller side") {
    Rng rng(8);
    Tensor2 truth(5, 15);
    for (int k = 0; k < 5; ++k) {
        const auto row = rng.dirichlet(15, 0.3);
        std::copy(row.begin(), row.end(), truth.row_ptr(k));
    }
    DecoderParams learned("d", 2, 3, 15);
    for (double& x : learned.beta.value.data) x = rng.normal();
    const RecoveryResult r = topic_recovery_score(learned, truth);
    REQUIRE(r.matching.size() == 3);
}

TEST_CASE("greedy matching agrees with the exhaustive optimum on separated topics") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 4, v = 40;
        Tensor2 truth(k, v);
        for (int i = 0; i < k; ++i) {
            const auto row = rng.dirichlet(v, 0.05); // sparse, well-separated draws
            std::copy(row.begin(), row.end(), truth.row_ptr(i));
        }
        DecoderParams learned("d", 2, k, v);
        // Noisy log-truth, shuffled: near-diagonal similarity structure.
        std::vector<int> perm{0, 1, 2, 3};
        for (int i = k - 1; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
        for (int i = 0; i < k; ++i)
            for (int w = 0; w < v; ++w)
                learned.beta.value.at(i, w) =
                    std::log(truth.at(perm[i], w) + 1e-10) + 0.05 * rng.normal();

        const RecoveryResult greedy = topic_recovery_score(learned, truth);
        REQUIRE(greedy.mean_cosine ==
                Catch::Approx(optimal_mean_cosine(learned, truth)).margin(1e-9));
    }
}

TEST_CASE("greedy matching never exceeds the exhaustive optimum") {
    Rng rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 5, v = 12;
        Tensor2 truth(k, v);
        for (int i = 0; i < k; ++i) {
            const auto row = rng.dirichlet(v, 1.0); // dense rows, adversarial for greedy
            std::copy(row.begin(), row.end(), truth.row_ptr(i));
        }
        DecoderParams learned("d", 2, k, v);
        for (double& x : learned.beta.value.data) x = rng.normal();
        const RecoveryResult greedy = topic_recovery_score(learned, truth);
        REQUIRE(greedy.mean_cosine <= optimal_mean_cosine(learned, truth) + 1e-12);
    }
}
