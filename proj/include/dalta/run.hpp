#pragma once

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dalta/checkpoint.hpp"
#include "dalta/corpus.hpp"
#include "dalta/diagnostics.hpp"
#include "dalta/eval.hpp"
#include "dalta/trainer.hpp"

namespace dalta {

inline const char* kDaltaVersion = "0.1.0";

// DALTA_LOG=debug|info (default info) controls stderr verbosity.
inline bool log_debug_enabled() {
    static const bool enabled = [] {
        const char* v = std::getenv("DALTA_LOG");
        return v != nullptr && std::string(v) == "debug";
    }();
    return enabled;
}

inline void log_info(const std::string& msg) { std::cerr << "[info] " << msg << "\n"; }

inline void log_debug(const std::string& msg) {
    if (log_debug_enabled()) std::cerr << "[debug] " << msg << "\n";
}

// Fixed-format double rendering so repeated runs emit identical bytes.
inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

struct CorpusSource {
    std::string path;
    CorpusFormat format = CorpusFormat::PlainTextLines;
};

struct VocabSettings {
    int min_df = 2;
    int max_vocab = 5000;
    std::optional<std::string> stopwords_path;
};

struct EvalSettings {
    int top_k = 10;
    int window = 10;
    int folds = 5;
};

struct Candidate {
    std::string name;
    CorpusSource corpus;
};

struct RunConfig {
    uint64_t seed = 0;
    std::string out_dir;
    CorpusSource source;
    CorpusSource target;
    VocabSettings vocab;
    TrainConfig train;
    EvalSettings eval;
    int probe_iters = 5;
    std::vector<Candidate> candidates;
    nlohmann::json raw; // effective config, hashed into the manifest
};

namespace detail {

inline CorpusFormat parse_format(const std::string& s, const std::string& field) {
    if (s == "lines" || s == "text") return CorpusFormat::PlainTextLines;
    if (s == "jsonl") return CorpusFormat::Jsonl;
    throw ConfigError("config field " + field + ": unknown format \"" + s + "\"");
}

inline CorpusSource parse_corpus_source(const nlohmann::json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("path") || !j["path"].is_string() ||
        j["path"].get<std::string>().empty())
        throw ConfigError("config field " + field + ".path: required non-empty string");
    CorpusSource src;
    src.path = j["path"].get<std::string>();
    src.format = parse_format(j.value("format", std::string("lines")), field + ".format");
    return src;
}

template <typename T>
inline T field_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    return j.at(key).get<T>();
}

} // namespace detail

// Parses and validates a structured config file. Every TrainConfig field is
// config-exposed; missing sections fall back to defaults.
inline RunConfig parse_run_config(const nlohmann::json& j, bool need_source = true) {
    RunConfig cfg;
    cfg.raw = j;
    if (!j.is_object()) throw ConfigError("config: top-level must be an object");
    if (!j.contains("seed") || !j["seed"].is_number())
        throw ConfigError("config field seed: required integer");
    cfg.seed = j["seed"].get<uint64_t>();
    cfg.out_dir = detail::field_or<std::string>(j, "out", "");

    if (!j.contains("target")) throw ConfigError("config field target.path: required");
    cfg.target = detail::parse_corpus_source(j["target"], "target");
    if (need_source) {
        const bool target_only =
            j.contains("train") && detail::field_or<bool>(j["train"], "target_only", false);
        if (!target_only) {
            if (!j.contains("source")) throw ConfigError("config field source.path: required");
            cfg.source = detail::parse_corpus_source(j["source"], "source");
        } else if (j.contains("source")) {
            cfg.source = detail::parse_corpus_source(j["source"], "source");
        }
    }

    const nlohmann::json jv = j.value("vocab", nlohmann::json::object());
    cfg.vocab.min_df = detail::field_or<int>(jv, "min_df", 2);
    cfg.vocab.max_vocab = detail::field_or<int>(jv, "max_vocab", 5000);
    if (jv.contains("stopwords") && jv["stopwords"].is_string())
        cfg.vocab.stopwords_path = jv["stopwords"].get<std::string>();
    if (cfg.vocab.min_df < 1) throw ConfigError("config field vocab.min_df: must be >= 1");
    if (cfg.vocab.max_vocab < 2) throw ConfigError("config field vocab.max_vocab: must be >= 2");

    const nlohmann::json jm = j.value("model", nlohmann::json::object());
    cfg.train.model.hidden = detail::field_or<int>(jm, "hidden", 256);
    cfg.train.model.latent = detail::field_or<int>(jm, "latent", 50);
    cfg.train.model.disc_hidden = detail::field_or<int>(jm, "disc_hidden", 128);
    cfg.train.model.k_source = detail::field_or<int>(jm, "k_source", 50);
    cfg.train.model.k_target = detail::field_or<int>(jm, "k_target", 20);

    const nlohmann::json jt = j.value("train", nlohmann::json::object());
    cfg.train.epochs = detail::field_or<int>(jt, "epochs", 20);
    cfg.train.batch_size = detail::field_or<int>(jt, "batch_size", 64);
    cfg.train.mu_start = detail::field_or<double>(jt, "mu_start", 0.7);
    cfg.train.mu_end = detail::field_or<double>(jt, "mu_end", 0.3);
    cfg.train.weights.w_adv = detail::field_or<double>(jt, "w_adv", 1.0);
    cfg.train.weights.w_cons = detail::field_or<double>(jt, "w_cons", 0.1);
    cfg.train.weights.w_kl = detail::field_or<double>(jt, "w_kl", 1.0);
    cfg.train.lr_gen = detail::field_or<double>(jt, "lr_gen", TrainConfig().lr_gen);
    cfg.train.lr_disc = detail::field_or<double>(jt, "lr_disc", TrainConfig().lr_disc);
    cfg.train.checkpoint_every = detail::field_or<int>(jt, "checkpoint_every", 0);
    cfg.train.target_only = detail::field_or<bool>(jt, "target_only", false);
    cfg.train.seed = cfg.seed;
    cfg.train.validate();

    const nlohmann::json je = j.value("eval", nlohmann::json::object());
    cfg.eval.top_k = detail::field_or<int>(je, "top_k", 10);
    cfg.eval.window = detail::field_or<int>(je, "window", 10);
    cfg.eval.folds = detail::field_or<int>(je, "folds", 5);

    const nlohmann::json js = j.value("select", nlohmann::json::object());
    cfg.probe_iters = detail::field_or<int>(js, "probe_iters", 5);
    if (js.contains("candidates")) {
        int i = 0;
        for (const auto& jc : js["candidates"]) {
            Candidate c;
            const std::string field = "select.candidates[" + std::to_string(i) + "]";
            c.name = detail::field_or<std::string>(jc, "name", "candidate" + std::to_string(i));
            c.corpus = detail::parse_corpus_source(jc, field);
            cfg.candidates.push_back(std::move(c));
            ++i;
        }
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path, std::optional<uint64_t> seed_override,
                                 std::optional<std::string> out_override,
                                 bool need_source = true) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    if (seed_override) j["seed"] = *seed_override;
    if (out_override) j["out"] = *out_override;
    return parse_run_config(j, need_source);
}

inline std::string config_hash(const RunConfig& cfg) { return fnv1a64_hex(cfg.raw.dump()); }

struct LoadedCorpus {
    std::vector<Document> docs;
    int skipped_empty = 0;
};

inline LoadedCorpus load_corpus(const CorpusSource& src, Domain domain,
                                const std::unordered_set<std::string>* stopwords) {
    IngestResult r = ingest(src.path, src.format, domain, stopwords);
    if (r.skipped_empty > 0)
        log_debug(src.path + ": skipped " + std::to_string(r.skipped_empty) +
                  " documents empty after preprocessing");
    if (r.docs.empty()) throw ConfigError("corpus " + src.path + " has no usable documents");
    return {std::move(r.docs), r.skipped_empty};
}

inline void write_training_log(const std::vector<TrainLogRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write training log: " + path);
    out << "step\trec_S\trec_T\tadv\tcons\tkl\ttotal\tmu\n";
    for (const TrainLogRow& r : rows) {
        out << r.step << "\t" << fmt_double(r.rec_s) << "\t" << fmt_double(r.rec_t) << "\t"
            << fmt_double(r.adv) << "\t" << fmt_double(r.cons) << "\t" << fmt_double(r.kl) << "\t"
            << fmt_double(r.total) << "\t" << fmt_double(r.mu) << "\n";
    }
}

inline nlohmann::json topic_report_to_json(const TopicReport& report) {
    nlohmann::json topics = nlohmann::json::array();
    for (const Topic& t : report.topics) {
        nlohmann::json words = nlohmann::json::array();
        for (const TopicWord& w : t.words)
            words.push_back({{"word", w.word}, {"weight", w.weight}});
        topics.push_back({{"id", t.id}, {"words", words}});
    }
    return nlohmann::json{{"v", 1}, {"domain", report.domain}, {"topics", topics}};
}

inline nlohmann::json eval_result_to_json(const EvalResult& r) {
    nlohmann::json j{{"v", 1}, {"coherence", r.coherence}, {"diversity", r.diversity}};
    j["purity"] = r.purity ? nlohmann::json(*r.purity) : nlohmann::json(nullptr);
    j["nmi"] = r.nmi ? nlohmann::json(*r.nmi) : nlohmann::json(nullptr);
    j["classification_accuracy"] =
        r.classification_accuracy ? nlohmann::json(*r.classification_accuracy) : nlohmann::json(nullptr);
    return j;
}

inline std::string eval_result_to_tsv(const EvalResult& r) {
    auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string("NA"); };
    return "coherence\tdiversity\tpurity\tnmi\taccuracy\n" + fmt_double(r.coherence) + "\t" +
           fmt_double(r.diversity) + "\t" + opt(r.purity) + "\t" + opt(r.nmi) + "\t" +
           opt(r.classification_accuracy) + "\n";
}

inline nlohmann::json alignment_score_to_json(const AlignmentScore& s) {
    return nlohmann::json{{"v", 1},
                          {"source", s.source_name},
                          {"domain_loss", s.domain_loss},
                          {"target_rec_loss", s.target_rec_loss},
                          {"lambda", s.lambda_sel},
                          {"score", s.score},
                          {"iterations_used", s.iterations_used}};
}

inline nlohmann::json bound_report_to_json(const BoundReport& r) {
    return nlohmann::json{{"v", 1},
                          {"p_S", r.p_s},
                          {"p_T", r.p_t},
                          {"eps_hat_S", r.eps_hat_s},
                          {"eps_hat_T", r.eps_hat_t},
                          {"kl_term", r.kl_term},
                          {"dH_hat", r.dh_hat},
                          {"cons_surrogate", r.cons_surrogate},
                          {"lambda_b", r.lambda_b},
                          {"rhs_total", r.rhs_total},
                          {"complexity_note", r.complexity_note}};
}

struct TrainArtifacts {
    std::string vocab_path;
    std::string checkpoint_path;
    std::string log_path;
    std::string manifest_path;
    long steps = 0;
};

// End-to-end training run: builds the shared vocabulary, vectorizes both
// corpora, trains, and writes vocabulary + checkpoint(s) + training log +
// manifest into the output directory.
inline TrainArtifacts cmd_train(const RunConfig& cfg) {
    if (cfg.out_dir.empty()) throw ConfigError("config field out: required for train");
    std::filesystem::create_directories(cfg.out_dir);
    const std::string hash = config_hash(cfg);

    std::unordered_set<std::string> stopwords;
    const std::unordered_set<std::string>* stop_ptr = nullptr;
    if (cfg.vocab.stopwords_path) {
        stopwords = load_stopwords(*cfg.vocab.stopwords_path);
        stop_ptr = &stopwords;
    }

    LoadedCorpus target = load_corpus(cfg.target, Domain::Target, stop_ptr);
    LoadedCorpus source;
    // In target-only mode a source corpus, when given, still shapes the
    // vocabulary so ablation runs stay comparable with full runs.
    if (!cfg.train.target_only || !cfg.source.path.empty()) {
        source = load_corpus(cfg.source, Domain::Source, stop_ptr);
    }
    const Vocabulary vocab =
        cfg.train.target_only && source.docs.empty()
            ? build_vocabulary(target.docs, cfg.vocab.min_df, cfg.vocab.max_vocab)
            : build_vocabulary(source.docs, target.docs, cfg.vocab.min_df, cfg.vocab.max_vocab);

    TrainArtifacts art;
    art.vocab_path = cfg.out_dir + "/vocab.txt";
    save_vocabulary(vocab, art.vocab_path);
    const std::string vocab_hash = fnv1a64_hex(read_file_bytes(art.vocab_path));
    log_info("vocabulary: " + std::to_string(vocab.size()) + " words");

    BowMatrix target_bow = vectorize(target.docs, vocab).bow;
    BowMatrix source_bow;
    if (!cfg.train.target_only) source_bow = vectorize(source.docs, vocab).bow;

    TrainConfig tc = cfg.train;
    tc.model.vocab_size = vocab.size();

    art.checkpoint_path = cfg.out_dir + "/checkpoint.json";
    auto on_checkpoint = [&](const TrainState& st, long step) {
        // Serialization only reads parameter values.
        TrainState& mut = const_cast<TrainState&>(st);
        save_checkpoint(mut, tc.model, cfg.seed, hash, vocab_hash,
                        cfg.out_dir + "/checkpoint_step" + std::to_string(step) + ".json");
    };

    TrainState state = fit(source_bow, target_bow, tc,
                           tc.checkpoint_every > 0 ? CheckpointFn(on_checkpoint) : nullptr);
    save_checkpoint(state, tc.model, cfg.seed, hash, vocab_hash, art.checkpoint_path);
    art.steps = state.step;

    art.log_path = cfg.out_dir + "/training_log.tsv";
    write_training_log(state.log, art.log_path);

    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const nlohmann::json manifest{
        {"v", 1},
        {"kind", "dalta-manifest"},
        {"version", kDaltaVersion},
        {"seed", cfg.seed},
        {"config_hash", hash},
        {"vocab_hash", vocab_hash},
        {"steps", art.steps},
        {"created", stamp}, // timestamps live only here
        {"artifacts",
         {{"vocab", "vocab.txt"}, {"checkpoint", "checkpoint.json"}, {"training_log", "training_log.tsv"}}},
    };
    art.manifest_path = cfg.out_dir + "/manifest.json";
    std::ofstream mf(art.manifest_path, std::ios::binary);
    if (!mf) throw IoError("cannot write manifest: " + art.manifest_path);
    mf << manifest.dump(2) << "\n";

    log_info("training complete: " + std::to_string(art.steps) + " steps");
    return art;
}

// Loads a checkpoint + vocabulary pair, refusing mismatched hashes.
inline Checkpoint load_compatible_checkpoint(const std::string& checkpoint_path,
                                             const std::string& vocab_path,
                                             const Vocabulary** vocab_out,
                                             Vocabulary& vocab_storage) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    const std::string vocab_hash = fnv1a64_hex(read_file_bytes(vocab_path));
    if (vocab_hash != ckpt.vocab_hash)
        throw CompatibilityError("vocabulary " + vocab_path + " does not match checkpoint " +
                                 checkpoint_path + " (hash " + vocab_hash + " vs " +
                                 ckpt.vocab_hash + ")");
    vocab_storage = load_vocabulary(vocab_path);
    if (vocab_storage.size() != ckpt.model.vocab_size)
        throw CompatibilityError("vocabulary size does not match checkpoint model");
    *vocab_out = &vocab_storage;
    return ckpt;
}

inline TopicReport cmd_topics(const std::string& checkpoint_path, const std::string& vocab_path,
                              Domain domain, int top_k) {
    Vocabulary vocab;
    const Vocabulary* vp = nullptr;
    Checkpoint ckpt = load_compatible_checkpoint(checkpoint_path, vocab_path, &vp, vocab);
    const DecoderParams& dec =
        domain == Domain::Source ? ckpt.state.decoder_source : ckpt.state.decoder_target;
    return extract_topics(dec, *vp, top_k, domain_name(domain));
}

struct EvalRequest {
    std::string checkpoint_path;
    std::string vocab_path;
    CorpusSource corpus;
    Domain domain = Domain::Target;
    EvalSettings settings;
    uint64_t seed = 0;
    bool require_labels = false;
};

// Coherence + diversity always; purity/NMI/classification when the corpus
// carries labels on every kept document.
inline EvalResult cmd_eval(const EvalRequest& req) {
    Vocabulary vocab;
    const Vocabulary* vp = nullptr;
    Checkpoint ckpt = load_compatible_checkpoint(req.checkpoint_path, req.vocab_path, &vp, vocab);

    LoadedCorpus corpus = load_corpus(req.corpus, req.domain, nullptr);
    VectorizeResult vec = vectorize(corpus.docs, *vp);

    const DecoderParams& dec = req.domain == Domain::Source ? ckpt.state.decoder_source
                                                            : ckpt.state.decoder_target;
    const TopicReport report = extract_topics(dec, *vp, req.settings.top_k, domain_name(req.domain));

    EvalResult result;
    const CooccurrenceStats stats = build_cooccurrence(corpus.docs, *vp, req.settings.window);
    result.coherence = npmi_coherence(report, stats, req.settings.top_k).score;
    result.diversity = topic_diversity(report, req.settings.top_k);

    std::vector<int> labels;
    bool labeled = true;
    for (int idx : vec.kept_indices) {
        if (!corpus.docs[idx].label) {
            labeled = false;
            break;
        }
        labels.push_back(*corpus.docs[idx].label);
    }
    if (!labeled && req.require_labels)
        throw ConfigError("label metrics requested but corpus " + req.corpus.path +
                          " is not fully labeled");
    if (labeled) {
        const EncoderTrace t = encode(vec.bow.counts, ckpt.state.encoder, nullptr, false);
        const DecodeTrace d = decode(t.lat.z, dec);
        const ClusterMetrics cm = cluster_metrics(d.alpha, labels);
        result.purity = cm.purity;
        result.nmi = cm.nmi;
        result.classification_accuracy =
            classify_cv(d.alpha, labels, req.settings.folds, req.seed).mean_accuracy;
    }
    return result;
}

struct RankedCandidate {
    std::string name;
    AlignmentScore score;
};

// Scores every candidate source against the target with a shared seed and
// returns them sorted by descending alignment score.
inline std::vector<RankedCandidate> cmd_select_source(const RunConfig& cfg) {
    if (cfg.candidates.size() < 2)
        throw ConfigError("select-source: need at least 2 candidates in select.candidates");

    LoadedCorpus target = load_corpus(cfg.target, Domain::Target, nullptr);

    std::vector<RankedCandidate> ranked;
    for (const Candidate& cand : cfg.candidates) {
        LoadedCorpus source = load_corpus(cand.corpus, Domain::Source, nullptr);
        const Vocabulary vocab =
            build_vocabulary(source.docs, target.docs, cfg.vocab.min_df, cfg.vocab.max_vocab);
        const BowMatrix src_bow = vectorize(source.docs, vocab).bow;
        const BowMatrix tgt_bow = vectorize(target.docs, vocab).bow;

        TrainConfig tc = cfg.train;
        tc.model.vocab_size = vocab.size();
        AlignmentScore s = alignment_score(src_bow, tgt_bow, tc, cfg.probe_iters);
        s.source_name = cand.name;
        ranked.push_back({cand.name, std::move(s)});
        log_debug("candidate " + cand.name + ": score " + fmt_double(ranked.back().score.score));
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.score.score > b.score.score;
    });
    return ranked;
}

// Fixed column order: source, DL, RL_T, score.
inline std::string select_table(const std::vector<RankedCandidate>& ranked) {
    std::string out = "source\tDL\tRL_T\tscore\n";
    for (const RankedCandidate& r : ranked) {
        out += r.name + "\t" + fmt_double(r.score.domain_loss) + "\t" +
               fmt_double(r.score.target_rec_loss) + "\t" + fmt_double(r.score.score) + "\n";
    }
    return out;
}

} // namespace dalta
