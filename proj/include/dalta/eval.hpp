#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dalta/corpus.hpp"
#include "dalta/model.hpp"
#include "dalta/rng.hpp"
#include "dalta/tensor.hpp"

namespace dalta {

// Boolean sliding-window co-occurrence counts: a word or pair counts at most
// once per window; documents shorter than the window form one window.
struct CooccurrenceStats {
    int window = 10;
    long total_windows = 0;
    std::unordered_map<std::string, long> word_windows;
    std::unordered_map<std::string, long> pair_windows; // key "a\tb" with a < b

    static std::string pair_key(const std::string& a, const std::string& b) {
        return a < b ? a + "\t" + b : b + "\t" + a;
    }

    long word_count(const std::string& w) const {
        auto it = word_windows.find(w);
        return it == word_windows.end() ? 0 : it->second;
    }

    long pair_count(const std::string& a, const std::string& b) const {
        auto it = pair_windows.find(pair_key(a, b));
        return it == pair_windows.end() ? 0 : it->second;
    }
};

inline CooccurrenceStats build_cooccurrence(const std::vector<Document>& docs,
                                            const Vocabulary& vocab, int window = 10) {
    if (window < 2) throw ConfigError("build_cooccurrence: window must be >= 2");
    CooccurrenceStats stats;
    stats.window = window;

    std::set<std::string> in_window;
    for (const Document& doc : docs) {
        std::vector<std::string> toks;
        toks.reserve(doc.tokens.size());
        for (const std::string& t : doc.tokens)
            if (vocab.lookup(t) >= 0) toks.push_back(t);
        if (toks.empty()) continue;

        const int n = static_cast<int>(toks.size());
        const int n_windows = std::max(1, n - window + 1);
        for (int start = 0; start < n_windows; ++start) {
            const int end = std::min(n, start + window);
            in_window.clear();
            for (int i = start; i < end; ++i) in_window.insert(toks[i]);

            stats.total_windows += 1;
            for (auto it = in_window.begin(); it != in_window.end(); ++it) {
                stats.word_windows[*it] += 1;
                for (auto jt = std::next(it); jt != in_window.end(); ++jt)
                    stats.pair_windows[CooccurrenceStats::pair_key(*it, *jt)] += 1;
            }
        }
    }
    return stats;
}

struct CoherenceResult {
    double score = 0.0;
    int skipped_pairs = 0;   // pairs with a word entirely absent from the stats
    int excluded_topics = 0; // topics whose every pair was skipped
    std::vector<double> per_topic;
};

// NPMI(w_i, w_j) = ln(P_ij / (P_i P_j)) / (-ln P_ij); zero joint counts
// contribute -1, pairs that co-occur in every window contribute +1.
inline double npmi_pair(long c_i, long c_j, long c_ij, long total) {
    if (c_ij == 0) return -1.0;
    if (c_ij == total) return 1.0;
    const double p_i = static_cast<double>(c_i) / total;
    const double p_j = static_cast<double>(c_j) / total;
    const double p_ij = static_cast<double>(c_ij) / total;
    return std::log(p_ij / (p_i * p_j)) / (-std::log(p_ij));
}

// Topic score = mean NPMI over all C(top_k, 2) unordered pairs; model score =
// mean over topics that had at least one scorable pair.
inline CoherenceResult npmi_coherence(const TopicReport& report, const CooccurrenceStats& stats,
                                      int top_k) {
    if (stats.total_windows < 1) throw ConfigError("npmi_coherence: empty co-occurrence stats");
    CoherenceResult result;
    double model_sum = 0.0;
    int scored_topics = 0;

    for (const Topic& topic : report.topics) {
        const int k = std::min<int>(top_k, static_cast<int>(topic.words.size()));
        double topic_sum = 0.0;
        int topic_pairs = 0;
        for (int i = 0; i < k; ++i) {
            const long c_i = stats.word_count(topic.words[i].word);
            for (int j = i + 1; j < k; ++j) {
                const long c_j = stats.word_count(topic.words[j].word);
                if (c_i == 0 || c_j == 0) {
                    ++result.skipped_pairs;
                    continue;
                }
                const long c_ij = stats.pair_count(topic.words[i].word, topic.words[j].word);
                topic_sum += npmi_pair(c_i, c_j, c_ij, stats.total_windows);
                ++topic_pairs;
            }
        }
        if (topic_pairs == 0) {
            ++result.excluded_topics;
            result.per_topic.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double topic_score = topic_sum / topic_pairs;
        result.per_topic.push_back(topic_score);
        model_sum += topic_score;
        ++scored_topics;
    }
    if (scored_topics == 0) throw ConfigError("npmi_coherence: no scorable topics");
    result.score = model_sum / scored_topics;
    return result;
}

// Fraction of unique words among the top_k words of all topics.
inline double topic_diversity(const TopicReport& report, int top_k = 10) {
    if (report.topics.empty()) throw ConfigError("topic_diversity: empty report");
    std::set<std::string> unique;
    long slots = 0;
    for (const Topic& t : report.topics) {
        if (static_cast<int>(t.words.size()) < top_k)
            throw ConfigError("topic_diversity: a topic has fewer than top_k ranked words");
        for (int i = 0; i < top_k; ++i) unique.insert(t.words[i].word);
        slots += top_k;
    }
    return static_cast<double>(unique.size()) / slots;
}

struct ClusterMetrics {
    double purity = 0.0;
    double nmi = 0.0;
};

// Documents are assigned to their argmax topic. Purity is the fraction of
// documents in their cluster's majority class; NMI uses the sqrt-entropy
// normalization with natural logs, 0 ln 0 := 0, and is defined as 0 when
// either marginal entropy is 0.
inline ClusterMetrics cluster_metrics(const Tensor2& doc_topic, const std::vector<int>& labels) {
    if (doc_topic.rows != static_cast<int>(labels.size()))
        throw DimensionError("cluster_metrics: row/label count mismatch");
    if (doc_topic.rows < 2) throw ConfigError("cluster_metrics: need at least 2 documents");

    const int n = doc_topic.rows;
    std::vector<int> cluster(n);
    for (int i = 0; i < n; ++i) {
        const double* row = doc_topic.row_ptr(i);
        int best = 0;
        for (int j = 1; j < doc_topic.cols; ++j)
            if (row[j] > row[best]) best = j;
        cluster[i] = best;
    }

    std::map<int, std::map<int, int>> table; // cluster -> label -> count
    std::map<int, int> cluster_sizes, label_sizes;
    for (int i = 0; i < n; ++i) {
        table[cluster[i]][labels[i]] += 1;
        cluster_sizes[cluster[i]] += 1;
        label_sizes[labels[i]] += 1;
    }

    ClusterMetrics out;
    long majority = 0;
    for (const auto& [c, row] : table) {
        int best = 0;
        for (const auto& [l, cnt] : row) best = std::max(best, cnt);
        majority += best;
    }
    out.purity = static_cast<double>(majority) / n;

    auto entropy = [n](const std::map<int, int>& sizes) {
        double h = 0.0;
        for (const auto& [_, cnt] : sizes) {
            const double p = static_cast<double>(cnt) / n;
            if (p > 0.0) h -= p * std::log(p);
        }
        return h;
    };
    const double h_c = entropy(cluster_sizes);
    const double h_l = entropy(label_sizes);
    if (h_c <= 0.0 || h_l <= 0.0) {
        out.nmi = 0.0;
        return out;
    }
    double mi = 0.0;
    for (const auto& [c, row] : table) {
        for (const auto& [l, cnt] : row) {
            const double p_cl = static_cast<double>(cnt) / n;
            const double p_c = static_cast<double>(cluster_sizes[c]) / n;
            const double p_l = static_cast<double>(label_sizes[l]) / n;
            if (p_cl > 0.0) mi += p_cl * std::log(p_cl / (p_c * p_l));
        }
    }
    out.nmi = mi / std::sqrt(h_c * h_l);
    return out;
}

struct CvResult {
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracy;
    std::vector<bool> fold_missing_class; // a class absent from that training fold
};

namespace detail {

// Multinomial logistic regression: full-batch gradient descent, L2 penalty on
// the weights only.
struct LogisticModel {
    Tensor2 w; // features x classes
    Tensor2 b; // 1 x classes
};

inline LogisticModel fit_logistic(const Tensor2& x, const std::vector<int>& y, int n_classes,
                                  double l2, int iters, double lr) {
    LogisticModel m{Tensor2(x.cols, n_classes), Tensor2(1, n_classes)};
    const int n = x.rows;
    for (int it = 0; it < iters; ++it) {
        Tensor2 probs = softmax_rows(add_row_bias(matmul(x, m.w), m.b));
        for (int i = 0; i < n; ++i) probs.at(i, y[i]) -= 1.0;
        probs.scale(1.0 / n);
        Tensor2 dw = matmul_tn(x, probs);
        for (size_t i = 0; i < dw.data.size(); ++i) dw.data[i] += l2 * m.w.data[i];
        const Tensor2 db = column_sums(probs);
        for (size_t i = 0; i < m.w.data.size(); ++i) m.w.data[i] -= lr * dw.data[i];
        for (size_t i = 0; i < m.b.data.size(); ++i) m.b.data[i] -= lr * db.data[i];
    }
    return m;
}

inline int predict_logistic(const LogisticModel& m, const double* row, int features) {
    int best = 0;
    double best_score = -1e300;
    for (int c = 0; c < m.w.cols; ++c) {
        double s = m.b.data[c];
        for (int f = 0; f < features; ++f) s += row[f] * m.w.at(f, c);
        if (s > best_score) {
            best_score = s;
            best = c;
        }
    }
    return best;
}

} // namespace detail

// Seeded stratified k-fold cross-validation of a multinomial logistic
// regression on document-topic features (used as-is; they already live on the
// simplex). L2 penalty 1e-3, 500 full-batch iterations at lr 0.5.
inline CvResult classify_cv(const Tensor2& doc_topic, const std::vector<int>& labels, int folds,
                            uint64_t seed) {
    if (doc_topic.rows != static_cast<int>(labels.size()))
        throw DimensionError("classify_cv: row/label count mismatch");

    std::map<int, std::vector<int>> by_class;
    for (int i = 0; i < doc_topic.rows; ++i) by_class[labels[i]].push_back(i);
    if (by_class.size() < 2) throw ConfigError("classify_cv: need at least 2 classes");
    for (const auto& [cls, idx] : by_class) {
        if (static_cast<int>(idx.size()) < folds)
            throw ConfigError("classify_cv: class " + std::to_string(cls) + " has fewer than " +
                              std::to_string(folds) + " documents");
    }

    // Remap labels to a dense 0..C-1 range.
    std::map<int, int> remap;
    for (const auto& [cls, _] : by_class) remap.emplace(cls, static_cast<int>(remap.size()));
    const int n_classes = static_cast<int>(remap.size());

    // Stratified split: shuffle within each class, deal round-robin.
    Rng rng(seed);
    std::vector<std::vector<int>> fold_of(folds);
    for (auto& [cls, idx] : by_class) {
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_int(static_cast<int>(i))]);
        for (size_t i = 0; i < idx.size(); ++i)
            fold_of[i % folds].push_back(idx[i]);
    }

    CvResult result;
    double acc_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
        std::vector<int> train_rows, test_rows = fold_of[f];
        for (int g = 0; g < folds; ++g)
            if (g != f) train_rows.insert(train_rows.end(), fold_of[g].begin(), fold_of[g].end());
        std::sort(train_rows.begin(), train_rows.end());
        std::sort(test_rows.begin(), test_rows.end());

        Tensor2 x_train(static_cast<int>(train_rows.size()), doc_topic.cols);
        std::vector<int> y_train(train_rows.size());
        std::vector<bool> present(n_classes, false);
        for (size_t i = 0; i < train_rows.size(); ++i) {
            std::copy(doc_topic.row_ptr(train_rows[i]), doc_topic.row_ptr(train_rows[i]) + doc_topic.cols,
                      x_train.row_ptr(static_cast<int>(i)));
            y_train[i] = remap.at(labels[train_rows[i]]);
            present[y_train[i]] = true;
        }
        result.fold_missing_class.push_back(
            std::find(present.begin(), present.end(), false) != present.end());

        const detail::LogisticModel m =
            detail::fit_logistic(x_train, y_train, n_classes, 1e-3, 500, 0.5);

        int correct = 0;
        for (int row : test_rows) {
            if (detail::predict_logistic(m, doc_topic.row_ptr(row), doc_topic.cols) ==
                remap.at(labels[row]))
                ++correct;
        }
        const double acc = test_rows.empty() ? 0.0 : static_cast<double>(correct) / test_rows.size();
        result.fold_accuracy.push_back(acc);
        acc_sum += acc;
    }
    result.mean_accuracy = acc_sum / folds;
    return result;
}

struct EvalResult {
    double coherence = 0.0;
    double diversity = 0.0;
    std::optional<double> purity;
    std::optional<double> nmi;
    std::optional<double> classification_accuracy;
};

} // namespace dalta
