#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "dalta/errors.hpp"
#include "dalta/tensor.hpp"

namespace dalta {

enum class Domain { Source, Target };

inline const char* domain_name(Domain d) { return d == Domain::Source ? "source" : "target"; }

struct Document {
    std::vector<std::string> tokens; // lowercase, non-empty after preprocessing
    Domain domain = Domain::Source;
    std::optional<int> label;
};

// Shared vocabulary over both domains; index is the exact inverse of words.
struct Vocabulary {
    std::vector<std::string> words;
    std::unordered_map<std::string, int> index;

    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> ws) : words(std::move(ws)) {
        for (size_t i = 0; i < words.size(); ++i) index.emplace(words[i], static_cast<int>(i));
        if (index.size() != words.size()) throw ConfigError("Vocabulary: duplicate words");
    }

    int size() const { return static_cast<int>(words.size()); }

    int lookup(const std::string& w) const {
        auto it = index.find(w);
        return it == index.end() ? -1 : it->second;
    }
};

// Bag-of-words counts; one row per kept document, row length = |V|,
// domain tags aligned to rows. Every row has positive sum.
struct BowMatrix {
    Tensor2 counts;
    std::vector<Domain> domains;

    int n_docs() const { return counts.rows; }
    int vocab_size() const { return counts.cols; }
};

enum class CorpusFormat { PlainTextLines, Jsonl };

// Lowercase, split on non-alphanumeric runs, drop tokens shorter than two
// bytes. Bytes >= 0x80 are kept as token constituents so UTF-8 words survive.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 2) tokens.push_back(cur);
        cur.clear();
    };
    for (unsigned char ch : text) {
        if (std::isalnum(ch) || ch >= 0x80) {
            cur.push_back(static_cast<char>(std::tolower(ch)));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

struct IngestResult {
    std::vector<Document> docs;
    int skipped_empty = 0; // non-blank inputs that became empty after preprocessing
};

inline std::unordered_set<std::string> load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stopword file: " + path);
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        for (auto& tok : tokenize(line)) out.insert(std::move(tok));
    }
    return out;
}

// One Document per non-blank line (PlainTextLines) or per JSONL record with a
// required "text" field and optional integer "label". Documents that come out
// empty after tokenization are skipped and counted.
inline IngestResult ingest(const std::string& path, CorpusFormat format, Domain domain,
                           const std::unordered_set<std::string>* stopwords = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open corpus file: " + path);

    IngestResult result;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

        Document doc;
        doc.domain = domain;
        std::string text;
        if (format == CorpusFormat::PlainTextLines) {
            text = line;
        } else {
            nlohmann::json rec;
            try {
                rec = nlohmann::json::parse(line);
            } catch (const nlohmann::json::parse_error& e) {
                throw FormatError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
            }
            if (!rec.contains("text") || !rec["text"].is_string())
                throw FormatError("line " + std::to_string(line_no) + ": missing \"text\" field");
            text = rec["text"].get<std::string>();
            if (rec.contains("label") && !rec["label"].is_null())
                doc.label = rec["label"].get<int>();
        }

        doc.tokens = tokenize(text);
        if (stopwords != nullptr) {
            std::erase_if(doc.tokens, [&](const std::string& t) { return stopwords->count(t) > 0; });
        }
        if (doc.tokens.empty()) {
            ++result.skipped_empty;
            continue;
        }
        result.docs.push_back(std::move(doc));
    }
    return result;
}

namespace detail {

inline Vocabulary build_vocabulary_from(const std::vector<const std::vector<Document>*>& lists,
                                        int min_df, int max_vocab) {
    std::unordered_map<std::string, long> doc_freq;
    std::unordered_map<std::string, long> total_freq;
    std::unordered_set<std::string> seen;
    for (const auto* docs : lists) {
        for (const Document& d : *docs) {
            seen.clear();
            for (const std::string& t : d.tokens) {
                total_freq[t] += 1;
                if (seen.insert(t).second) doc_freq[t] += 1;
            }
        }
    }

    std::vector<std::pair<std::string, long>> kept;
    for (const auto& [word, df] : doc_freq) {
        if (df >= min_df) kept.emplace_back(word, total_freq[word]);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(kept.size()) > max_vocab) kept.resize(max_vocab);

    if (kept.size() < 2)
        throw ConfigError("vocabulary too small (" + std::to_string(kept.size()) +
                          " words); lower min_df or provide more data");

    std::vector<std::string> words;
    words.reserve(kept.size());
    for (auto& [w, _] : kept) words.push_back(std::move(w));
    return Vocabulary(std::move(words));
}

} // namespace detail

// Union vocabulary over both domains: words with document frequency >= min_df
// across the combined corpora, truncated to the max_vocab highest total-
// frequency words, ordered by descending total frequency then lexicographic.
inline Vocabulary build_vocabulary(const std::vector<Document>& source_docs,
                                   const std::vector<Document>& target_docs,
                                   int min_df = 2, int max_vocab = 5000) {
    if (source_docs.empty() || target_docs.empty())
        throw ConfigError("build_vocabulary: both domains must be non-empty");
    return detail::build_vocabulary_from({&source_docs, &target_docs}, min_df, max_vocab);
}

// Single-domain variant, used by target-only training.
inline Vocabulary build_vocabulary(const std::vector<Document>& docs, int min_df = 2,
                                   int max_vocab = 5000) {
    if (docs.empty()) throw ConfigError("build_vocabulary: corpus must be non-empty");
    return detail::build_vocabulary_from({&docs}, min_df, max_vocab);
}

struct VectorizeResult {
    BowMatrix bow;
    int excluded = 0;              // documents whose row would sum to zero
    std::vector<int> kept_indices; // row -> index into the input doc list
};

// Counts of in-vocabulary tokens; OOV tokens are dropped; all-OOV documents
// are excluded and reported via kept_indices/excluded.
inline VectorizeResult vectorize(const std::vector<Document>& docs, const Vocabulary& vocab) {
    VectorizeResult result;
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < docs.size(); ++i) {
        std::vector<double> row(vocab.size(), 0.0);
        double sum = 0.0;
        for (const std::string& t : docs[i].tokens) {
            const int idx = vocab.lookup(t);
            if (idx >= 0) {
                row[idx] += 1.0;
                sum += 1.0;
            }
        }
        if (sum <= 0.0) {
            ++result.excluded;
            continue;
        }
        rows.push_back(std::move(row));
        result.kept_indices.push_back(static_cast<int>(i));
        result.bow.domains.push_back(docs[i].domain);
    }
    if (rows.empty()) throw ConfigError("vectorize: every document was excluded (all tokens OOV)");

    result.bow.counts = Tensor2(static_cast<int>(rows.size()), vocab.size());
    for (size_t r = 0; r < rows.size(); ++r)
        std::copy(rows[r].begin(), rows[r].end(), result.bow.counts.row_ptr(static_cast<int>(r)));
    return result;
}

// Newline-delimited word list with a one-line header: "#vocab v1 size=<n>".
inline void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write vocabulary file: " + path);
    out << "#vocab v1 size=" << vocab.size() << "\n";
    for (const std::string& w : vocab.words) out << w << "\n";
}

inline Vocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open vocabulary file: " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("#vocab v1 size=", 0) != 0)
        throw FormatError("bad vocabulary header in " + path);
    const long declared = std::stol(header.substr(15));
    std::vector<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) words.push_back(line);
    }
    if (static_cast<long>(words.size()) != declared)
        throw FormatError("vocabulary size mismatch in " + path + ": header says " +
                          std::to_string(declared) + ", found " + std::to_string(words.size()));
    return Vocabulary(std::move(words));
}

} // namespace dalta
