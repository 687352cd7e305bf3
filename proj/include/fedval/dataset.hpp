// SMS corpus ingestion and the client data pipeline: tokenize, build the
// top-k vocabulary, bag-of-words featurization, server validation holdout,
// Dirichlet partitioning into non-IID shards, and word-deletion corruption.
//
// Pipeline order matters for reproducibility and is fixed:
//   (optional corrupt) -> validation holdout -> vocabulary from the
//   training side -> vectorize -> standardize (fit on training rows)
//   -> per-sample multinomial assignment to clients.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fedval/dense.hpp"
#include "fedval/rng.hpp"

namespace fedval::dataset {

using numkit::DenseMatrix;
using numkit::RngStream;

struct Record {
    bool spam = false;  // label: spam = 1, ham = 0
    std::string text;
};

struct RawCorpus {
    std::vector<Record> records;
    std::size_t size() const { return records.size(); }
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// UCI SMS Spam collection format: one record per nonempty line,
// "<label>\t<text>", labels exactly "ham" or "spam".
inline RawCorpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    RawCorpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(lineno, "missing tab separator");
        const std::string label = line.substr(0, tab);
        Record rec;
        rec.text = line.substr(tab + 1);
        if (label == "ham") rec.spam = false;
        else if (label == "spam") rec.spam = true;
        else throw ParseError(lineno, "unknown label '" + label + "'");
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

// Lowercase, split on any non-alphanumeric run, drop empties. Byte-level:
// bytes outside [a-zA-Z0-9] (including multibyte sequences) separate tokens.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char ch : text) {
        const bool lower = ch >= 'a' && ch <= 'z';
        const bool upper = ch >= 'A' && ch <= 'Z';
        const bool digit = ch >= '0' && ch <= '9';
        if (lower || digit) {
            cur.push_back(static_cast<char>(ch));
        } else if (upper) {
            cur.push_back(static_cast<char>(ch + 32));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

struct Vocabulary {
    std::unordered_map<std::string, int> index;  // token -> dense id in [0, capacity)
    std::size_t capacity = 0;

    std::size_t size() const { return index.size(); }
    int lookup(const std::string& token) const {
        auto it = index.find(token);
        return it == index.end() ? -1 : it->second;
    }
};

// Documents are truncated to their first `max_tokens` tokens before any
// counting (vocabulary and vectorization alike).
inline constexpr std::size_t kDefaultMaxTokens = 150;

// Top-`capacity` tokens by total corpus frequency; ties broken
// lexicographically. Index order equals rank order.
inline Vocabulary build_vocabulary(const RawCorpus& corpus, std::size_t capacity = 1000,
                                   std::size_t max_tokens = kDefaultMaxTokens,
                                   const std::vector<std::size_t>& doc_subset = {}) {
    if (capacity == 0) throw std::invalid_argument("build_vocabulary: capacity must be >= 1");
    const std::size_t n = doc_subset.empty() ? corpus.size() : doc_subset.size();
    if (n == 0) throw std::invalid_argument("build_vocabulary: empty corpus");

    std::unordered_map<std::string, std::int64_t> freq;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = corpus.records[doc_subset.empty() ? i : doc_subset[i]];
        auto tokens = tokenize(rec.text);
        const std::size_t limit = std::min(tokens.size(), max_tokens);
        for (std::size_t t = 0; t < limit; ++t) ++freq[tokens[t]];
    }

    std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > capacity) ranked.resize(capacity);

    Vocabulary vocab;
    vocab.capacity = capacity;
    for (std::size_t i = 0; i < ranked.size(); ++i) vocab.index[ranked[i].first] = static_cast<int>(i);
    return vocab;
}

// m x capacity matrix of raw token counts; out-of-vocabulary tokens ignored.
inline DenseMatrix vectorize(const RawCorpus& corpus, const Vocabulary& vocab,
                             std::size_t max_tokens = kDefaultMaxTokens) {
    DenseMatrix x(corpus.size(), vocab.capacity, 0.0);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto tokens = tokenize(corpus.records[i].text);
        const std::size_t limit = std::min(tokens.size(), max_tokens);
        double* row = x.row(i);
        for (std::size_t t = 0; t < limit; ++t) {
            const int id = vocab.lookup(tokens[t]);
            if (id >= 0) row[static_cast<std::size_t>(id)] += 1.0;
        }
    }
    return x;
}

inline std::vector<double> labels_of(const RawCorpus& corpus) {
    std::vector<double> y(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) y[i] = corpus.records[i].spam ? 1.0 : 0.0;
    return y;
}

struct Shard {
    int client_id = 0;
    DenseMatrix x;           // m_i x d standardized features
    std::vector<double> y;   // labels in {0,1}
    std::size_t m() const { return y.size(); }
};

struct ValidationSet {
    DenseMatrix x;
    std::vector<double> y;
    std::size_t m() const { return y.size(); }
};

struct PartitionResult {
    std::vector<Shard> shards;
    ValidationSet validation;
    std::vector<int> assignment;  // corpus index -> client id, -1 for validation
    Vocabulary vocab;
    numkit::Standardizer standardizer;
};

// Draw order (fixed): validation indices by partial Fisher-Yates, one
// Dirichlet(alpha) proportion vector, then one categorical draw per
// training document in corpus order.
inline PartitionResult split_and_partition(const RawCorpus& corpus, RngStream& rng,
                                           std::size_t n_clients, double alpha,
                                           std::size_t validation_size = 572,
                                           std::size_t vocab_capacity = 1000,
                                           std::size_t max_tokens = kDefaultMaxTokens) {
    const std::size_t m = corpus.size();
    if (validation_size >= m)
        throw std::invalid_argument("split_and_partition: validation_size must be < corpus size");
    if (n_clients == 0) throw std::invalid_argument("split_and_partition: n_clients must be >= 1");

    PartitionResult out;
    out.assignment.assign(m, 0);
    for (std::size_t idx : numkit::sample_without_replacement(rng, m, validation_size))
        out.assignment[idx] = -1;

    const std::vector<double> proportions = rng.dirichlet(alpha, n_clients);
    std::vector<std::size_t> train_idx;
    train_idx.reserve(m - validation_size);
    for (std::size_t i = 0; i < m; ++i) {
        if (out.assignment[i] == -1) continue;
        out.assignment[i] = static_cast<int>(numkit::categorical(rng, proportions));
        train_idx.push_back(i);
    }

    out.vocab = build_vocabulary(corpus, vocab_capacity, max_tokens, train_idx);
    DenseMatrix features = vectorize(corpus, out.vocab, max_tokens);
    out.standardizer = numkit::standardize_fit(features, train_idx);
    numkit::standardize_apply(features, out.standardizer);
    const std::vector<double> y = labels_of(corpus);

    out.shards.resize(n_clients);
    std::vector<std::size_t> counts(n_clients, 0);
    for (std::size_t i = 0; i < m; ++i)
        if (out.assignment[i] >= 0) ++counts[static_cast<std::size_t>(out.assignment[i])];
    for (std::size_t c = 0; c < n_clients; ++c) {
        out.shards[c].client_id = static_cast<int>(c);
        out.shards[c].x = DenseMatrix(counts[c], features.cols);
        out.shards[c].y.reserve(counts[c]);
    }
    out.validation.x = DenseMatrix(validation_size, features.cols);

    std::vector<std::size_t> fill(n_clients, 0);
    std::size_t vfill = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const int a = out.assignment[i];
        if (a == -1) {
            std::copy(features.row(i), features.row(i) + features.cols, out.validation.x.row(vfill++));
            out.validation.y.push_back(y[i]);
        } else {
            Shard& shard = out.shards[static_cast<std::size_t>(a)];
            std::copy(features.row(i), features.row(i) + features.cols,
                      shard.x.row(fill[static_cast<std::size_t>(a)]++));
            shard.y.push_back(y[i]);
        }
    }
    return out;
}

struct CorruptionResult {
    RawCorpus corpus;
    std::vector<std::uint8_t> corrupted;  // per-document flag
};

// A floor(sample_fraction * m) subset of documents each lose
// floor(word_drop_fraction * len) tokens, chosen uniformly without
// replacement. Corrupted documents are rebuilt from their surviving tokens
// joined by single spaces; untouched documents keep their original text.
// Deletion draws happen in ascending document order.
inline CorruptionResult corrupt(const RawCorpus& corpus, RngStream& rng,
                                double sample_fraction = 0.2, double word_drop_fraction = 0.2) {
    if (!(sample_fraction >= 0.0 && sample_fraction <= 1.0) ||
        !(word_drop_fraction >= 0.0 && word_drop_fraction <= 1.0))
        throw std::invalid_argument("corrupt: fractions must lie in [0,1]");

    CorruptionResult out;
    out.corpus = corpus;
    out.corrupted.assign(corpus.size(), 0);
    const auto n_docs = static_cast<std::size_t>(sample_fraction * static_cast<double>(corpus.size()));
    if (n_docs == 0) return out;

    for (std::size_t idx : numkit::sample_without_replacement(rng, corpus.size(), n_docs))
        out.corrupted[idx] = 1;

    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!out.corrupted[i]) continue;
        auto tokens = tokenize(out.corpus.records[i].text);
        const auto drop = static_cast<std::size_t>(word_drop_fraction * static_cast<double>(tokens.size()));
        if (drop == 0) continue;  // floor rule: short documents survive intact
        std::vector<std::uint8_t> dead(tokens.size(), 0);
        for (std::size_t pos : numkit::sample_without_replacement(rng, tokens.size(), drop))
            dead[pos] = 1;
        std::string rebuilt;
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            if (dead[t]) continue;
            if (!rebuilt.empty()) rebuilt.push_back(' ');
            rebuilt += tokens[t];
        }
        out.corpus.records[i].text = std::move(rebuilt);
    }
    return out;
}

// Optional shard dump, one CSV per client: header "label,f0,...,f<d-1>".
inline void write_shard_csv(const Shard& shard, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "label";
    for (std::size_t c = 0; c < shard.x.cols; ++c) out << ",f" << c;
    out << "\n";
    char buf[32];
    for (std::size_t r = 0; r < shard.m(); ++r) {
        out << (shard.y[r] > 0.5 ? 1 : 0);
        for (std::size_t c = 0; c < shard.x.cols; ++c) {
            const int len = std::snprintf(buf, sizeof buf, "%.17g", shard.x.at(r, c));
            out << ',';
            out.write(buf, len);
        }
        out << "\n";
    }
}

}  // namespace fedval::dataset
