// Built-in synthetic two-class SMS-like corpus. Used when no dataset file
// is supplied: short documents drawn from template families (spam
// campaigns, ham topics) over shared word pools, with a small label-flip
// rate, sized and class-balanced like the UCI SMS Spam collection.
// Template structure matters: a client holding few documents covers few
// templates, so its uploaded gradient concentrates on few feature
// directions, the way real small senders look.
#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "fedval/dataset.hpp"
#include "fedval/rng.hpp"

namespace fedval::dataset {

struct SynthConfig {
    std::size_t n_docs = 5572;
    double spam_rate = 0.134;      // 747 / 5572 in the UCI collection
    double label_flip = 0.02;      // irreducible noise floor
    std::size_t common_words = 240;
    std::size_t class_words = 300;     // per class pool
    std::size_t template_width = 5;    // tokens per template family
    std::size_t spam_templates = 30;
    std::size_t ham_templates = 60;
    std::size_t min_len = 8;
};

namespace detail {

inline std::string pool_word(const char* prefix, std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%s%03zu", prefix, k);
    return buf;
}

// Gently decaying weights w_k = 1 / (k + 20), normalized. Flat enough that
// no single token dominates the feature covariance spectrum.
inline std::vector<double> zipfish(std::size_t n) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = 1.0 / static_cast<double>(k + 20);
        sum += w[k];
    }
    for (double& v : w) v /= sum;
    return w;
}

}  // namespace detail

inline RawCorpus make_synthetic_corpus(RngStream& rng, const SynthConfig& cfg = {}) {
    std::vector<std::string> common, ham, spam;
    for (std::size_t k = 0; k < cfg.common_words; ++k) common.push_back(detail::pool_word("com", k));
    for (std::size_t k = 0; k < cfg.class_words; ++k) ham.push_back(detail::pool_word("ham", k));
    for (std::size_t k = 0; k < cfg.class_words; ++k) spam.push_back(detail::pool_word("spm", k));
    const auto w_common = detail::zipfish(cfg.common_words);
    const auto w_spam_tpl = detail::zipfish(cfg.spam_templates);
    const auto w_ham_tpl = detail::zipfish(cfg.ham_templates);

    // Class-token share per document; the rest is common filler plus a
    // sliver of cross-class leakage so the task stays imperfect.
    const double spam_signal = 0.38, spam_leak = 0.03;
    const double ham_signal = 0.30, ham_leak = 0.02;

    RawCorpus corpus;
    corpus.records.reserve(cfg.n_docs);
    for (std::size_t i = 0; i < cfg.n_docs; ++i) {
        const bool is_spam = rng.uniform01() < cfg.spam_rate;
        // one template family per document, Zipf-weighted
        const std::size_t tpl = is_spam ? numkit::categorical(rng, w_spam_tpl)
                                        : numkit::categorical(rng, w_ham_tpl);
        const std::size_t len =
            cfg.min_len + rng.uniform_below(7) + rng.uniform_below(7);  // mean ~= 14
        const double p_signal = is_spam ? spam_signal : ham_signal;
        const double p_leak = is_spam ? spam_leak : ham_leak;
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            const double u = rng.uniform01();
            const std::string* word = nullptr;
            if (u < p_signal) {
                const auto& pool = is_spam ? spam : ham;
                const std::size_t base =
                    (tpl * cfg.template_width) % (pool.size() - cfg.template_width + 1);
                word = &pool[base + rng.uniform_below(cfg.template_width)];
            } else if (u < p_signal + p_leak) {
                const auto& pool = is_spam ? ham : spam;
                word = &pool[rng.uniform_below(pool.size())];
            } else {
                word = &common[numkit::categorical(rng, w_common)];
            }
            if (!text.empty()) text.push_back(' ');
            text += *word;
        }
        Record rec;
        rec.spam = rng.uniform01() < cfg.label_flip ? !is_spam : is_spam;
        rec.text = std::move(text);
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

}  // namespace fedval::dataset
