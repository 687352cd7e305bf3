#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>

#include "fedval/dataset.hpp"
#include "fedval/synth.hpp"

using namespace fedval::dataset;
using fedval::numkit::RngStream;

namespace {

std::string write_temp(const std::string& content) {
    static int counter = 0;
    std::string path = ::testing::TempDir() + "fedval_corpus_" + std::to_string(counter++) + ".txt";
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

RawCorpus docs(std::initializer_list<std::pair<bool, const char*>> items) {
    RawCorpus c;
    for (const auto& [spam, text] : items) c.records.push_back({spam, text});
    return c;
}

}  // namespace

TEST(Tokenize, RuleApplication) {
    EXPECT_EQ(tokenize("Free entry!! Win WIN"),
              (std::vector<std::string>{"free", "entry", "win", "win"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("a-b_c"), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(tokenize("  !!  "), std::vector<std::string>{});
    EXPECT_EQ(tokenize("don't"), (std::vector<std::string>{"don", "t"}));
}

TEST(LoadCorpus, ParsesTabSeparatedRecords) {
    auto path = write_temp("ham\tOk lar...\nspam\tFree entry!!\n");
    auto corpus = load_corpus(path);
    ASSERT_EQ(corpus.size(), 2u);
    EXPECT_FALSE(corpus.records[0].spam);
    EXPECT_EQ(corpus.records[0].text, "Ok lar...");
    EXPECT_TRUE(corpus.records[1].spam);
    std::remove(path.c_str());
}

TEST(LoadCorpus, ErrorsNameTheLine) {
    auto path = write_temp("ham\tfine\nno tab here\n");
    try {
        load_corpus(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
    std::remove(path.c_str());

    auto path2 = write_temp("Spam\tcase matters\n");
    EXPECT_THROW(load_corpus(path2), ParseError);
    std::remove(path2.c_str());

    EXPECT_THROW(load_corpus("/nonexistent/fedval.txt"), std::runtime_error);
}

// Runs only when the canonical UCI file is available via FEDVAL_DATA.
TEST(LoadCorpus, CanonicalFileHas5572Records) {
    const char* path = std::getenv("FEDVAL_DATA");
    if (path == nullptr || !std::ifstream(path).good())
        GTEST_SKIP() << "FEDVAL_DATA not set; canonical corpus unavailable";
    auto corpus = load_corpus(path);
    EXPECT_EQ(corpus.size(), 5572u);
}

TEST(Vocabulary, TopKByFrequency) {
    auto corpus = docs({{false, "a a b"}, {false, "b c"}, {false, "a"}});
    auto vocab = build_vocabulary(corpus, 2);
    EXPECT_EQ(vocab.size(), 2u);
    EXPECT_EQ(vocab.lookup("a"), 0);
    EXPECT_EQ(vocab.lookup("b"), 1);
    EXPECT_EQ(vocab.lookup("c"), -1);
}

TEST(Vocabulary, CapacityAboveDistinctKeepsAll) {
    auto corpus = docs({{false, "x y z"}});
    auto vocab = build_vocabulary(corpus, 10);
    EXPECT_EQ(vocab.size(), 3u);
}

TEST(Vocabulary, TiesBreakLexicographically) {
    auto corpus = docs({{false, "y x"}});
    auto vocab = build_vocabulary(corpus, 1);
    EXPECT_EQ(vocab.lookup("x"), 0);
    EXPECT_EQ(vocab.lookup("y"), -1);
}

TEST(Vocabulary, EmptyCorpusRejected) {
    EXPECT_THROW(build_vocabulary(RawCorpus{}, 5), std::invalid_argument);
}

TEST(Vectorize, CountsAndOov) {
    auto corpus = docs({{false, "a a b"}, {false, "q q q"}});
    auto vocab = build_vocabulary(docs({{false, "a a b"}}), 2);
    auto x = vectorize(corpus, vocab);
    ASSERT_EQ(x.rows, 2u);
    ASSERT_EQ(x.cols, 2u);
    EXPECT_DOUBLE_EQ(x.at(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(x.at(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(x.at(1, 0), 0.0);  // all-OOV doc -> zero row
    EXPECT_DOUBLE_EQ(x.at(1, 1), 0.0);
}

TEST(Vectorize, TruncatesAtMaxTokens) {
    std::string text;
    for (int i = 0; i < 200; ++i) text += "w ";
    auto corpus = docs({{false, text.c_str()}});
    auto vocab = build_vocabulary(corpus, 4);
    auto x = vectorize(corpus, vocab);
    EXPECT_DOUBLE_EQ(x.at(0, 0), 150.0);
}

TEST(Partition, CoversAndIsDisjoint) {
    RngStream rng(11, 0);
    SynthConfig sc;
    sc.n_docs = 800;
    auto corpus = make_synthetic_corpus(rng, sc);
    RngStream prng(11, 1);
    auto part = split_and_partition(corpus, prng, 10, 0.5, 100, 50);

    ASSERT_EQ(part.assignment.size(), 800u);
    std::size_t val = 0, train = 0;
    std::vector<std::size_t> counts(10, 0);
    for (int a : part.assignment) {
        if (a == -1) ++val;
        else {
            ASSERT_GE(a, 0);
            ASSERT_LT(a, 10);
            ++counts[static_cast<std::size_t>(a)];
            ++train;
        }
    }
    EXPECT_EQ(val, 100u);
    EXPECT_EQ(train, 700u);
    EXPECT_EQ(part.validation.m(), 100u);
    std::size_t total = 0;
    for (std::size_t c = 0; c < 10; ++c) {
        EXPECT_EQ(part.shards[c].m(), counts[c]);
        EXPECT_EQ(part.shards[c].client_id, static_cast<int>(c));
        total += part.shards[c].m();
    }
    EXPECT_EQ(total, 700u);
}

TEST(Partition, SingleClientTakesEverything) {
    RngStream rng(12, 0);
    SynthConfig sc;
    sc.n_docs = 300;
    auto corpus = make_synthetic_corpus(rng, sc);
    RngStream prng(12, 1);
    auto part = split_and_partition(corpus, prng, 1, 0.5, 50, 40);
    ASSERT_EQ(part.shards.size(), 1u);
    EXPECT_EQ(part.shards[0].m(), 250u);
}

TEST(Partition, ValidationSizeGuard) {
    auto corpus = docs({{false, "a"}, {true, "b"}});
    RngStream rng(1, 0);
    EXPECT_THROW(split_and_partition(corpus, rng, 2, 0.5, 2, 10), std::invalid_argument);
}

TEST(Partition, DeterministicGivenSeed) {
    RngStream gen(21, 0);
    SynthConfig sc;
    sc.n_docs = 400;
    auto corpus = make_synthetic_corpus(gen, sc);
    RngStream a(33, 4), b(33, 4);
    auto p1 = split_and_partition(corpus, a, 8, 0.5, 60, 64);
    auto p2 = split_and_partition(corpus, b, 8, 0.5, 60, 64);
    EXPECT_EQ(p1.assignment, p2.assignment);
    for (std::size_t c = 0; c < 8; ++c) {
        ASSERT_EQ(p1.shards[c].y, p2.shards[c].y);
        ASSERT_EQ(p1.shards[c].x.data, p2.shards[c].x.data);
    }
    EXPECT_EQ(p1.validation.x.data, p2.validation.x.data);
}

// Multinomial concentration: near-uniform proportions at alpha = 1e6 give
// shard sizes with coefficient of variation ~sqrt(n_clients/train) < 0.1.
TEST(Partition, HighAlphaShardSizesConcentrate) {
    RngStream gen(5, 0);
    SynthConfig sc;
    sc.n_docs = 600;
    auto corpus = make_synthetic_corpus(gen, sc);
    double cov_sum = 0.0;
    const int reps = 60;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream rng(1000 + rep, 1);
        auto part = split_and_partition(corpus, rng, 10, 1e6, 100, 30);
        double mean = 0.0, var = 0.0;
        for (const auto& s : part.shards) mean += double(s.m());
        mean /= 10.0;
        for (const auto& s : part.shards) {
            double d = double(s.m()) - mean;
            var += d * d;
        }
        var /= 10.0;
        cov_sum += std::sqrt(var) / mean;
    }
    // E[CoV] ~= sqrt(10/500) = 0.141 for 500 train docs over 10 clients
    EXPECT_LT(cov_sum / reps, 0.2);
}

TEST(Corrupt, TwentyPercentOfTokensDropped) {
    auto corpus = docs({{false, "t1 t2 t3 t4 t5 t6 t7 t8 t9 t10"}});
    RngStream rng(3, 0);
    auto res = corrupt(corpus, rng, 1.0, 0.2);
    ASSERT_TRUE(res.corrupted[0]);
    EXPECT_EQ(tokenize(res.corpus.records[0].text).size(), 8u);
}

TEST(Corrupt, ZeroFractionIsIdentity) {
    auto corpus = docs({{false, "a b c"}, {true, "d e"}});
    RngStream rng(4, 0);
    auto res = corrupt(corpus, rng, 0.0, 0.2);
    EXPECT_EQ(res.corpus.records[0].text, "a b c");
    EXPECT_EQ(res.corpus.records[1].text, "d e");
    for (auto f : res.corrupted) EXPECT_FALSE(f);
}

TEST(Corrupt, FloorRuleSparesShortDocs) {
    auto corpus = docs({{false, "single"}});
    RngStream rng(5, 0);
    auto res = corrupt(corpus, rng, 1.0, 0.2);
    EXPECT_TRUE(res.corrupted[0]);
    EXPECT_EQ(res.corpus.records[0].text, "single");
}

TEST(Corrupt, SelectsFloorOfSampleFraction) {
    RngStream gen(6, 0);
    SynthConfig sc;
    sc.n_docs = 103;
    auto corpus = make_synthetic_corpus(gen, sc);
    RngStream rng(6, 1);
    auto res = corrupt(corpus, rng, 0.2, 0.2);
    std::size_t flagged = 0;
    for (auto f : res.corrupted) flagged += f;
    EXPECT_EQ(flagged, 20u);  // floor(0.2 * 103)
}

// Token deletion can only lower bag-of-words counts, never raise them.
TEST(Corrupt, VectorizeCountsNeverIncrease) {
    RngStream gen(7, 0);
    SynthConfig sc;
    sc.n_docs = 200;
    auto corpus = make_synthetic_corpus(gen, sc);
    auto vocab = build_vocabulary(corpus, 100);
    auto before = vectorize(corpus, vocab);
    RngStream rng(7, 1);
    auto res = corrupt(corpus, rng, 0.3, 0.4);
    auto after = vectorize(res.corpus, vocab);
    for (std::size_t i = 0; i < before.data.size(); ++i)
        ASSERT_LE(after.data[i], before.data[i]);
}

TEST(Synth, CorpusShapeAndBalance) {
    RngStream rng(9, 0);
    auto corpus = make_synthetic_corpus(rng);
    EXPECT_EQ(corpus.size(), 5572u);
    std::size_t spam = 0;
    for (const auto& r : corpus.records) spam += r.spam;
    const double rate = double(spam) / double(corpus.size());
    EXPECT_GT(rate, 0.10);
    EXPECT_LT(rate, 0.17);
}

TEST(ShardCsv, HeaderAndRows) {
    Shard shard;
    shard.client_id = 3;
    shard.x = fedval::numkit::DenseMatrix(2, 3);
    shard.x.at(0, 0) = 1.5;
    shard.y = {1.0, 0.0};
    auto path = ::testing::TempDir() + "fedval_shard.csv";
    write_shard_csv(shard, path);
    std::ifstream in(path);
    std::string header, row1;
    std::getline(in, header);
    std::getline(in, row1);
    EXPECT_EQ(header, "label,f0,f1,f2");
    EXPECT_EQ(row1, "1,1.5,0,0");
    std::remove(path.c_str());
}
