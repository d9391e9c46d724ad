#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "cbd/error.hpp"
#include "cbd/word2vec.hpp"
#include "support/synthetic.hpp"

using namespace cbd;

namespace {

std::shared_ptr<const Vocab> vocab_of(const std::vector<TokenList>& corpus) {
    return std::make_shared<const Vocab>(build_vocab(corpus, 1, 1000));
}

std::vector<TokenList> pet_corpus() {
    std::vector<TokenList> c;
    for (int i = 0; i < 60; ++i) {
        c.push_back({"the", "cat", "sat", "on", "the", "mat"});
        c.push_back({"the", "dog", "sat", "on", "the", "mat"});
        c.push_back({"markets", "fear", "the", "economy", "stalls", "again"});
        c.push_back({"investors", "watch", "economy", "and", "markets", "closely"});
    }
    return c;
}

}  // namespace

TEST(SkipGramPair, LossMatchesDefinition) {
    Vector v(2), u(2);
    v << 0.3, -0.2;
    u << 0.5, 0.1;
    Matrix neg(1, 2);
    neg << -0.4, 0.7;
    const double expect = -std::log(1 / (1 + std::exp(-u.dot(v)))) - std::log(1 / (1 + std::exp(neg.row(0).dot(v))));
    EXPECT_NEAR(skipgram_pair_loss(v, u, neg), expect, 1e-14);
}

TEST(SkipGramPair, GradientMatchesFiniteDifferences) {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index d = 3 + static_cast<Eigen::Index>(rng.below(6));
        const Eigen::Index k = 1 + static_cast<Eigen::Index>(rng.below(5));
        Vector v(d), u(d);
        Matrix neg(k, d);
        for (Eigen::Index i = 0; i < d; ++i) {
            v[i] = rng.uniform(-1, 1);
            u[i] = rng.uniform(-1, 1);
            for (Eigen::Index j = 0; j < k; ++j) neg(j, i) = rng.uniform(-1, 1);
        }
        const auto g = skipgram_pair_gradient(v, u, neg);
        auto loss = [&] { return skipgram_pair_loss(v, u, neg); };
        EXPECT_LE(relative_error(g.center, numeric_gradient(v, loss)), 1e-5);
        EXPECT_LE(relative_error(g.context, numeric_gradient(u, loss)), 1e-5);
        EXPECT_LE(relative_error(g.negatives, numeric_gradient(neg, loss)), 1e-5);
    }
}

TEST(SkipGramPair, TemplatedOnScalar) {
    Eigen::VectorXf v = Eigen::VectorXf::Constant(3, 0.1f);
    Eigen::MatrixXf neg = Eigen::MatrixXf::Zero(2, 3);
    const float l = skipgram_pair_loss<float>(v, v, neg);
    EXPECT_NEAR(l, -std::log(1 / (1 + std::exp(-0.03f))) + 2 * std::log(2.0f), 1e-5f);
}

TEST(Unigram, DrawFrequenciesMatchPowerLaw) {
    const std::vector<std::uint64_t> counts = {0, 0, 0, 10, 20, 30, 40};
    const UnigramSampler s(counts, 0.75);
    double z = 0;
    for (auto c : counts) z += std::pow(static_cast<double>(c), 0.75) * (c > 0);
    std::vector<std::size_t> hits(counts.size(), 0);
    Rng rng(3);
    const std::size_t n = 1'000'000;
    for (std::size_t i = 0; i < n; ++i) ++hits[static_cast<std::size_t>(s.sample(rng))];
    for (std::size_t id = 0; id < counts.size(); ++id) {
        const double p = counts[id] ? std::pow(static_cast<double>(counts[id]), 0.75) / z : 0.0;
        EXPECT_NEAR(s.probability(static_cast<TokenId>(id)), p, 1e-12);
        const double freq = static_cast<double>(hits[id]) / static_cast<double>(n);
        if (p == 0) {
            EXPECT_EQ(hits[id], 0u);
        } else {
            EXPECT_LT(std::abs(freq - p) / p, 0.01) << "token " << id;
        }
    }
}

TEST(Train, SharedContextsCloserThanUnrelated) {
    const auto corpus = pet_corpus();
    W2VConfig cfg;
    cfg.dim = 16;
    cfg.epochs = 10;
    cfg.window = 3;
    const auto m = train_skipgram(corpus, vocab_of(corpus), cfg);
    EXPECT_GT(cosine_similarity(embed_word(m, "cat"), embed_word(m, "dog")),
              cosine_similarity(embed_word(m, "cat"), embed_word(m, "economy")));
}

TEST(Train, DeterministicAndShaped) {
    const auto corpus = pet_corpus();
    const auto v = vocab_of(corpus);
    W2VConfig cfg;
    cfg.dim = 10;
    cfg.epochs = 2;
    const auto a = train_skipgram(corpus, v, cfg);
    const auto b = train_skipgram(corpus, v, cfg);
    EXPECT_EQ(a.input, b.input);
    EXPECT_EQ(a.output, b.output);
    EXPECT_EQ(a.input.cols(), 10);
    EXPECT_EQ(static_cast<std::size_t>(a.input.rows()), v->size());
    EXPECT_EQ(embed_word(a, "cat").size(), 10);
    EXPECT_TRUE(a.input.allFinite());
    cfg.seed = 2;
    EXPECT_NE(train_skipgram(corpus, v, cfg).input, a.input);
}

TEST(Train, LossDecreasesOverEpochs) {
    const auto corpus = cbd::testing::make_topic_corpus(3, 6, 150, 8, 5);
    W2VConfig cfg;
    cfg.dim = 12;
    cfg.epochs = 6;
    SkipGramTrace trace;
    const auto m = train_skipgram(corpus, vocab_of(corpus), cfg, &trace);
    ASSERT_EQ(trace.epoch_loss.size(), 6u);
    for (std::size_t k = 1; k < trace.epoch_loss.size(); ++k) EXPECT_LE(trace.epoch_loss[k], trace.epoch_loss[0]);
    EXPECT_LT(skipgram_corpus_loss(m, corpus, cfg, 9), trace.epoch_loss[0]);
}

TEST(Train, Errors) {
    const std::vector<TokenList> singles = {{"a"}, {"b"}};
    W2VConfig cfg;
    EXPECT_THROW(train_skipgram(singles, vocab_of(singles), cfg), DataError);
    cfg.dim = 0;
    EXPECT_THROW(train_skipgram(pet_corpus(), vocab_of(pet_corpus()), cfg), UsageError);
    cfg = {};
    cfg.negatives = 0;
    EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(Embed, LookupOovAndPooling) {
    EmbeddingMatrix m;
    m.vocab = vocab_of({{"x", "y"}});
    m.input = RowMatrix::Zero(5, 2);
    m.input.row(Vocab::kUnk) << 9, 9;
    m.input.row(m.vocab->id("x")) << 1, 0;
    m.input.row(m.vocab->id("y")) << 0, 1;
    m.output = m.input;
    EXPECT_EQ(embed_word(m, "x"), (Vector(2) << 1, 0).finished());
    EXPECT_EQ(embed_word(m, "never-seen"), (Vector(2) << 9, 9).finished());
    EXPECT_EQ(embed_word(m, "x"), embed_word(m, "x"));
    EXPECT_EQ(embed_text(m, {"x"}), embed_word(m, "x"));
    EXPECT_EQ(embed_text(m, {}), Vector::Zero(2));
    EXPECT_EQ(embed_text(m, {"x", "y"}), (Vector(2) << 0.5, 0.5).finished());
}

TEST(Embed, TextFormatRoundTrip) {
    const auto corpus = pet_corpus();
    W2VConfig cfg;
    cfg.dim = 5;
    cfg.epochs = 1;
    const auto m = train_skipgram(corpus, vocab_of(corpus), cfg);
    std::stringstream ss;
    write_embedding_text(m, ss);
    std::istringstream copy(ss.str());
    std::string header;
    std::getline(copy, header);
    EXPECT_EQ(header, "5 " + std::to_string(m.vocab->size()));
    const auto back = read_embedding_text(ss);
    EXPECT_EQ(back.input, m.input);  // shortest round-trip decimal text
    EXPECT_EQ(back.vocab->size(), m.vocab->size());
    std::istringstream bad("5 3\n<pad> 1 2\n");
    EXPECT_THROW(read_embedding_text(bad), FormatError);
}
