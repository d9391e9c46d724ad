#include <gtest/gtest.h>

#include <sstream>

#include "cbd/error.hpp"
#include "cbd/random.hpp"
#include "cbd/text.hpp"

using namespace cbd;

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("You Won't Believe…"), (TokenList{"you", "won't", "believe"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("TOP 10!!"), (TokenList{"top", "10"}));
}

TEST(Tokenize, WhitespaceAndPunctuation) {
    EXPECT_EQ(tokenize("  a\tb\n c　d "), (TokenList{"a", "b", "c", "d"}));
    EXPECT_EQ(tokenize("e-mail (well-known) \"quoted\" ... !!!"), (TokenList{"e-mail", "well-known", "quoted"}));
    EXPECT_EQ(tokenize("«Bonjour» ¡Hola!"), (TokenList{"bonjour", "hola"}));
}

TEST(Tokenize, PureAndDeterministic) {
    const std::string s = "Some SHOCKING title: it's here!";
    EXPECT_EQ(tokenize(s), tokenize(s));
}

TEST(Vocab, FrequencyOrderAndLimits) {
    const std::vector<TokenList> corpus = {{"a", "b", "a"}};
    auto v = build_vocab(corpus, 1, 100);
    ASSERT_EQ(v.size(), 5u);
    EXPECT_LT(v.id("a"), v.id("b"));
    EXPECT_EQ(v.id("a"), Vocab::kFirstToken);
    EXPECT_EQ(v.count(v.id("a")), 2u);

    v = build_vocab(corpus, 2, 100);
    EXPECT_TRUE(v.contains("a"));
    EXPECT_FALSE(v.contains("b"));
    EXPECT_EQ(v.id("b"), Vocab::kUnk);

    v = build_vocab(corpus, 1, 1);
    EXPECT_EQ(v.size(), 4u);
    EXPECT_TRUE(v.contains("a"));

    EXPECT_THROW(build_vocab(corpus, 3, 100), DataError);
}

TEST(Vocab, TiesLexicographic) {
    const auto v = build_vocab({{"zeta", "alpha", "mid"}}, 1, 2);
    EXPECT_EQ(v.token(3), "alpha");
    EXPECT_EQ(v.token(4), "mid");
}

TEST(Vocab, ReservedIds) {
    const auto v = build_vocab({{"x"}}, 1, 10);
    EXPECT_EQ(v.token(Vocab::kPad), "<pad>");
    EXPECT_EQ(v.token(Vocab::kUnk), "<unk>");
    EXPECT_EQ(v.token(Vocab::kMask), "<mask>");
    EXPECT_THROW((void)v.token(99), DataError);
}

TEST(Vocab, TextRoundTripWithReservedHeader) {
    const auto v = build_vocab({{"b", "a", "b", "c"}}, 1, 10);
    std::stringstream ss;
    v.write(ss);
    const std::string text = ss.str();
    EXPECT_EQ(text.rfind("<pad>\n<unk>\n<mask>\n", 0), 0u);
    EXPECT_EQ(Vocab::read(ss), v);
    std::istringstream bad("<pad>\n<mask>\n");
    EXPECT_THROW(Vocab::read(bad), FormatError);
}

TEST(Encode, PadTruncateOov) {
    const auto v = build_vocab({{"a", "b"}}, 1, 10);
    auto x = encode({"a", "b"}, v, 4);
    EXPECT_EQ(x.ids, (std::vector<TokenId>{v.id("a"), v.id("b"), 0, 0}));
    EXPECT_EQ(x.attention_mask, (std::vector<std::uint8_t>{1, 1, 0, 0}));

    x = encode({"zzz"}, v, 3);
    EXPECT_EQ(x.ids[0], Vocab::kUnk);
    EXPECT_EQ(x.attention_mask, (std::vector<std::uint8_t>{1, 0, 0}));

    TokenList many(200, "a");
    many[0] = "b";
    x = encode(many, v, 180);
    EXPECT_EQ(x.ids.size(), 180u);
    EXPECT_EQ(x.real_tokens(), 180u);
    EXPECT_EQ(x.ids[0], v.id("b"));  // head kept
    EXPECT_THROW(encode(many, v, 0), UsageError);
}

TEST(EncodeProperty, MaskSumAndPrefixAndRoundTrip) {
    Rng rng(4);
    const std::vector<std::string> words = {"a", "b", "c", "d", "e", "f"};
    const auto v = build_vocab({words}, 1, 100);
    for (int trial = 0; trial < 300; ++trial) {
        TokenList t;
        for (std::size_t i = 0, n = rng.below(12); i < n; ++i) t.push_back(words[rng.below(words.size())]);
        const std::size_t max_len = 1 + rng.below(10);
        const auto x = encode(t, v, max_len);
        ASSERT_EQ(x.real_tokens(), std::min(t.size(), max_len));
        for (std::size_t i = 1; i < max_len; ++i) ASSERT_LE(x.attention_mask[i], x.attention_mask[i - 1]);
        if (t.size() <= max_len) ASSERT_EQ(decode(x, v), t);
    }
}
