#include <gtest/gtest.h>

#include "support/test_support.hpp"

namespace affecton {
namespace {

const SentimentLexicon& sentiment() {
  static const SentimentLexicon s = [] {
    AffectiveLexicon lex;
    lex.insert("happy", {1.000, 0.735, 0.772});
    lex.insert("sad", {0.225, 0.333, 0.149});
    lex.insert("love", {1.000, 0.519, 0.673});
    lex.insert("table", {0.5, 0.2, 0.4});
    return SentimentLexicon(lex);
  }();
  return s;
}

double compound(const std::string& text) { return valence_score(tokenize(text), sentiment()).compound; }

TEST(Perplexity, UniformModelGivesVocabularySize) {
  const auto m = train({{"a", "b", "c"}, {"d"}}, 2, 1e12);
  const double v = static_cast<double>(m.vocabulary().size());
  const std::vector<TokenSeq> corpus = {{"a", "b"}, {"d", "d", "c", "a"}};
  EXPECT_NEAR(perplexity(m, std::span<const TokenSeq>(corpus)), v, 1e-6);
}

TEST(Perplexity, HandBuiltProbabilities) {
  // Three tokens at 0.5, 0.25, 0.25, then EOS at 0.5.
  const auto model = testing::TableModel({"x", "y"}, [](std::span<const TokenId> ctx) {
    std::vector<double> p(6, 0.0);
    switch (ctx.size()) {
      case 0: p[4] = 0.5; p[5] = 0.5; break;
      case 1: p[5] = 0.25; p[4] = 0.75; break;
      case 2: p[4] = 0.25; p[5] = 0.75; break;
      default: p[Vocabulary::kEos] = 0.5; p[4] = 0.5; break;
    }
    return p;
  });
  const std::vector<TokenSeq> corpus = {{"x", "y", "x"}};
  EXPECT_NEAR(perplexity(model, std::span<const TokenSeq>(corpus)), 2.8284, 1e-4);
  EXPECT_NEAR(perplexity(model, std::span<const TokenSeq>(corpus)), std::sqrt(8.0), 1e-12);
}

TEST(Perplexity, RejectsEmptyInput) {
  const auto m = train({{"a"}}, 2, 1.0);
  EXPECT_THROW(perplexity(m, std::span<const TokenSeq>()), ConfigError);
  const std::vector<TokenSeq> with_empty = {{}};
  EXPECT_THROW(perplexity(m, std::span<const TokenSeq>(with_empty)), ConfigError);
}

TEST(Bleu, IdenticalCorporaScoreOne) {
  const std::vector<TokenSeq> c = {{"the", "cat", "sat", "on", "the", "mat"}, {"hi"}};
  EXPECT_EQ(bleu(c, c), 1.0);
}

TEST(Bleu, DisjointCorporaScoreNearZero) {
  const std::vector<TokenSeq> a = {{"a", "b", "c", "d"}}, b = {{"w", "x", "y", "z"}};
  EXPECT_LT(bleu(a, b), 1e-8);
  EXPECT_GE(bleu(a, b), 0.0);
}

TEST(Bleu, ClipsRepeatedUnigrams) {
  const std::vector<TokenSeq> cand = {{"the", "the", "the"}}, ref = {{"the", "cat", "sat"}};
  const auto d = bleu_details(cand, ref);
  EXPECT_NEAR(d.precisions[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.precisions[1], kBleuEpsilon / 2.0, 1e-24);
  EXPECT_NEAR(d.precisions[2], kBleuEpsilon / 1.0, 1e-24);
  EXPECT_TRUE(std::isnan(d.precisions[3]));
  EXPECT_EQ(d.brevity_penalty, 1.0);
}

TEST(Bleu, BrevityPenaltyForShortCandidates) {
  const std::vector<TokenSeq> cand = {{"a", "b"}}, ref = {{"a", "b", "c", "d"}};
  const auto d = bleu_details(cand, ref);
  EXPECT_NEAR(d.brevity_penalty, std::exp(1.0 - 2.0), 1e-15);
}

TEST(Bleu, MatchesOracleOnRandomCorpora) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TokenSeq> cand, ref;
    const auto n = testing::uniform_int(rng, 1, 6);
    for (std::size_t i = 0; i < n; ++i) {
      TokenSeq a, b;
      for (std::size_t j = 0, len = testing::uniform_int(rng, 1, 9); j < len; ++j) a.push_back(std::string(1, static_cast<char>('a' + testing::uniform_int(rng, 0, 4))));
      for (std::size_t j = 0, len = testing::uniform_int(rng, 1, 9); j < len; ++j) b.push_back(std::string(1, static_cast<char>('a' + testing::uniform_int(rng, 0, 4))));
      cand.push_back(a);
      ref.push_back(b);
    }
    EXPECT_NEAR(bleu(cand, ref), testing::oracle::bleu(cand, ref), 1e-12);
  }
}

TEST(Bleu, RejectsMismatchedInputs) {
  const std::vector<TokenSeq> one = {{"a"}}, two = {{"a"}, {"b"}};
  EXPECT_THROW(bleu(one, two), ConfigError);
  EXPECT_THROW(bleu(std::span<const TokenSeq>(), std::span<const TokenSeq>()), ConfigError);
}

TEST(ValenceScore, GoldenPairHasOppositeSigns) {
  const auto happy = valence_score(tokenize("she was very happy!"), sentiment());
  const auto sad = valence_score(tokenize("she was very sad!"), sentiment());
  EXPECT_GT(happy.compound, 0.05);
  EXPECT_EQ(happy.label, SentimentLabel::positive);
  EXPECT_LT(sad.compound, -0.05);
  EXPECT_EQ(sad.label, SentimentLabel::negative);
}

TEST(ValenceScore, NeutralTextScoresZero) {
  const auto v = valence_score(tokenize("the table"), sentiment());
  EXPECT_EQ(v.compound, 0.0);
  EXPECT_EQ(v.label, SentimentLabel::neutral);
}

TEST(ValenceScore, HandComputedCompound) {
  // happy = +1, boosted by "very" to 1.5, one trailing "!" multiplies by 1.1.
  const double s = 1.5 * 1.1;
  EXPECT_NEAR(compound("she was very happy!"), s / std::sqrt(s * s + 15.0), 1e-15);
  EXPECT_NEAR(compound("happy"), 1.0 / std::sqrt(16.0), 1e-15);
}

TEST(ValenceScore, NegationFlipsTheNextThreeTokens) {
  EXPECT_LT(compound("i am not happy"), 0.0);
  EXPECT_LT(compound("not very happy"), 0.0);
  EXPECT_GT(compound("not one two three happy"), 0.0);
  EXPECT_GT(compound("i wasn't sad"), 0.0);
  EXPECT_NEAR(compound("not happy"), -compound("happy"), 1e-15);
}

TEST(ValenceScore, ExclamationsCapAtThree) {
  EXPECT_GT(compound("happy !"), compound("happy"));
  EXPECT_EQ(compound("happy ! ! !"), compound("happy ! ! ! ! !"));
}

TEST(ValenceScore, CompoundStaysInsideUnitInterval) {
  std::mt19937_64 rng(1);
  const std::vector<std::string> words = {"happy", "sad", "love", "not", "very", "!", "the", "never"};
  for (int i = 0; i < 1000; ++i) {
    TokenSeq t;
    for (std::size_t j = 0, n = testing::uniform_int(rng, 0, 30); j < n; ++j) t.push_back(words[testing::uniform_int(rng, 0, 7)]);
    const double c = valence_score(t, sentiment()).compound;
    EXPECT_GT(c, -1.0);
    EXPECT_LT(c, 1.0);
  }
}

TEST(ValenceScore, InflectedFormsUseTheirLemma) { EXPECT_EQ(compound("loved"), compound("love")); }

TEST(MeanValence, SimpleCases) {
  const std::vector<TokenSeq> neutral = {{"the"}, {"table"}};
  EXPECT_EQ(mean_valence(neutral, sentiment()), 0.0);
  const std::vector<TokenSeq> mirror = {{"happy"}, {"not", "happy"}};
  EXPECT_NEAR(mean_valence(mirror, sentiment()), 0.0, 1e-15);
  const std::vector<TokenSeq> two = {tokenize("she was very happy!"), tokenize("i am sad")};
  const double expected = (compound("she was very happy!") + compound("i am sad")) / 2.0;
  EXPECT_NEAR(mean_valence(two, sentiment()), expected, 1e-15);
}

TEST(Pearson, PerfectAndInverse) {
  const std::vector<double> x = {1, 2, 3, 4}, neg = {-1, -2, -3, -4};
  EXPECT_EQ(pearson(x, x), 1.0);
  EXPECT_EQ(pearson(x, neg), -1.0);
}

TEST(Pearson, HandExample) {
  const std::vector<double> x = {1, 2, 3}, y = {1, 2, 4};
  EXPECT_NEAR(pearson(x, y), 0.9820, 1e-4);
  EXPECT_NEAR(pearson(x, y), 3.0 / std::sqrt(2.0 * (14.0 / 3.0)), 1e-15);
}

TEST(Pearson, RejectsDegenerateInput) {
  const std::vector<double> x = {1, 2}, c = {3, 3}, one = {1};
  EXPECT_THROW(pearson(x, c), ConfigError);
  EXPECT_THROW(pearson(one, one), ConfigError);
}

TEST(CohenKappa, PerfectAgreement) {
  const std::vector<int> a = {0, 1, 2, 1};
  EXPECT_EQ(cohen_kappa(a, a).kappa, 1.0);
}

TEST(CohenKappa, ChanceLevelAgreementIsZero) {
  const std::vector<int> a = {0, 0, 1, 1}, b = {0, 1, 0, 1};
  const auto k = cohen_kappa(a, b);
  EXPECT_NEAR(k.observed, 0.5, 1e-15);
  EXPECT_NEAR(k.chance, 0.5, 1e-15);
  EXPECT_NEAR(k.kappa, 0.0, 1e-12);
  EXPECT_FALSE(k.degenerate);
}

TEST(CohenKappa, ConstantDisjointRatersAreFlagged) {
  const std::vector<std::string> a = {"x", "x"}, b = {"y", "y"};
  const auto k = cohen_kappa(a, b);
  EXPECT_EQ(k.observed, 0.0);
  EXPECT_EQ(k.chance, 0.0);
  EXPECT_EQ(k.kappa, 0.0);
  EXPECT_TRUE(k.degenerate);
}

TEST(CohenKappa, MatchesDirectFormula) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = testing::uniform_int(rng, 2, 30);
    std::vector<int> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(static_cast<int>(testing::uniform_int(rng, 0, 2)));
      b.push_back(static_cast<int>(testing::uniform_int(rng, 0, 2)));
    }
    double po = 0.0, pe = 0.0;
    for (std::size_t i = 0; i < n; ++i) po += a[i] == b[i];
    po /= static_cast<double>(n);
    for (int l = 0; l < 3; ++l) {
      const double ca = static_cast<double>(std::count(a.begin(), a.end(), l));
      const double cb = static_cast<double>(std::count(b.begin(), b.end(), l));
      pe += ca * cb / static_cast<double>(n * n);
    }
    if (pe >= 1.0) continue;
    EXPECT_NEAR(cohen_kappa(a, b).kappa, (po - pe) / (1.0 - pe), 1e-12);
  }
}

TEST(NgramDiff, Examples) {
  const TokenSeq xy = {"x", "y"}, xz = {"x", "z"}, one = {"a"}, abc = {"a", "b", "c"};
  EXPECT_EQ(ngram_diff(xy, xy, 1), 0u);
  EXPECT_EQ(ngram_diff(xy, xz, 1), 2u);
  EXPECT_EQ(ngram_diff(one, abc, 2), 2u);
  EXPECT_THROW(ngram_diff(xy, xz, 0), ConfigError);
}

TEST(NgramDiff, SymmetricAndCountsMultiplicity) {
  const TokenSeq a = {"a", "a", "b"}, b = {"a", "b", "b"};
  EXPECT_EQ(ngram_diff(a, b, 1), 2u);
  EXPECT_EQ(ngram_diff(a, b, 1), ngram_diff(b, a, 1));
}

}  // namespace
}  // namespace affecton
