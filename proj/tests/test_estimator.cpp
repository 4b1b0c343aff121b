#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "calsurp/estimator.hpp"
#include "calsurp/ngram.hpp"
#include "calsurp/replay.hpp"

using namespace calsurp;

namespace {

ScoredText scored(std::vector<double> lps, Condition c = Condition::bare) {
  ScoredText st;
  std::size_t off = 0;
  for (double lp : lps) {
    st.tokens.push_back({"t", lp, off});
    off += 2;
  }
  st.condition = c;
  st.target_span = {0, st.tokens.size()};
  return st;
}

MIResult mi_of(double h, double hc) {
  return mutual_information(EntropyResult::from_bits_per_token(h, 100, Condition::bare),
                            EntropyResult::from_bits_per_token(hc, 100, Condition::contextualized));
}

PairResult pair(const std::string& id, const std::string& lang, double i, double i2) {
  MIResult a, b;
  a.mi = i;
  b.mi = i2;
  return assemble_pair(id, lang, "x", a, b);
}

std::shared_ptr<const NGramModel> model(const std::string& text, std::size_t order, Smoothing s = Smoothing::none()) {
  return std::make_shared<const NGramModel>(train_ngram(text, order, s));
}

}  // namespace

TEST(Entropy, Certainty) { EXPECT_EQ(entropy_bits(scored({0.0, 0.0, 0.0})).bits_per_token, 0.0); }

TEST(Entropy, HalfProbability) {
  auto r = entropy_bits(scored({-0.6931471805599453, -0.6931471805599453, -0.6931471805599453, -0.6931471805599453}));
  EXPECT_NEAR(r.bits_per_token, 1.0, 1e-15);
  EXPECT_EQ(r.token_count, 4u);
  EXPECT_NEAR(r.total_bits, 4.0, 1e-14);
}

TEST(Entropy, HandConvertedExample) {
  // Independent oracle: sum of nats over 3 * ln 2.
  const double nats = 0.105360516 + 2.302585093 + 0.693147181;
  auto r = entropy_bits(scored({-0.105360516, -2.302585093, -0.693147181}));
  EXPECT_NEAR(r.bits_per_token, nats / (3.0 * 0.6931471805599453), 1e-12);
  EXPECT_NEAR(r.bits_per_token, 1.4913, 5e-5);
}

TEST(Entropy, OnlyTargetSpanCounts) {
  auto st = scored({-5.0, -1.0, -1.0}, Condition::contextualized);
  st.target_span = {1, 3};
  auto r = entropy_bits(st);
  EXPECT_EQ(r.token_count, 2u);
  EXPECT_NEAR(r.bits_per_token, 1.0 / std::numbers::ln2, 1e-15);
  EXPECT_EQ(r.condition, Condition::contextualized);
}

TEST(Entropy, Errors) {
  auto st = scored({-1.0});
  st.target_span = {1, 1};
  EXPECT_THROW(entropy_bits(st), EstimatorError);
  EXPECT_THROW(entropy_bits(scored({-INFINITY})), EstimatorError);
  EXPECT_THROW(entropy_bits(scored({std::nan("")})), EstimatorError);
}

TEST(Entropy, UnitConversionInvariant) {
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> d(-12.0, 0.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> lps(1 + rep * 7);
    for (auto& v : lps) v = d(g);
    auto r = entropy_bits(scored(lps));
    double mean_nats = 0.0;
    for (double v : lps) mean_nats -= v;
    mean_nats /= static_cast<double>(lps.size());
    EXPECT_NEAR(r.bits_per_token * std::numbers::ln2, mean_nats, 1e-12);
    EXPECT_NEAR(r.total_bits, r.bits_per_token * static_cast<double>(r.token_count), 1e-9);
  }
}

TEST(MutualInformation, PublishedRowOne) {
  auto m = mi_of(4.529, 3.805);
  EXPECT_NEAR(m.mi, 0.724, 1e-12);
  EXPECT_FALSE(m.noise_flag);
}

TEST(MutualInformation, EqualEntropiesGiveZero) {
  auto m = mi_of(3.25, 3.25);
  EXPECT_EQ(m.mi, 0.0);
  EXPECT_TRUE(m.noise_flag);
}

TEST(MutualInformation, NegativeIsReportedAndFlagged) {
  auto m = mi_of(4.163, 4.181);
  EXPECT_NEAR(m.mi, -0.018, 1e-12);
  EXPECT_LT(m.mi, 0.0);
  EXPECT_TRUE(m.noise_flag);
  auto strict = mutual_information(EntropyResult::from_bits_per_token(4.163, 1, Condition::bare),
                                   EntropyResult::from_bits_per_token(4.181, 1, Condition::contextualized), 0.01);
  EXPECT_FALSE(strict.noise_flag);
}

TEST(MutualInformation, ConditionMismatch) {
  auto b = EntropyResult::from_bits_per_token(1.0, 1, Condition::bare);
  auto c = EntropyResult::from_bits_per_token(1.0, 1, Condition::contextualized);
  EXPECT_THROW(mutual_information(c, b), EstimatorError);
  EXPECT_THROW(mutual_information(b, b), EstimatorError);
}

TEST(MutualInformation, MemorylessScorerGivesExactZero) {
  auto m = model("a b c a a b c c c b", 1);
  LocalProvider p(m);
  for (auto [ctx, text] : std::vector<std::pair<std::string, std::string>>{{"a b", "c c a"}, {"c", "b"}, {"a a a", "b c a b"}}) {
    auto r = mutual_information(entropy_bits(p.score_bare(text)), entropy_bits(p.score_with_context(ctx, text)));
    EXPECT_EQ(r.mi, 0.0);
  }
}

TEST(Pair, PublishedDeltas) {
  auto r1 = assemble_pair("1", "en", "x", mi_of(4.529, 3.805), mi_of(3.506, 3.212));
  EXPECT_NEAR(r1.delta_i, 0.430, 1e-12);
  EXPECT_TRUE(r1.supports_prediction);
  auto r10 = pair("10", "en", 0.148, 0.065);
  EXPECT_NEAR(r10.delta_i, 0.083, 1e-12);
  EXPECT_EQ(r10.delta_i, r10.original.mi - r10.degraded.mi);
}

TEST(Pair, IdenticalTextsGiveZeroDelta) {
  LocalProvider p(model("a b c a c b a a b c c", 2, Smoothing::add_k(0.2)));
  PairedItem item{"same", "a b c", {"s1", "en", "x", Role::original, "c a b"}, {"s2", "en", "x", Role::degraded, "c a b"}, {}, ""};
  auto r = analyze_pair(p, item);
  EXPECT_EQ(r.delta_i, 0.0);
  EXPECT_FALSE(r.supports_prediction);
}

TEST(Pair, DeterministicAndIndependentOfConcurrency) {
  auto m = model("a b c a c b a a b c c", 2, Smoothing::add_k(0.2));
  LocalProvider p(m);
  ReplayProvider serial("r");  // parallelism_cap 1, sequential path
  PairedItem item{"d", "a b", {"d1", "en", "x", Role::original, "c a b"}, {"d2", "en", "x", Role::degraded, "b b c"}, {}, ""};
  for (auto* text : {&item.original.text, &item.degraded.text}) {
    auto b = p.score_bare(*text);
    auto c = p.score_with_context(item.context, *text);
    serial.add(Condition::bare, "", *text, b.tokens);
    serial.add(Condition::contextualized, item.context,
               *text, std::vector<TokenScore>(c.target_tokens().begin(), c.target_tokens().end()));
  }
  auto a1 = analyze_pair(p, item);
  auto a2 = analyze_pair(p, item);
  auto a3 = analyze_pair(serial, item);
  EXPECT_EQ(a1.delta_i, a2.delta_i);
  EXPECT_EQ(a1.delta_i, a3.delta_i);
  EXPECT_EQ(a1.original.h_cond, a3.original.h_cond);
}

TEST(Pair, ErrorsNameThePairAndRole) {
  LocalProvider p(model("a b a b", 2));
  PairedItem item{"bad", "a b", {"b1", "en", "x", Role::original, "a b"}, {"b2", "en", "x", Role::degraded, "a zzz"}, {}, ""};
  try {
    analyze_pair(p, item);
    FAIL();
  } catch (const PairError& e) {
    EXPECT_EQ(e.pair_id(), "bad");
    EXPECT_NE(std::string(e.what()).find("degraded"), std::string::npos) << e.what();
    ASSERT_TRUE(e.provider_kind());
    EXPECT_EQ(*e.provider_kind(), ProviderError::Kind::out_of_vocabulary);
  }
}

TEST(Summary, SinglePairEchoed) {
  std::vector<PairResult> rs = {pair("a", "en", 0.7, 0.2)};
  auto s = summarize(rs);
  EXPECT_EQ(s.pair_count, 1u);
  EXPECT_EQ(s.mean_i_high, 0.7);
  EXPECT_EQ(s.mean_i_degraded, 0.2);
  EXPECT_EQ(s.mean_delta, rs[0].delta_i);
  EXPECT_EQ(s.validation_ratio, "1/1 (100%)");
}

TEST(Summary, OppositeDeltas) {
  std::vector<PairResult> rs = {pair("a", "en", 0.3, 0.2), pair("b", "zh", 0.2, 0.3)};
  auto s = summarize(rs);
  EXPECT_EQ(s.supported_count, 1u);
  EXPECT_EQ(s.validation_rate, 0.5);
  EXPECT_EQ(s.validation_ratio, "1/2 (50%)");
  EXPECT_NEAR(s.mean_delta, 0.0, 1e-15);
  EXPECT_EQ(s.per_language.at("en").supported, 1u);
  EXPECT_EQ(s.per_language.at("zh").supported, 0u);
}

TEST(Summary, EmptyListIsAnError) { EXPECT_THROW(summarize(std::vector<PairResult>{}), EstimatorError); }

TEST(Summary, PermutationInvariant) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> d(-0.5, 1.5);
  std::vector<PairResult> rs;
  for (int i = 0; i < 40; ++i) rs.push_back(pair("p" + std::to_string(i), i % 3 ? "en" : "zh", d(g), d(g)));
  auto base = summarize(rs);
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(rs.begin(), rs.end(), g);
    auto s = summarize(rs);
    EXPECT_EQ(s.mean_i_high, base.mean_i_high);
    EXPECT_EQ(s.mean_i_degraded, base.mean_i_degraded);
    EXPECT_EQ(s.mean_delta, base.mean_delta);
    EXPECT_EQ(s.supported_count, base.supported_count);
  }
}

TEST(KL, IdenticalModelsGiveZero) {
  auto m = model("a b c a c b a a b c c", 2, Smoothing::add_k(0.2));
  for (std::size_t k : {1u, 2u, 3u}) EXPECT_EQ(kl_gap(*m, *m, "a b c c a", k).kl_bits_per_token, 0.0);
}

TEST(KL, TwoPointClosedForm) {
  auto p = model("a b", 1);
  auto q = model("a a a a a a a a a b", 1);
  const double closed = 0.5 * std::log2(0.5 / 0.9) + 0.5 * std::log2(0.5 / 0.1);
  for (const char* text : {"a", "b a b", "a a a a b"}) {
    auto r = kl_gap(*p, *q, text, 2);
    EXPECT_NEAR(r.kl_bits_per_token, closed, 1e-9);
    EXPECT_NEAR(r.kl_bits_per_token, 0.7370, 5e-5);
    EXPECT_NEAR(r.covered_mass_a, 1.0, 1e-15);
  }
  // With k = 1 the union of supports still covers both tokens.
  EXPECT_NEAR(kl_gap(*p, *q, "a b", 1).kl_bits_per_token, closed, 1e-9);
}

TEST(KL, TruncationUsesCatchAllBucket) {
  auto p = model("a a a a b b b c c d", 1);
  auto q = model("a b c d a b c d d d", 1);
  auto full = kl_gap(*p, *q, "a", 4).kl_bits_per_token;
  auto trunc = kl_gap(*p, *q, "a", 1);
  // Oracle: keep {a} (top of P) and {d} (top of Q), pool {b, c}.
  const double pa = 0.4, pb = 0.3, pc = 0.2, pd = 0.1, qa = 0.2, qb = 0.2, qc = 0.2, qd = 0.4;
  const double exact = pa * std::log2(pa / qa) + pb * std::log2(pb / qb) + pc * std::log2(pc / qc) + pd * std::log2(pd / qd);
  const double pooled = pa * std::log2(pa / qa) + pd * std::log2(pd / qd) + (pb + pc) * std::log2((pb + pc) / (qb + qc));
  EXPECT_NEAR(full, exact, 1e-9);
  EXPECT_NEAR(trunc.kl_bits_per_token, pooled, 1e-9);
  EXPECT_NEAR(trunc.covered_mass_a, 0.5, 1e-12);
  EXPECT_LE(trunc.kl_bits_per_token, full + 1e-12);
}

TEST(KL, ZeroMassInBIsReported) {
  auto p = model("a b", 1);
  auto q = model("a a", 1);
  EXPECT_THROW(kl_gap(*p, *q, "a", 2), Error);
}
