#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <thread>

#include "calsurp/cache.hpp"
#include "calsurp/config.hpp"
#include "calsurp/log.hpp"
#include "calsurp/ngram.hpp"
#include "calsurp/remote.hpp"
#include "calsurp/replay.hpp"
#include "mock_backend.hpp"
#include "test_support.hpp"

using namespace calsurp;
using testing_support::fixture;
using testing_support::MockBackend;
using testing_support::TempDir;

namespace {

std::shared_ptr<const NGramModel> model(const std::string& text, std::size_t order, Smoothing s = Smoothing::none()) {
  return std::make_shared<const NGramModel>(train_ngram(text, order, s));
}

ProviderConfig remote_cfg(const MockBackend& mock) {
  ProviderConfig c;
  c.endpoint = mock.endpoint();
  c.model_id = "mock-7b";
  c.api_key_env = "CALSURP_TEST_KEY_UNSET";
  c.max_retries = 2;
  c.backoff_initial_s = 0.01;
  c.timeout_s = 5;
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// n-gram training and local scoring

TEST(NGram, AlternatingBigramIsCertain) {
  auto m = model("a b a b a b", 2);
  std::vector<std::string> a = {"a"}, b = {"b"};
  EXPECT_EQ(m->probability(a, "b"), 1.0);
  EXPECT_EQ(m->probability(b, "a"), 1.0);
  LocalProvider p(m);
  auto st = p.score_bare("a b");
  ASSERT_EQ(st.tokens.size(), 2u);
  EXPECT_EQ(st.tokens[0].logprob_nat, 0.0);
  EXPECT_EQ(st.tokens[1].logprob_nat, 0.0);
  EXPECT_EQ(st.target_span, (TokenSpan{0, 2}));
  EXPECT_EQ(st.condition, Condition::bare);
}

TEST(NGram, UniformUnigram) {
  LocalProvider p(model("a b", 1));
  auto st = p.score_bare("a a a a");
  ASSERT_EQ(st.tokens.size(), 4u);
  for (const auto& t : st.tokens) EXPECT_DOUBLE_EQ(t.logprob_nat, std::log(0.5));
}

TEST(NGram, UnigramFrequenciesSumToOne) {
  auto m = model("the cat and the dog and the bird sat", 1);
  std::map<std::string, int> counts;
  for (const auto& w : whitespace_words("the cat and the dog and the bird sat")) ++counts[w];
  double sum = 0.0;
  for (const auto& [w, c] : counts) {
    EXPECT_DOUBLE_EQ(m->probability({}, w), c / 9.0);
    sum += m->probability({}, w);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(NGram, EmptyOrShortTrainingTextFails) {
  EXPECT_THROW(train_ngram("", 1, Smoothing::none()), TrainingError);
  EXPECT_THROW(train_ngram("   \n ", 2, Smoothing::none()), TrainingError);
  EXPECT_THROW(train_ngram("a", 2, Smoothing::none()), TrainingError);
  EXPECT_THROW(train_ngram("a b", 0, Smoothing::none()), ConfigError);
}

TEST(NGram, UnseenTokensError) {
  LocalProvider p(model("a b a b", 2));
  try {
    p.score_bare("a c");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::out_of_vocabulary);
  }
  try {
    p.score_bare("a a");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::zero_probability);
  }
  LocalProvider smoothed(model("a b a b", 2, Smoothing::add_k(0.5)));
  EXPECT_LT(smoothed.score_bare("a a").tokens[1].logprob_nat, 0.0);
  EXPECT_THROW(smoothed.score_bare("a zzz"), ProviderError);
}

TEST(NGram, SmoothedDistributionsNormalize) {
  auto m = model("x y z x z z y x y y z", 3, Smoothing::add_k(0.3));
  std::vector<std::vector<std::string>> histories = {{}, {"x"}, {"x", "y"}, {"z", "z"}, {"y", "q"}};
  for (const auto& h : histories) {
    double sum = 0.0;
    for (const auto& tok : m->vocabulary()) sum += std::exp(m->logprob(h, tok));
    EXPECT_NEAR(sum, 1.0, 1e-12);
    double dist = 0.0;
    for (const auto& [tok, pr] : m->next_token_distribution(h)) dist += pr;
    EXPECT_NEAR(dist, 1.0, 1e-12);
  }
}

TEST(NGram, ModelIdTracksSettings) {
  auto a = model("a b a b", 2);
  auto b = model("a b a b", 2, Smoothing::add_k(0.1));
  auto c = model("a b a b", 1);
  EXPECT_NE(a->model_id(), b->model_id());
  EXPECT_NE(a->model_id(), c->model_id());
  EXPECT_EQ(a->model_id(), model("a b a b", 2)->model_id());
  EXPECT_EQ(a->model_id().rfind("ngram-o2-", 0), 0u);
}

TEST(LocalProvider, ContextualizedBigramByCounting) {
  LocalProvider p(model("x y z", 2));
  auto st = p.score_with_context("x", "y z");
  ASSERT_EQ(st.tokens.size(), 3u);
  EXPECT_EQ(st.target_span, (TokenSpan{1, 3}));
  EXPECT_EQ(st.condition, Condition::contextualized);
  // Counted by hand: (x,y) once out of one x; (y,z) once out of one y.
  EXPECT_EQ(st.target_tokens()[0].token_text, "y");
  EXPECT_EQ(st.target_tokens()[0].logprob_nat, std::log(1.0));
  EXPECT_EQ(st.target_tokens()[1].logprob_nat, std::log(1.0));
  EXPECT_EQ(st.target_char_offset, 3u);  // "x" + "\n\n"
}

TEST(LocalProvider, EmptyContextIdentity) {
  auto m = model("a b c a c b a a b c c", 2, Smoothing::add_k(0.2));
  LocalProvider p(m, {"", std::nullopt, OverflowPolicy::error});
  for (std::string text : {"a", "b a c", "c c c a b"}) {
    auto bare = p.score_bare(text);
    auto cond = p.score_with_context("", text);
    ASSERT_EQ(cond.target_tokens().size(), bare.tokens.size());
    for (std::size_t i = 0; i < bare.tokens.size(); ++i) EXPECT_EQ(cond.target_tokens()[i], bare.tokens[i]);
    EXPECT_EQ(serialize(ScoredText{bare.tokens, bare.model_id, bare.condition, bare.target_span}),
              serialize(ScoredText{std::vector<TokenScore>(cond.target_tokens().begin(), cond.target_tokens().end()),
                                   cond.model_id, Condition::bare, {0, cond.target_span.size()}}));
  }
}

TEST(LocalProvider, StraddlingTokenFollowsItsOffset) {
  // With an empty separator and a context not ending in whitespace, the last
  // context word and the first target word merge into one token that starts
  // inside the context, so it is not part of the target.
  LocalProvider p(model("ab c ab a b c", 1), {"", std::nullopt, OverflowPolicy::error});
  auto st = p.score_with_context("a", "b c");
  ASSERT_EQ(st.tokens.size(), 2u);
  EXPECT_EQ(st.tokens[0].token_text, "ab");
  EXPECT_EQ(st.tokens[0].char_offset, 0u);
  EXPECT_EQ(st.target_span, (TokenSpan{1, 2}));
  EXPECT_EQ(st.target_tokens()[0].token_text, "c");
  // A token starting exactly at the target start belongs to the target.
  auto st2 = p.score_with_context("a ", "b c");
  EXPECT_EQ(st2.target_span, (TokenSpan{1, 3}));
}

TEST(LocalProvider, ContextWindowPolicy) {
  auto m = model("a b c d e f g", 1);
  LocalProvider strict(m, {"\n\n", 4, OverflowPolicy::error});
  try {
    strict.score_with_context("a b c", "d e");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::context_overflow);
  }
  std::vector<std::string> warnings;
  auto prev = log::set_sink([&](const std::string& w) { warnings.push_back(w); });
  LocalProvider lenient(m, {"\n\n", 4, OverflowPolicy::truncate_left});
  auto st = lenient.score_with_context("a b c", "d e");
  log::set_sink(prev);
  EXPECT_EQ(st.tokens.size(), 4u);
  EXPECT_EQ(st.tokens[0].token_text, "b");
  EXPECT_EQ(st.target_tokens().size(), 2u);
  EXPECT_EQ(st.target_tokens()[0].token_text, "d");
  EXPECT_EQ(warnings.size(), 1u);
  // The target alone exceeding the window is always an error.
  EXPECT_THROW(lenient.score_with_context("a", "b c d e f"), ProviderError);
}

TEST(LocalProvider, RejectsEmptyTarget) {
  LocalProvider p(model("a b", 1));
  EXPECT_THROW(p.score_bare(""), ProviderError);
  EXPECT_THROW(p.score_with_context("a", ""), ProviderError);
}

TEST(LocalProvider, Deterministic) {
  auto m = model("a b c a c b a a b c c", 2, Smoothing::add_k(0.2));
  LocalProvider p1(m), p2(std::make_shared<const NGramModel>(train_ngram("a b c a c b a a b c c", 2, Smoothing::add_k(0.2))));
  EXPECT_EQ(serialize(p1.score_with_context("a b", "c c a")), serialize(p2.score_with_context("a b", "c c a")));
}

TEST(ScoredText, JsonRoundTrip) {
  LocalProvider p(model("a b c a c b a a b c c", 2, Smoothing::add_k(0.2)));
  auto st = p.score_with_context("a b", "c c a");
  st.unscored_prefix_tokens = 1;
  auto back = deserialize_scored_text(serialize(st));
  EXPECT_EQ(back, st);
  EXPECT_EQ(serialize(back), serialize(st));
}

// ---------------------------------------------------------------------------
// replay

TEST(Replay, RecordedEntropiesAndMissingRecords) {
  ReplayProvider p("rec");
  p.add_entropy(Condition::bare, "", "x", 4.529);
  p.add_entropy(Condition::contextualized, "y", "x", 3.805);
  p.add(Condition::bare, "", "z", {{"z", -0.25, 0}});
  EXPECT_NEAR(-p.score_bare("x").tokens[0].logprob_nat / std::numbers::ln2, 4.529, 1e-12);
  EXPECT_NEAR(-p.score_with_context("y", "x").target_tokens()[0].logprob_nat / std::numbers::ln2, 3.805, 1e-12);
  EXPECT_EQ(p.score_bare("z").tokens[0].logprob_nat, -0.25);
  try {
    p.score_with_context("other", "x");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::missing_record);
  }
}

TEST(Replay, LoadsFixtureFile) {
  auto loaded = load_provider(fixture("table1_replay.json"));
  auto st = loaded.provider->score_with_context("context of pair 9", "degraded passage 9");
  EXPECT_NEAR(-st.target_tokens()[0].logprob_nat / std::numbers::ln2, 4.181, 1e-12);
}

// ---------------------------------------------------------------------------
// remote provider against the in-process mock

TEST(Remote, RequestShapeAndBearerKey) {
  MockBackend mock({.required_key = "sk-test"});
  auto cfg = remote_cfg(mock);
  cfg.api_key_env = "CALSURP_TEST_KEY";
  ::setenv("CALSURP_TEST_KEY", "sk-test", 1);
  RemoteProvider p(cfg);
  auto st = p.score_bare("the lamp burned");
  ::unsetenv("CALSURP_TEST_KEY");
  auto body = mock.last_body();
  EXPECT_EQ(body.at("model"), "mock-7b");
  EXPECT_EQ(body.at("prompt"), "the lamp burned");
  EXPECT_EQ(body.at("max_tokens"), 0);
  EXPECT_EQ(body.at("echo"), true);
  EXPECT_EQ(body.at("logprobs"), 1);
  EXPECT_EQ(body.at("temperature"), 0);
  EXPECT_EQ(body.at("top_p"), 1.0);
  EXPECT_EQ(mock.last_auth(), "Bearer sk-test");
  // First token comes back without a logprob and is recorded, not scored.
  EXPECT_EQ(st.unscored_prefix_tokens, 1u);
  ASSERT_EQ(st.tokens.size(), 2u);
  EXPECT_EQ(st.tokens[0].token_text, " lamp");
  EXPECT_EQ(st.tokens[0].char_offset, 3u);
  EXPECT_EQ(st.tokens[0].logprob_nat, -0.5);
  EXPECT_EQ(st.target_span, (TokenSpan{0, 2}));
}

TEST(Remote, ContextualizedTargetByOffsetWithCodepoints) {
  MockBackend mock;
  RemoteProvider p(remote_cfg(mock));
  // Multi-byte context: codepoint offsets from the server must map to bytes.
  auto st = p.score_with_context("蒸汽 café", "la nuit tombe");
  const std::string prompt = std::string("蒸汽 café") + "\n\n" + "la nuit tombe";
  EXPECT_EQ(mock.last_body().at("prompt"), prompt);
  ASSERT_EQ(st.target_tokens().size(), 3u);
  EXPECT_EQ(st.target_tokens()[0].token_text, "la");
  EXPECT_EQ(st.target_tokens()[0].char_offset, prompt.find("la nuit"));
  EXPECT_EQ(st.target_tokens()[2].token_text, " tombe");
  EXPECT_EQ(st.target_char_offset, prompt.find("la nuit"));
}

TEST(Remote, ByteOffsetsAndMissingOffsets) {
  MockBackend mock({.codepoint_offsets = false});
  auto cfg = remote_cfg(mock);
  cfg.offset_unit = OffsetUnit::byte;
  RemoteProvider p(cfg);
  auto st = p.score_with_context("é", "x y");
  EXPECT_EQ(st.target_tokens()[0].char_offset, std::string("é\n\n").size());

  RemoteProvider q(remote_cfg(mock));
  nlohmann::json resp = {{"choices", {{{"logprobs", {{"tokens", {"a", " b"}}, {"token_logprobs", {nullptr, -1.0}}}}}}}};
  auto st2 = q.parse_response(resp, "a b", 0, Condition::bare);
  ASSERT_EQ(st2.tokens.size(), 1u);
  EXPECT_EQ(st2.tokens[0].char_offset, 1u);
}

TEST(Remote, RetriesTransientFailures) {
  MockBackend mock({.fail_first_n = 2});
  RemoteProvider p(remote_cfg(mock));
  auto st = p.score_bare("a b c");
  EXPECT_EQ(st.tokens.size(), 2u);
  EXPECT_EQ(p.request_count(), 3u);
  EXPECT_EQ(mock.hits(), 3u);
}

TEST(Remote, GivesUpAfterMaxRetries) {
  MockBackend mock({.fail_first_n = 100});
  RemoteProvider p(remote_cfg(mock));
  try {
    p.score_bare("a b");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::transport);
  }
  EXPECT_EQ(mock.hits(), 3u);  // 1 + max_retries
}

TEST(Remote, UnreachableEndpointIsTransportError) {
  ProviderConfig c;
  c.endpoint = "http://127.0.0.1:9/v1";
  c.model_id = "none";
  c.max_retries = 1;
  c.backoff_initial_s = 0.01;
  c.timeout_s = 1;
  RemoteProvider p(c);
  try {
    p.score_bare("a");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::transport);
  }
}

TEST(Remote, BackendWithoutEchoGetsRemediationHint) {
  MockBackend reject({.reject_echo = true});
  RemoteProvider p(remote_cfg(reject));
  try {
    p.score_bare("a b");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::unsupported_backend);
    EXPECT_NE(std::string(e.what()).find("echo_plus_one"), std::string::npos);
  }
  MockBackend silent({.omit_logprobs = true});
  RemoteProvider q(remote_cfg(silent));
  try {
    q.score_bare("a b");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::unsupported_backend);
  }
}

TEST(Remote, EchoPlusOneDropsGeneratedToken) {
  MockBackend mock;
  auto cfg = remote_cfg(mock);
  cfg.echo_mode = EchoMode::echo_plus_one;
  RemoteProvider p(cfg);
  auto st = p.score_bare("a b c");
  EXPECT_EQ(mock.last_body().at("max_tokens"), 1);
  ASSERT_EQ(st.tokens.size(), 2u);
  EXPECT_EQ(st.tokens.back().token_text, " c");
}

TEST(Remote, NonFiniteAndPositiveLogprobs) {
  MockBackend mock;
  RemoteProvider p(remote_cfg(mock));
  nlohmann::json bad = {{"choices", {{{"logprobs", {{"tokens", {"a", " b"}}, {"token_logprobs", {-0.1, "NaN"}}, {"text_offset", {0, 1}}}}}}}};
  try {
    p.parse_response(bad, "a b", 0, Condition::bare);
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::non_finite_logprob);
  }
  nlohmann::json tiny = {{"choices", {{{"logprobs", {{"tokens", {"a"}}, {"token_logprobs", {1e-9}}, {"text_offset", {0}}}}}}}};
  EXPECT_EQ(p.parse_response(tiny, "a", 0, Condition::bare).tokens[0].logprob_nat, 0.0);
  nlohmann::json pos = {{"choices", {{{"logprobs", {{"tokens", {"a"}}, {"token_logprobs", {0.5}}, {"text_offset", {0}}}}}}}};
  EXPECT_THROW(p.parse_response(pos, "a", 0, Condition::bare), ProviderError);
}

TEST(Remote, ContextOverflow) {
  MockBackend mock;
  auto cfg = remote_cfg(mock);
  cfg.context_window_tokens = 6;
  RemoteProvider strict(cfg);
  try {
    strict.score_with_context("one two three four five six", "seven eight");
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.kind(), ProviderError::Kind::context_overflow);
  }
  cfg.overflow = OverflowPolicy::truncate_left;
  RemoteProvider lenient(cfg);
  auto prev = log::set_sink([](const std::string&) {});
  auto st = lenient.score_with_context("one two three four five six", "seven eight");
  log::set_sink(prev);
  EXPECT_LE(st.tokens.size() + st.unscored_prefix_tokens, 6u);
  EXPECT_EQ(st.target_tokens().size(), 2u);
  EXPECT_EQ(st.target_tokens()[0].token_text, "seven");
}

TEST(Remote, ConfigValidation) {
  ProviderConfig c;
  c.endpoint = "http://localhost:1/v1";
  c.model_id = "m";
  c.parallelism_cap = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.parallelism_cap = 1;
  c.timeout_s = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.timeout_s = 1;
  c.endpoint = "localhost:1";
  EXPECT_THROW(RemoteProvider{c}, ConfigError);
}

TEST(Remote, ConcurrentRequestsRespectCap) {
  MockBackend mock;
  auto cfg = remote_cfg(mock);
  cfg.parallelism_cap = 2;
  RemoteProvider p(cfg);
  std::vector<std::thread> ts;
  std::atomic<int> ok{0};
  for (int i = 0; i < 8; ++i)
    ts.emplace_back([&, i] {
      if (p.score_bare("word " + std::to_string(i)).tokens.size() == 1) ++ok;
    });
  for (auto& t : ts) t.join();
  EXPECT_EQ(ok.load(), 8);
  EXPECT_EQ(mock.hits(), 8u);
}

// ---------------------------------------------------------------------------
// cache

TEST(Cache, SecondCallMakesNoRequest) {
  MockBackend mock;
  TempDir tmp;
  auto remote = std::make_shared<RemoteProvider>(remote_cfg(mock));
  auto p = cached(remote, tmp.path());
  auto a = p->score_with_context("ctx here", "text there");
  EXPECT_EQ(remote->request_count(), 1u);
  auto b = p->score_with_context("ctx here", "text there");
  EXPECT_EQ(remote->request_count(), 1u);
  EXPECT_EQ(serialize(a), serialize(b));
  // A fresh wrapper over the same directory also hits.
  auto p2 = cached(remote, tmp.path());
  EXPECT_EQ(serialize(p2->score_with_context("ctx here", "text there")), serialize(a));
  EXPECT_EQ(remote->request_count(), 1u);
}

TEST(Cache, KeyIncludesModelAndSeparator) {
  TempDir tmp;
  auto m1 = model("a b c a b", 2, Smoothing::add_k(0.1));
  auto m2 = model("a b c a b c", 2, Smoothing::add_k(0.1));
  auto p1 = cached(std::make_shared<LocalProvider>(m1), tmp.path());
  auto p2 = cached(std::make_shared<LocalProvider>(m2), tmp.path());
  p1->score_bare("a b");
  p2->score_bare("a b");
  ResponseCache cache(tmp.path());
  EXPECT_EQ(cache.size(), 2u);

  TempDir tmp2;
  auto s1 = cached(std::make_shared<LocalProvider>(m1, LocalOptions{"\n\n"}), tmp2.path());
  auto s2 = cached(std::make_shared<LocalProvider>(m1, LocalOptions{" "}), tmp2.path());
  s1->score_with_context("a", "b c");
  s2->score_with_context("a", "b c");
  EXPECT_EQ(ResponseCache(tmp2.path()).size(), 2u);
}

TEST(Cache, TransparentByteForByte) {
  TempDir tmp;
  auto inner = std::make_shared<LocalProvider>(model("a b c a c b a a b c c", 2, Smoothing::add_k(0.2)));
  auto wrapped = cached(inner, tmp.path());
  for (auto [ctx, text] : std::vector<std::pair<std::string, std::string>>{{"a b", "c c a"}, {"", "b"}, {"c", "a b c"}}) {
    EXPECT_EQ(serialize(wrapped->score_with_context(ctx, text)), serialize(inner->score_with_context(ctx, text)));
    EXPECT_EQ(serialize(wrapped->score_with_context(ctx, text)), serialize(inner->score_with_context(ctx, text)));
    EXPECT_EQ(serialize(wrapped->score_bare(text)), serialize(inner->score_bare(text)));
  }
}

TEST(Cache, CorruptEntryIsEvictedAndRefetched) {
  TempDir tmp;
  auto inner = std::make_shared<LocalProvider>(model("a b c a b", 2, Smoothing::add_k(0.1)));
  auto wrapped = std::make_shared<CachedProvider>(inner, tmp.path());
  auto first = wrapped->score_bare("a b c");
  auto keys = wrapped->cache().keys();
  ASSERT_EQ(keys.size(), 1u);
  {
    std::string raw = read_file(wrapped->cache().path_for(keys[0]));
    raw[raw.find("\"lp\"") + 6] ^= 1;  // flip a bit inside the payload
    std::ofstream(wrapped->cache().path_for(keys[0]), std::ios::binary | std::ios::trunc) << raw;
  }
  auto again = wrapped->score_bare("a b c");
  EXPECT_EQ(serialize(again), serialize(first));
  EXPECT_EQ(wrapped->misses(), 2u);
  EXPECT_EQ(wrapped->cache().size(), 1u);

  std::ofstream(wrapped->cache().path_for(keys[0]), std::ios::binary | std::ios::trunc) << "garbage";
  auto rep = wrapped->cache().verify();
  EXPECT_EQ(rep.checked, 1u);
  ASSERT_EQ(rep.evicted.size(), 1u);
  EXPECT_EQ(rep.evicted[0], keys[0]);
  EXPECT_EQ(wrapped->cache().size(), 0u);
}

TEST(Cache, ConcurrentWritersSameKey) {
  TempDir tmp;
  auto inner = std::make_shared<LocalProvider>(model("a b c a b", 2, Smoothing::add_k(0.1)));
  auto wrapped = cached(inner, tmp.path());
  std::vector<std::thread> ts;
  std::vector<std::string> outs(8);
  for (int i = 0; i < 8; ++i) ts.emplace_back([&, i] { outs[i] = serialize(wrapped->score_bare("a b c b")); });
  for (auto& t : ts) t.join();
  for (const auto& o : outs) EXPECT_EQ(o, outs[0]);
  EXPECT_EQ(ResponseCache(tmp.path()).size(), 1u);
  EXPECT_EQ(ResponseCache(tmp.path()).verify().evicted.size(), 0u);
}

// ---------------------------------------------------------------------------
// config files

TEST(Config, SecretsAreRedacted) {
  nlohmann::json j = {{"kind", "remote"}, {"api_key", "sk-live"}, {"nested", {{"Authorization", "x"}, {"token", "y"}}},
                      {"records", {{{"tokens", {{{"t", "a"}}}}}}}};
  auto r = redact_secrets(j);
  EXPECT_EQ(r["api_key"], "<redacted>");
  EXPECT_EQ(r["nested"]["token"], "<redacted>");
  EXPECT_EQ(r["records"][0]["tokens"][0]["t"], "a");
}

TEST(Config, NgramConfigFromFixture) {
  auto loaded = load_provider(fixture("ngram_small.json"));
  ASSERT_TRUE(loaded.ngram);
  EXPECT_EQ(loaded.ngram->order(), 2u);
  EXPECT_TRUE(loaded.manifest_config.contains("training_file_sha256"));
  EXPECT_EQ(loaded.manifest_config["model_id"], loaded.provider->model_id());
}

TEST(Config, BadConfigs) {
  EXPECT_THROW(make_provider({{"kind", "bogus"}}), ConfigError);
  EXPECT_THROW(make_provider({{"kind", "remote"}}), ConfigError);
  EXPECT_THROW(make_provider({{"kind", "ngram"}, {"order", 2}}), ConfigError);
  EXPECT_THROW(make_provider({{"kind", "ngram"}, {"training_text", "a b"}, {"smoothing", "laplace"}}), ConfigError);
}
