#include <gtest/gtest.h>

#include <mutex>
#include <random>

#include "qwerty/analyzer.hpp"
#include "qwerty/completion.hpp"
#include "qwerty/error.hpp"
#include "qwerty/prompt.hpp"

namespace qwerty {
namespace {

SceneVerdict verdict(Rating r, std::optional<Category> label = std::nullopt, std::size_t scene = 0) {
  SceneVerdict v;
  v.scene_index = scene;
  v.rating = r;
  v.label = label;
  v.source = VerdictSource::kModel;
  v.confidence = Confidence::kMedium;
  return v;
}

Scene tiny_scene(std::size_t index, std::size_t tokens) {
  Scene s;
  s.index = index;
  s.body = std::string(tokens * 4, 'x');
  s.token_estimate = tokens;
  return s;
}

std::vector<std::size_t> sizes(const std::vector<SceneBatch>& batches) {
  std::vector<std::size_t> out;
  for (const auto& b : batches) out.push_back(b.size());
  return out;
}

// Scripted client: replies via a callback and records each call.
class ScriptedClient final : public CompletionClient {
 public:
  using Reply = std::function<std::vector<std::string>(std::span<const std::string>)>;
  explicit ScriptedClient(Reply reply) : reply_(std::move(reply)) {}
  std::vector<std::string> complete(std::span<const std::string> prompts) override {
    {
      std::lock_guard lock(mutex_);
      calls.emplace_back(prompts.begin(), prompts.end());
    }
    return reply_(prompts);
  }
  std::vector<std::vector<std::string>> calls;

 private:
  Reply reply_;
  std::mutex mutex_;
};

std::string slot_text(const std::string& prompt) { return prompt.substr(prompt_preamble().size()); }

AnalyzerConfig mock_config() {
  AnalyzerConfig c;
  c.kind = AnalyzerKind::kMock;
  return c;
}

TEST(AnalyzerKindNames, RoundTrip) {
  for (AnalyzerKind k : {AnalyzerKind::kRules, AnalyzerKind::kModel, AnalyzerKind::kMock}) {
    EXPECT_EQ(parse_analyzer_kind(to_string(k)), k);
  }
  EXPECT_FALSE(parse_analyzer_kind("gpt").has_value());
}

TEST(AnalyzerConfigValidation, BoundsAndBudgets) {
  AnalyzerConfig c;
  EXPECT_NO_THROW(validate(c));
  c.min_batch = 0;
  EXPECT_THROW(validate(c), Error);
  c.min_batch = 9;
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.window = {200, 200};
  EXPECT_THROW(validate(c), Error);
  c = {};
  c.batch_token_budget = 0;
  EXPECT_THROW(validate(c), Error);
}

TEST(MajorityVote, ModalRating) {
  const std::vector<SceneVerdict> v = {verdict(Rating::k12), verdict(Rating::k18), verdict(Rating::k12)};
  EXPECT_EQ(majority_vote(v).rating, Rating::k12);
}

TEST(MajorityVote, TiesGoToMoreSevere) {
  const std::vector<SceneVerdict> v = {verdict(Rating::k6), verdict(Rating::k16)};
  EXPECT_EQ(majority_vote(v).rating, Rating::k16);
  const std::vector<SceneVerdict> w = {verdict(Rating::k0), verdict(Rating::k0), verdict(Rating::k12),
                                       verdict(Rating::k12), verdict(Rating::k6)};
  EXPECT_EQ(majority_vote(w).rating, Rating::k12);
}

TEST(MajorityVote, MatchesOracleOnRandomLists) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 9;
    std::vector<SceneVerdict> v;
    std::array<int, 5> counts{};
    for (std::size_t i = 0; i < n; ++i) {
      const int r = static_cast<int>(rng() % 5);
      ++counts[r];
      v.push_back(verdict(rating_from_level(r)));
    }
    int best = 0;
    for (int r = 0; r < 5; ++r) {
      if (counts[r] >= counts[best]) best = r;
    }
    EXPECT_EQ(majority_vote(v).rating, rating_from_level(best));
  }
}

TEST(MajorityVote, MergesWhyAnchorsAndLowersConfidenceOnDisagreement) {
  auto a = verdict(Rating::k16, Category::kDrugsAlcohol);
  a.why = "bottle";
  a.anchors = {LexiconMatch{"d", Category::kDrugsAlcohol, Severity::kModerate, {10, 15}, "vodka"}};
  a.confidence = Confidence::kHigh;
  auto b = verdict(Rating::k16, Category::kDrugsAlcohol);
  b.why = "bottle";
  b.confidence = Confidence::kHigh;
  auto c = verdict(Rating::k6, Category::kViolence);
  c.why = "shove";
  c.anchors = {LexiconMatch{"v", Category::kViolence, Severity::kMild, {2, 7}, "shove"}};
  c.confidence = Confidence::kHigh;
  const std::vector<SceneVerdict> list = {a, b, c};
  const auto m = majority_vote(list);
  EXPECT_EQ(m.rating, Rating::k16);
  EXPECT_EQ(m.label, Category::kDrugsAlcohol);
  EXPECT_EQ(m.why, "bottle | shove");
  ASSERT_EQ(m.anchors.size(), 2u);
  EXPECT_EQ(m.anchors[0].rule_id, "v");
  EXPECT_EQ(m.confidence, Confidence::kMedium);
  const std::vector<SceneVerdict> same = {a, b};
  EXPECT_EQ(majority_vote(same).confidence, Confidence::kHigh);
}

TEST(MajorityVote, RejectsEmptyAndMixedScenes) {
  EXPECT_THROW(majority_vote({}), Error);
  const std::vector<SceneVerdict> mixed = {verdict(Rating::k0, {}, 1), verdict(Rating::k0, {}, 2)};
  EXPECT_THROW(majority_vote(mixed), Error);
}

TEST(Combine, HigherRatingWinsAndAnchorsAlwaysKept) {
  auto model = verdict(Rating::k12, Category::kFearElements);
  model.why = "dark cellar";
  SceneVerdict rules;
  rules.rating = Rating::k18;
  rules.label = Category::kViolence;
  rules.why = "Flagged due to graphic violence term 'Blood'";
  rules.anchors = {LexiconMatch{"v", Category::kViolence, Severity::kGraphic, {0, 5}, "Blood"}};
  const auto c = combine_verdicts(model, rules);
  EXPECT_EQ(c.rating, Rating::k18);
  EXPECT_EQ(c.label, Category::kViolence);
  EXPECT_EQ(c.anchors, rules.anchors);
  EXPECT_EQ(c.why, "dark cellar Legal anchors: Flagged due to graphic violence term 'Blood'");
  EXPECT_EQ(c.source, VerdictSource::kModel);

  auto high = verdict(Rating::k18, Category::kSexualContent);
  const auto d = combine_verdicts(high, rules);
  EXPECT_EQ(d.label, Category::kSexualContent);
  EXPECT_EQ(d.anchors, rules.anchors);
}

TEST(Combine, SafeModelAndSafeRulesStaySafe) {
  const auto c = combine_verdicts(verdict(Rating::k0), SceneVerdict{});
  EXPECT_EQ(c.rating, Rating::k0);
  EXPECT_FALSE(c.label.has_value());
  EXPECT_TRUE(c.why.empty());
}

TEST(Combine, UnexplainedModelRatingGetsPlaceholderWhy) {
  const auto c = combine_verdicts(verdict(Rating::k12, Category::kFearElements), SceneVerdict{});
  EXPECT_EQ(c.rating, Rating::k12);
  EXPECT_FALSE(c.why.empty());
}

TEST(Degrade, MarksRulesVerdict) {
  SceneVerdict r;
  r.rating = Rating::k6;
  r.confidence = Confidence::kHigh;
  const auto d = degrade_to_rules(r);
  EXPECT_TRUE(d.degraded);
  EXPECT_EQ(d.source, VerdictSource::kRules);
  EXPECT_EQ(d.confidence, Confidence::kLow);
  EXPECT_EQ(d.rating, Rating::k6);
}

TEST(Batching, TenTinyScenesGiveEightAndTwo) {
  std::vector<Scene> scenes;
  for (std::size_t i = 0; i < 10; ++i) scenes.push_back(tiny_scene(i, 10));
  EXPECT_EQ(sizes(batch_scenes(scenes, {})), (std::vector<std::size_t>{8, 2}));
}

TEST(Batching, ThreeScenesOneBatch) {
  std::vector<Scene> scenes;
  for (std::size_t i = 0; i < 3; ++i) scenes.push_back(tiny_scene(i, 10));
  EXPECT_EQ(sizes(batch_scenes(scenes, {})), (std::vector<std::size_t>{3}));
}

TEST(Batching, OversizeSceneTravelsAlone) {
  std::vector<Scene> scenes = {tiny_scene(0, 10), tiny_scene(1, 8000), tiny_scene(2, 10)};
  const auto b = batch_scenes(scenes, {});
  EXPECT_EQ(b, (std::vector<SceneBatch>{{0}, {1}, {2}}));
}

TEST(Batching, TokenBudgetClosesBatchOnceMinimumReached) {
  // 2000 tokens each: four reach 8000 > 7200, but the minimum of four wins.
  std::vector<Scene> scenes;
  for (std::size_t i = 0; i < 9; ++i) scenes.push_back(tiny_scene(i, 2000));
  EXPECT_EQ(sizes(batch_scenes(scenes, {})), (std::vector<std::size_t>{4, 4, 1}));
}

TEST(Batching, RandomPropertiesHold) {
  std::mt19937 rng(9);
  const AnalyzerConfig config;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Scene> scenes;
    const std::size_t n = 1 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) scenes.push_back(tiny_scene(i, 1 + rng() % 2500));
    const auto batches = batch_scenes(scenes, config);
    std::vector<std::size_t> order;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      EXPECT_LE(batches[b].size(), config.max_batch);
      if (b + 1 < batches.size()) EXPECT_GE(batches[b].size(), config.min_batch);
      std::size_t tokens = 0;
      for (std::size_t i : batches[b]) tokens += scenes[i].token_estimate;
      // Over budget only while the minimum is still being filled.
      if (tokens > config.batch_token_budget) EXPECT_LE(batches[b].size(), config.min_batch);
      order.insert(order.end(), batches[b].begin(), batches[b].end());
    }
    for (std::size_t i = 0; i < order.size(); ++i) EXPECT_EQ(order[i], i);
    EXPECT_EQ(order.size(), n);
  }
}

TEST(RulesAnalyzerTest, BatchPreservesOrder) {
  RulesAnalyzer analyzer(default_lexicon(), {});
  std::vector<Scene> scenes = {make_scene(0, "INT. A - DAY", {"Blood on the floor."}, 0),
                               make_scene(1, "INT. B - DAY", {"Calm tea."}, 2),
                               make_scene(2, "INT. C - DAY", {"A bottle of vodka."}, 4)};
  const auto v = analyzer.analyze_batch(scenes);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0].rating, Rating::k18);
  EXPECT_EQ(v[1].rating, Rating::k0);
  EXPECT_EQ(v[2].rating, Rating::k12);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(v[i].scene_index, i);
  EXPECT_EQ(analyze_scene(scenes[2], analyzer), v[2]);
}

TEST(MakeAnalyzer, KindsAndMissingClient) {
  EXPECT_EQ(make_analyzer(default_lexicon(), {})->kind(), AnalyzerKind::kRules);
  EXPECT_THROW(make_analyzer(default_lexicon(), mock_config()), Error);
  auto client = std::make_shared<MockCompletionClient>(std::map<std::string, std::string>{{"*", "{}"}});
  EXPECT_EQ(make_analyzer(default_lexicon(), mock_config(), client)->kind(), AnalyzerKind::kMock);
  EXPECT_THROW(RulesAnalyzer(nullptr, {}), Error);
}

TEST(CompletionAnalyzerTest, OneCallPerBatchWithEveryWindow) {
  auto client = std::make_shared<ScriptedClient>([](std::span<const std::string> prompts) {
    return std::vector<std::string>(prompts.size(), R"({"rating":"6+","why":"w","label":"fear"})");
  });
  AnalyzerConfig config = mock_config();
  config.window = {100, 20};
  CompletionAnalyzer analyzer(default_lexicon(), config, client);
  std::vector<Scene> scenes = {tiny_scene(0, 50), tiny_scene(1, 250), tiny_scene(2, 10)};
  const auto v = analyzer.analyze_batch(scenes);
  ASSERT_EQ(client->calls.size(), 1u);
  // 250 tokens at stride 80: ceil(1000 / 320) = 4 windows.
  EXPECT_EQ(client->calls[0].size(), 1u + 4u + 1u);
  for (const std::string& p : client->calls[0]) EXPECT_TRUE(p.starts_with(prompt_preamble()));
  EXPECT_EQ(slot_text(client->calls[0][0]), scenes[0].text());
  ASSERT_EQ(v.size(), 3u);
  for (const auto& x : v) {
    EXPECT_EQ(x.rating, Rating::k6);
    EXPECT_EQ(x.label, Category::kFearElements);
    EXPECT_EQ(x.source, VerdictSource::kMock);
    EXPECT_FALSE(x.degraded);
  }
}

TEST(CompletionAnalyzerTest, WindowsAreMajorityVoted) {
  // Scene of 250 tokens: windows 0..3; two say 16+, one 12+, one 0+.
  int call = 0;
  auto client = std::make_shared<ScriptedClient>([&call](std::span<const std::string> prompts) {
    ++call;
    std::vector<std::string> out;
    const char* replies[] = {R"({"rating":"16+","label":"violence"})", R"({"rating":"12+"})",
                             R"({"rating":"16+","label":"violence"})", R"({"rating":"0+"})"};
    for (std::size_t i = 0; i < prompts.size(); ++i) out.push_back(replies[i % 4]);
    return out;
  });
  AnalyzerConfig config;
  config.kind = AnalyzerKind::kModel;
  config.window = {100, 20};
  CompletionAnalyzer analyzer(default_lexicon(), config, client);
  const auto v = analyze_scene(tiny_scene(0, 250), analyzer);
  EXPECT_EQ(v.rating, Rating::k16);
  EXPECT_EQ(v.label, Category::kViolence);
  EXPECT_EQ(v.source, VerdictSource::kModel);
  EXPECT_EQ(call, 1);
}

TEST(CompletionAnalyzerTest, MalformedWindowDegradesOnlyItsScene) {
  auto client = std::make_shared<ScriptedClient>([](std::span<const std::string> prompts) {
    std::vector<std::string> out;
    for (const std::string& p : prompts) {
      out.push_back(slot_text(p).find("BAD") != std::string::npos ? "I cannot rate this."
                                                                   : "Answer: {\"rating\":\"12+\"}");
    }
    return out;
  });
  CompletionAnalyzer analyzer(default_lexicon(), mock_config(), client);
  std::vector<Scene> scenes = {make_scene(0, "INT. A - DAY", {"fine"}, 0),
                               make_scene(1, "INT. B - DAY", {"BAD blood"}, 2)};
  const auto v = analyzer.analyze_batch(scenes);
  EXPECT_FALSE(v[0].degraded);
  EXPECT_EQ(v[0].rating, Rating::k12);
  EXPECT_TRUE(v[1].degraded);
  EXPECT_EQ(v[1].source, VerdictSource::kRules);
  EXPECT_EQ(v[1].rating, Rating::k18);  // rules verdict for "blood"
  EXPECT_EQ(v[1].confidence, Confidence::kLow);
}

TEST(CompletionAnalyzerTest, UnavailableOrShortReplyDegradesWholeBatch) {
  auto failing = std::make_shared<ScriptedClient>([](std::span<const std::string>) -> std::vector<std::string> {
    throw Error(ErrorCode::kAnalyzerUnavailable, "down");
  });
  auto short_reply = std::make_shared<ScriptedClient>(
      [](std::span<const std::string>) { return std::vector<std::string>{R"({"rating":"0+"})"}; });
  std::vector<Scene> scenes = {make_scene(0, "", {"vodka"}, 0), make_scene(1, "", {"tea"}, 1)};
  for (auto client : {failing, short_reply}) {
    CompletionAnalyzer analyzer(default_lexicon(), mock_config(), client);
    const auto v = analyzer.analyze_batch(scenes);
    ASSERT_EQ(v.size(), 2u);
    for (const auto& x : v) EXPECT_TRUE(x.degraded);
    EXPECT_EQ(v[0].rating, Rating::k12);
    EXPECT_EQ(v[1].rating, Rating::k0);
  }
}

TEST(CompletionAnalyzerTest, ModelCannotLowerRulesRating) {
  auto client = std::make_shared<ScriptedClient>(
      [](std::span<const std::string> p) { return std::vector<std::string>(p.size(), R"({"rating":"0+"})"); });
  CompletionAnalyzer analyzer(default_lexicon(), mock_config(), client);
  const auto v = analyze_scene(make_scene(0, "", {"Blood sprays."}, 0), analyzer);
  EXPECT_EQ(v.rating, Rating::k18);
  EXPECT_EQ(v.label, Category::kViolence);
  EXPECT_FALSE(v.anchors.empty());
  EXPECT_FALSE(v.degraded);
}

}  // namespace
}  // namespace qwerty
