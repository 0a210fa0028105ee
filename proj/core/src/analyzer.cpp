#include "qwerty/analyzer.hpp"

#include <algorithm>
#include <map>

#include "qwerty/error.hpp"
#include "qwerty/prompt.hpp"

namespace qwerty {

std::string_view to_string(AnalyzerKind kind) {
  switch (kind) {
    case AnalyzerKind::kRules: return "rules";
    case AnalyzerKind::kModel: return "model";
    case AnalyzerKind::kMock: return "mock";
  }
  return "rules";
}

std::optional<AnalyzerKind> parse_analyzer_kind(std::string_view text) {
  for (AnalyzerKind k : {AnalyzerKind::kRules, AnalyzerKind::kModel, AnalyzerKind::kMock}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

void validate(const AnalyzerConfig& config) {
  validate(config.window);
  if (config.min_batch < 1 || config.min_batch > config.max_batch) {
    throw Error(ErrorCode::kConfigError, "batch bounds require 1 <= min_batch <= max_batch");
  }
  if (config.batch_token_budget == 0) {
    throw Error(ErrorCode::kConfigError, "batch token budget must be positive");
  }
}

RulesAnalyzer::RulesAnalyzer(std::shared_ptr<const Lexicon> lexicon, AnalyzerConfig config)
    : Analyzer(std::move(config)), lexicon_(std::move(lexicon)) {
  if (!lexicon_) throw Error(ErrorCode::kConfigError, "rules analyzer needs a lexicon");
}

SceneVerdict RulesAnalyzer::analyze(const Scene& scene) const {
  return rules_verdict(scene, lexicon_->scan(scene.text()), *lexicon_, config_.severity_map);
}

std::vector<SceneVerdict> RulesAnalyzer::analyze_batch(std::span<const Scene> scenes) const {
  std::vector<SceneVerdict> out;
  out.reserve(scenes.size());
  for (const Scene& s : scenes) out.push_back(analyze(s));
  return out;
}

CompletionAnalyzer::CompletionAnalyzer(std::shared_ptr<const Lexicon> lexicon, AnalyzerConfig config,
                                       std::shared_ptr<CompletionClient> client)
    : Analyzer(std::move(config)),
      lexicon_(std::move(lexicon)),
      client_(std::move(client)),
      rules_(lexicon_, config_) {
  if (!client_) throw Error(ErrorCode::kConfigError, "model analyzer needs a completion client");
  validate(config_);
}

std::vector<SceneVerdict> CompletionAnalyzer::analyze_batch(std::span<const Scene> scenes) const {
  std::vector<SceneVerdict> rules = rules_.analyze_batch(scenes);

  // All windows of the batch go out as one request.
  std::vector<std::string> prompts;
  std::vector<std::pair<std::size_t, std::size_t>> owner;  // (scene slot, window count)
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto windows = window_scene(scenes[i], config_.window);
    owner.emplace_back(i, windows.size());
    for (const SceneWindow& w : windows) prompts.push_back(build_prompt(w.text));
  }

  std::vector<std::string> completions;
  try {
    completions = client_->complete(prompts);
  } catch (const Error&) {
    completions.clear();
  }

  std::vector<SceneVerdict> out;
  out.reserve(scenes.size());
  if (completions.size() != prompts.size()) {
    for (SceneVerdict& r : rules) out.push_back(degrade_to_rules(std::move(r)));
    return out;
  }

  const VerdictSource source =
      config_.kind == AnalyzerKind::kMock ? VerdictSource::kMock : VerdictSource::kModel;
  std::size_t next = 0;
  for (const auto& [slot, count] : owner) {
    std::vector<SceneVerdict> window_verdicts;
    bool failed = false;
    for (std::size_t w = 0; w < count; ++w, ++next) {
      try {
        SceneVerdict v = parse_verdict(completions[next], scenes[slot].index);
        v.source = source;
        window_verdicts.push_back(std::move(v));
      } catch (const VerdictParseError&) {
        failed = true;
      }
    }
    if (failed) {
      out.push_back(degrade_to_rules(std::move(rules[slot])));
    } else {
      out.push_back(combine_verdicts(majority_vote(window_verdicts), rules[slot]));
    }
  }
  return out;
}

std::unique_ptr<Analyzer> make_analyzer(std::shared_ptr<const Lexicon> lexicon,
                                        const AnalyzerConfig& config,
                                        std::shared_ptr<CompletionClient> client) {
  validate(config);
  if (config.kind == AnalyzerKind::kRules) {
    return std::make_unique<RulesAnalyzer>(std::move(lexicon), config);
  }
  return std::make_unique<CompletionAnalyzer>(std::move(lexicon), config, std::move(client));
}

SceneVerdict analyze_scene(const Scene& scene, const Analyzer& analyzer) {
  return analyzer.analyze_batch(std::span<const Scene>(&scene, 1)).front();
}

SceneVerdict majority_vote(std::span<const SceneVerdict> verdicts) {
  if (verdicts.empty()) throw Error(ErrorCode::kInvalidArgument, "majority vote over no verdicts");
  const std::size_t scene = verdicts.front().scene_index;

  std::array<std::size_t, 5> votes{};
  for (const SceneVerdict& v : verdicts) {
    if (v.scene_index != scene) {
      throw Error(ErrorCode::kInvalidArgument, "majority vote across different scenes");
    }
    ++votes[static_cast<std::size_t>(v.rating)];
  }
  // Highest count; on a tie the later (more severe) rating wins.
  std::size_t winner = 0;
  for (std::size_t r = 1; r < votes.size(); ++r) {
    if (votes[r] >= votes[winner] && votes[r] > 0) winner = r;
  }

  SceneVerdict result;
  result.scene_index = scene;
  result.rating = static_cast<Rating>(winner);
  result.source = verdicts.front().source;

  std::map<int, std::size_t> label_votes;  // priority -> count, -1 for none
  for (const SceneVerdict& v : verdicts) {
    if (v.rating != result.rating) continue;
    ++label_votes[v.label ? label_priority(*v.label) : -1];
  }
  int best_label = -1;
  std::size_t best_count = 0;
  for (const auto& [priority, count] : label_votes) {
    if (priority < 0) continue;
    if (count > best_count) {
      best_label = priority;
      best_count = count;
    }
  }
  if (best_label >= 0) result.label = kLabelPriority[static_cast<std::size_t>(best_label)];

  bool unanimous = votes[winner] == verdicts.size();
  Confidence confidence = Confidence::kHigh;
  for (const SceneVerdict& v : verdicts) {
    if (!v.why.empty() && result.why.find(v.why) == std::string::npos) {
      if (!result.why.empty()) result.why += " | ";
      result.why += v.why;
    }
    for (const LexiconMatch& a : v.anchors) {
      if (std::find(result.anchors.begin(), result.anchors.end(), a) == result.anchors.end()) {
        result.anchors.push_back(a);
      }
    }
    confidence = std::min(confidence, v.confidence);
    result.degraded = result.degraded || v.degraded;
  }
  result.confidence = unanimous ? confidence : std::min(confidence, Confidence::kMedium);
  std::stable_sort(result.anchors.begin(), result.anchors.end(),
                   [](const LexiconMatch& a, const LexiconMatch& b) {
                     if (a.span.start != b.span.start) return a.span.start < b.span.start;
                     return a.rule_id < b.rule_id;
                   });
  return result;
}

SceneVerdict combine_verdicts(const SceneVerdict& model, const SceneVerdict& rules) {
  SceneVerdict out = model;
  out.anchors = rules.anchors;
  out.rating = std::max(model.rating, rules.rating);
  if (rules.rating > model.rating || (!model.label && out.rating > Rating::k0)) {
    out.label = rules.label ? rules.label : model.label;
  }
  if (out.rating == Rating::k0 && !model.label) out.label.reset();
  if (!rules.why.empty()) {
    if (!out.why.empty()) out.why += " Legal anchors: ";
    out.why += rules.why;
  }
  if (out.rating > Rating::k0 && out.why.empty()) {
    out.why = "Rated " + std::string(to_string(out.rating)) + " by the model without explanation";
  }
  return out;
}

SceneVerdict degrade_to_rules(SceneVerdict rules) {
  rules.source = VerdictSource::kRules;
  rules.confidence = Confidence::kLow;
  rules.degraded = true;
  return rules;
}

std::vector<SceneBatch> batch_scenes(std::span<const Scene> scenes, const AnalyzerConfig& config) {
  std::vector<SceneBatch> batches;
  SceneBatch current;
  std::size_t tokens = 0;
  auto flush = [&] {
    if (!current.empty()) batches.push_back(std::move(current));
    current.clear();
    tokens = 0;
  };

  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const std::size_t t = scenes[i].token_estimate;
    if (t > config.batch_token_budget) {
      // An oversize scene travels alone.
      flush();
      batches.push_back({i});
      continue;
    }
    const bool fits = current.size() < config.max_batch && tokens + t <= config.batch_token_budget;
    if (!current.empty() && current.size() >= config.min_batch && !fits) flush();
    if (current.size() >= config.max_batch) flush();
    current.push_back(i);
    tokens += t;
  }
  flush();
  return batches;
}

}  // namespace qwerty
