#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qwerty/completion.hpp"
#include "qwerty/lexicon.hpp"
#include "qwerty/segmenter.hpp"
#include "qwerty/verdict.hpp"

namespace qwerty {

enum class AnalyzerKind { kRules, kModel, kMock };

std::string_view to_string(AnalyzerKind kind);
std::optional<AnalyzerKind> parse_analyzer_kind(std::string_view text);

struct AnalyzerConfig {
  AnalyzerKind kind = AnalyzerKind::kRules;
  WindowBudget window;
  std::size_t min_batch = 4;
  std::size_t max_batch = 8;
  std::size_t batch_token_budget = 7200;
  SeverityMap severity_map;
};

// Throws kConfigError on inconsistent budgets or batch bounds.
void validate(const AnalyzerConfig& config);

// Scenes are analyzed a batch at a time; every implementation attaches the
// scene's lexicon anchors to its verdict.
class Analyzer {
 public:
  explicit Analyzer(AnalyzerConfig config) : config_(std::move(config)) {}
  virtual ~Analyzer() = default;

  virtual AnalyzerKind kind() const = 0;
  const AnalyzerConfig& config() const { return config_; }

  // One verdict per scene, in input order.
  virtual std::vector<SceneVerdict> analyze_batch(std::span<const Scene> scenes) const = 0;

 protected:
  AnalyzerConfig config_;
};

// Deterministic lexicon-driven analyzer.
class RulesAnalyzer final : public Analyzer {
 public:
  RulesAnalyzer(std::shared_ptr<const Lexicon> lexicon, AnalyzerConfig config);

  AnalyzerKind kind() const override { return AnalyzerKind::kRules; }
  std::vector<SceneVerdict> analyze_batch(std::span<const Scene> scenes) const override;

  SceneVerdict analyze(const Scene& scene) const;

 private:
  std::shared_ptr<const Lexicon> lexicon_;
};

// Windowed prompt -> completion -> verdict, combined with the rules verdict.
// Used for both the model and mock kinds; only the completion source differs.
class CompletionAnalyzer final : public Analyzer {
 public:
  CompletionAnalyzer(std::shared_ptr<const Lexicon> lexicon, AnalyzerConfig config,
                     std::shared_ptr<CompletionClient> client);

  AnalyzerKind kind() const override { return config_.kind; }
  std::vector<SceneVerdict> analyze_batch(std::span<const Scene> scenes) const override;

 private:
  std::shared_ptr<const Lexicon> lexicon_;
  std::shared_ptr<CompletionClient> client_;
  RulesAnalyzer rules_;
};

// client may be null for the rules kind.
std::unique_ptr<Analyzer> make_analyzer(std::shared_ptr<const Lexicon> lexicon,
                                        const AnalyzerConfig& config,
                                        std::shared_ptr<CompletionClient> client = nullptr);

SceneVerdict analyze_scene(const Scene& scene, const Analyzer& analyzer);

// Modal rating; ties go to the more severe rating. Requires a non-empty list
// with one scene index.
SceneVerdict majority_vote(std::span<const SceneVerdict> verdicts);

// Conservative merge of a model verdict with the rules verdict for the same
// scene: the higher rating wins and the lexicon anchors are always kept.
SceneVerdict combine_verdicts(const SceneVerdict& model, const SceneVerdict& rules);

// Fallback used when the model path fails.
SceneVerdict degrade_to_rules(SceneVerdict rules);

using SceneBatch = std::vector<std::size_t>;  // indices into the scene list

std::vector<SceneBatch> batch_scenes(std::span<const Scene> scenes, const AnalyzerConfig& config);

}  // namespace qwerty
