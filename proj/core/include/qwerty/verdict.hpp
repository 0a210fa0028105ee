#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qwerty/lexicon.hpp"
#include "qwerty/rating.hpp"
#include "qwerty/segmenter.hpp"

namespace qwerty {

struct SceneVerdict {
  std::size_t scene_index = 0;
  Rating rating = Rating::k0;
  std::optional<Category> label;
  std::string why;
  std::vector<LexiconMatch> anchors;
  Confidence confidence = Confidence::kHigh;
  VerdictSource source = VerdictSource::kRules;
  // Set when a model or mock verdict could not be obtained and the rules
  // verdict was substituted.
  bool degraded = false;

  bool operator==(const SceneVerdict&) const = default;
};

// (category, severity) -> rating lookup.
class SeverityMap {
 public:
  SeverityMap();  // the default tier mapping

  Rating at(Category c, Severity s) const;
  void set(Category c, Severity s, Rating r);

  bool operator==(const SeverityMap&) const = default;

 private:
  std::array<std::array<Rating, 4>, 5> table_{};
};

// Parses "category.severity=rating" lines (blank lines and '#' comments
// ignored) on top of the defaults.
SeverityMap load_severity_map(std::string_view text);

SceneVerdict rules_verdict(const Scene& scene, const std::vector<LexiconMatch>& matches,
                           const Lexicon& lexicon, const SeverityMap& map);

}  // namespace qwerty
