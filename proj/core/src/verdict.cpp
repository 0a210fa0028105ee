#include "qwerty/verdict.hpp"

#include <set>
#include <sstream>

#include "qwerty/error.hpp"
#include "qwerty/unicode.hpp"

namespace qwerty {

namespace {

std::size_t idx(Category c) { return static_cast<std::size_t>(c); }
std::size_t idx(Severity s) { return static_cast<std::size_t>(s); }

}  // namespace

SeverityMap::SeverityMap() {
  using R = Rating;
  //                                  mild    moderate explicit graphic
  table_[idx(Category::kViolence)] = {R::k6, R::k12, R::k16, R::k18};
  table_[idx(Category::kProfanity)] = {R::k16, R::k16, R::k18, R::k18};
  table_[idx(Category::kSexualContent)] = {R::k12, R::k16, R::k18, R::k18};
  table_[idx(Category::kDrugsAlcohol)] = {R::k12, R::k12, R::k16, R::k18};
  table_[idx(Category::kFearElements)] = {R::k6, R::k12, R::k16, R::k16};
}

Rating SeverityMap::at(Category c, Severity s) const { return table_[idx(c)][idx(s)]; }

void SeverityMap::set(Category c, Severity s, Rating r) { table_[idx(c)][idx(s)] = r; }

SeverityMap load_severity_map(std::string_view text) {
  SeverityMap map;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string_view t = unicode::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto dot = t.find('.');
    const auto eq = t.find('=');
    if (dot == std::string_view::npos || eq == std::string_view::npos || eq < dot) {
      throw Error(ErrorCode::kConfigError,
                  "severity map line " + std::to_string(number) + ": expected category.severity=rating");
    }
    const auto c = parse_category(unicode::trim(t.substr(0, dot)));
    const auto s = parse_severity(unicode::trim(t.substr(dot + 1, eq - dot - 1)));
    const auto r = parse_rating(unicode::trim(t.substr(eq + 1)));
    if (!c || !s || !r) {
      throw Error(ErrorCode::kConfigError,
                  "severity map line " + std::to_string(number) + ": unknown category, severity or rating");
    }
    map.set(*c, *s, *r);
  }
  return map;
}

SceneVerdict rules_verdict(const Scene& scene, const std::vector<LexiconMatch>& matches,
                           const Lexicon& lexicon, const SeverityMap& map) {
  SceneVerdict verdict;
  verdict.scene_index = scene.index;
  verdict.source = VerdictSource::kRules;
  verdict.anchors = matches;
  if (matches.empty()) {
    verdict.rating = Rating::k0;
    verdict.confidence = Confidence::kHigh;
    return verdict;
  }

  const LexiconMatch* top = nullptr;
  Rating top_rating = Rating::k0;
  std::set<Severity> severities;
  for (const LexiconMatch& m : matches) {
    severities.insert(m.severity);
    const Rating r = map.at(m.category, m.severity);
    if (!top || r > top_rating ||
        (r == top_rating && label_priority(m.category) < label_priority(top->category))) {
      top = &m;
      top_rating = r;
    }
  }
  verdict.rating = top_rating;
  if (top_rating == Rating::k0) {
    // A custom map can rate some matches 0+; they stay as anchors only.
    verdict.confidence = Confidence::kHigh;
    return verdict;
  }
  verdict.label = top->category;
  verdict.confidence = severities.size() == 1 ? Confidence::kHigh : Confidence::kMedium;

  for (const LexiconMatch& m : matches) {
    const LexiconRule* rule = lexicon.find(m.rule_id);
    if (!rule) continue;
    if (!verdict.why.empty()) verdict.why += "; ";
    verdict.why += anchor_explanation(m, *rule);
  }
  return verdict;
}

}  // namespace qwerty
