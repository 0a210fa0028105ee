#pragma once

#include <cstddef>
#include <istream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "qwerty/rating.hpp"

namespace qwerty {

struct LexiconRule {
  std::string id;
  Category category = Category::kViolence;
  Severity severity = Severity::kMild;
  std::string pattern;  // case-insensitive, Unicode-aware
  std::string statute_ref;
};

struct CharSpan {
  std::size_t start = 0;  // code-point offsets into the scanned text
  std::size_t end = 0;

  bool operator==(const CharSpan&) const = default;
};

struct LexiconMatch {
  std::string rule_id;
  Category category = Category::kViolence;
  Severity severity = Severity::kMild;
  CharSpan span;
  std::string quote;  // UTF-8 slice of the scanned text at span

  bool operator==(const LexiconMatch&) const = default;
};

// Compiled, immutable rule set. Safe to share across threads.
class Lexicon {
 public:
  explicit Lexicon(std::vector<LexiconRule> rules);
  ~Lexicon();
  Lexicon(Lexicon&&) noexcept;
  Lexicon& operator=(Lexicon&&) noexcept;

  const std::vector<LexiconRule>& rules() const { return rules_; }
  const LexiconRule* find(std::string_view id) const;
  std::size_t size() const { return rules_.size(); }

  std::vector<LexiconMatch> scan(std::string_view text) const;

 private:
  struct Compiled;
  std::vector<LexiconRule> rules_;
  std::unique_ptr<Compiled> compiled_;
};

// Line format: id|category|severity|pattern|statute_ref. '#' starts a
// comment line. A literal '|' inside a pattern is written as "\|"; other
// backslash sequences pass through to the regex untouched.
std::vector<LexiconRule> load_lexicon(std::istream& source);
std::vector<LexiconRule> load_lexicon_text(std::string_view source);
std::vector<LexiconRule> load_lexicon_file(const std::string& path);

std::string_view default_lexicon_text();
std::vector<LexiconRule> default_lexicon_rules();
std::shared_ptr<const Lexicon> default_lexicon();

// Convenience wrapper: compiles the rules for a single scan.
std::vector<LexiconMatch> scan(std::string_view text, const std::vector<LexiconRule>& rules);

// "Flagged due to <severity> <category> term '<quote>', classified under <statute>"
std::string anchor_explanation(const LexiconMatch& match, const LexiconRule& rule);

}  // namespace qwerty
