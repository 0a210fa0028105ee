#include "qwerty/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/regex/icu.hpp>

#include "qwerty/error.hpp"
#include "qwerty/unicode.hpp"

namespace qwerty {

namespace {

// Splits on '|' except where escaped as "\|", which becomes a literal '|'.
std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> fields(1);
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\\' && i + 1 < line.size() && line[i + 1] == '|') {
      fields.back() += '|';
      ++i;
    } else if (line[i] == '|') {
      fields.emplace_back();
    } else {
      fields.back() += line[i];
    }
  }
  return fields;
}

bool is_literal_letter_at_end(const std::u32string& p) {
  if (p.empty() || !unicode::is_letter(p.back())) return false;
  std::size_t backslashes = 0;
  for (std::size_t i = p.size() - 1; i-- > 0 && p[i] == U'\\';) ++backslashes;
  return backslashes % 2 == 0;
}

// Word boundaries are added on the sides where the pattern begins or ends
// with a literal letter, so "crush\w*" still matches "crushed" but "ass"
// does not fire inside "class".
boost::u32regex compile_rule(const LexiconRule& rule) {
  const std::u32string p = unicode::to_utf32(rule.pattern);
  std::u32string wrapped;
  if (!p.empty() && unicode::is_letter(p.front())) wrapped += U"\\b";
  wrapped += U"(?:" + p + U")";
  if (is_literal_letter_at_end(p)) wrapped += U"\\b";
  return boost::make_u32regex(wrapped, boost::regex::perl | boost::regex::icase);
}

}  // namespace

struct Lexicon::Compiled {
  std::vector<boost::u32regex> patterns;
};

Lexicon::Lexicon(std::vector<LexiconRule> rules) : rules_(std::move(rules)) {
  compiled_ = std::make_unique<Compiled>();
  compiled_->patterns.reserve(rules_.size());
  for (const LexiconRule& rule : rules_) {
    try {
      compiled_->patterns.push_back(compile_rule(rule));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kLexiconParseError,
                  "rule '" + rule.id + "' has an invalid pattern: " + e.what());
    }
  }
}

Lexicon::~Lexicon() = default;
Lexicon::Lexicon(Lexicon&&) noexcept = default;
Lexicon& Lexicon::operator=(Lexicon&&) noexcept = default;

const LexiconRule* Lexicon::find(std::string_view id) const {
  for (const LexiconRule& r : rules_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

std::vector<LexiconMatch> Lexicon::scan(std::string_view text) const {
  std::vector<LexiconMatch> matches;
  if (text.empty()) return matches;
  const std::u32string chars = unicode::to_utf32(text);
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    const LexiconRule& rule = rules_[r];
    auto it = boost::make_u32regex_iterator(chars, compiled_->patterns[r]);
    for (decltype(it) end; it != end; ++it) {
      const auto& m = (*it)[0];
      if (m.length() == 0) continue;
      LexiconMatch match;
      match.rule_id = rule.id;
      match.category = rule.category;
      match.severity = rule.severity;
      match.span.start = static_cast<std::size_t>(m.first - chars.cbegin());
      match.span.end = static_cast<std::size_t>(m.second - chars.cbegin());
      match.quote = unicode::to_utf8(
          std::u32string_view(chars).substr(match.span.start, match.span.end - match.span.start));
      matches.push_back(std::move(match));
    }
  }
  std::stable_sort(matches.begin(), matches.end(), [](const LexiconMatch& a, const LexiconMatch& b) {
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.rule_id < b.rule_id;
  });
  return matches;
}

std::vector<LexiconRule> load_lexicon(std::istream& source) {
  std::vector<LexiconRule> rules;
  std::set<std::string> ids;
  std::string line;
  std::size_t number = 0;
  while (std::getline(source, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string_view trimmed = unicode::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;

    std::vector<std::string> fields = split_fields(trimmed);
    if (fields.size() != 5) {
      throw LexiconParseError(number, "expected 5 fields, found " + std::to_string(fields.size()));
    }
    for (std::string& f : fields) f = std::string(unicode::trim(f));

    LexiconRule rule;
    rule.id = fields[0];
    if (rule.id.empty()) throw LexiconParseError(number, "empty rule id");
    if (!ids.insert(rule.id).second) throw LexiconParseError(number, "duplicate rule id '" + rule.id + "'");
    const auto category = parse_category(fields[1]);
    if (!category) throw LexiconParseError(number, "unknown category '" + fields[1] + "'");
    const auto severity = parse_severity(fields[2]);
    if (!severity) throw LexiconParseError(number, "unknown severity '" + fields[2] + "'");
    rule.category = *category;
    rule.severity = *severity;
    rule.pattern = fields[3];
    rule.statute_ref = fields[4];
    if (rule.pattern.empty()) throw LexiconParseError(number, "empty pattern");
    try {
      (void)compile_rule(rule);
    } catch (const std::exception& e) {
      throw LexiconParseError(number, std::string("bad pattern: ") + e.what());
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<LexiconRule> load_lexicon_text(std::string_view source) {
  std::istringstream in{std::string(source)};
  return load_lexicon(in);
}

std::vector<LexiconRule> load_lexicon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot open lexicon file '" + path + "'");
  return load_lexicon(in);
}

std::vector<LexiconRule> default_lexicon_rules() { return load_lexicon_text(default_lexicon_text()); }

std::shared_ptr<const Lexicon> default_lexicon() {
  static const std::shared_ptr<const Lexicon> lexicon =
      std::make_shared<const Lexicon>(default_lexicon_rules());
  return lexicon;
}

std::vector<LexiconMatch> scan(std::string_view text, const std::vector<LexiconRule>& rules) {
  return Lexicon(rules).scan(text);
}

std::string anchor_explanation(const LexiconMatch& match, const LexiconRule& rule) {
  std::string category(to_string(match.category));
  std::replace(category.begin(), category.end(), '_', ' ');
  return "Flagged due to " + std::string(to_string(match.severity)) + " " + category + " term '" +
         match.quote + "', classified under " + rule.statute_ref;
}

}  // namespace qwerty
