#include <gtest/gtest.h>

#include <algorithm>

#include "qwerty/error.hpp"
#include "qwerty/lexicon.hpp"
#include "qwerty/unicode.hpp"

namespace qwerty {
namespace {

std::vector<std::string> rule_ids(const std::vector<LexiconMatch>& matches) {
  std::vector<std::string> ids;
  for (const auto& m : matches) ids.push_back(m.rule_id);
  return ids;
}

TEST(LexiconLoad, ParsesFieldsAndEscapedPipe) {
  const auto rules = load_lexicon_text(
      "# comment\n"
      "\n"
      "a|violence|graphic|blood\\|gore|Art. 1\r\n"
      "  b | profanity | mild | darn | Art. 2  \n");
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules[0].id, "a");
  EXPECT_EQ(rules[0].category, Category::kViolence);
  EXPECT_EQ(rules[0].severity, Severity::kGraphic);
  EXPECT_EQ(rules[0].pattern, "blood|gore");
  EXPECT_EQ(rules[0].statute_ref, "Art. 1");
  EXPECT_EQ(rules[1].id, "b");
  EXPECT_EQ(rules[1].pattern, "darn");
  EXPECT_EQ(rules[1].statute_ref, "Art. 2");
}

TEST(LexiconLoad, ErrorsCarryLineNumbers) {
  const std::vector<std::pair<std::string, std::size_t>> bad = {
      {"a|violence|mild|x", 1},
      {"# c\na|violence|mild|x|s\na|violence|mild|y|s", 3},
      {"a|violent|mild|x|s", 1},
      {"\n\na|violence|harsh|x|s", 3},
      {"a|violence|mild||s", 1},
      {"|violence|mild|x|s", 1},
      {"a|violence|mild|(unclosed|s", 1},
  };
  for (const auto& [text, line] : bad) {
    try {
      load_lexicon_text(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const LexiconParseError& e) {
      EXPECT_EQ(e.line(), line) << text;
      EXPECT_EQ(e.code(), ErrorCode::kLexiconParseError);
    }
  }
}

TEST(LexiconLoad, MissingFileIsConfigError) {
  try {
    load_lexicon_file("/nonexistent/lexicon.lex");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
}

TEST(DefaultLexicon, LoadsAndCoversEveryCategory) {
  const auto rules = default_lexicon_rules();
  EXPECT_GE(rules.size(), 30u);
  for (Category c : kAllCategories) {
    EXPECT_TRUE(std::any_of(rules.begin(), rules.end(), [c](const LexiconRule& r) { return r.category == c; }))
        << to_string(c);
  }
  EXPECT_EQ(default_lexicon()->size(), rules.size());
  EXPECT_EQ(default_lexicon().get(), default_lexicon().get());
}

TEST(Scan, SpansAreCodePointOffsetsAndQuotesMatch) {
  const Lexicon lex(load_lexicon_text("k|violence|explicit|убил\\w*|S\nb|violence|graphic|blood|S"));
  const std::string text = "«Он убил — и кровь». Blood!";
  const auto matches = lex.scan(text);
  ASSERT_EQ(matches.size(), 2u);
  const std::u32string cps = unicode::to_utf32(text);
  for (const auto& m : matches) {
    EXPECT_EQ(unicode::to_utf8(cps.substr(m.span.start, m.span.end - m.span.start)), m.quote);
  }
  EXPECT_EQ(matches[0].quote, "убил");
  EXPECT_EQ(matches[0].span, (CharSpan{4, 8}));
  EXPECT_EQ(matches[1].quote, "Blood");
  EXPECT_EQ(matches[1].span, (CharSpan{21, 26}));
}

TEST(Scan, CaseInsensitiveAcrossScripts) {
  const Lexicon lex(load_lexicon_text("a|fear_elements|moderate|ужас\\w*|S\nb|fear_elements|moderate|horror|S"));
  EXPECT_EQ(lex.scan("УЖАСНО. HoRrOr.").size(), 2u);
}

TEST(Scan, WordBoundaryOnLetterEdges) {
  const Lexicon lex(load_lexicon_text("a|profanity|mild|ass|S\nb|violence|mild|crush\\w*|S"));
  EXPECT_TRUE(lex.scan("a first-class passenger").empty());
  EXPECT_EQ(rule_ids(lex.scan("crushed, crushing, crush")), (std::vector<std::string>{"b", "b", "b"}));
  EXPECT_EQ(lex.scan("you ass.").size(), 1u);
}

TEST(Scan, OrderedByPositionThenRuleId) {
  const Lexicon lex(load_lexicon_text("z|violence|mild|fight|S\na|violence|moderate|fight\\w*|S\n"
                                      "m|fear_elements|mild|dark|S"));
  const auto matches = lex.scan("dark fight");
  EXPECT_EQ(rule_ids(matches), (std::vector<std::string>{"m", "a", "z"}));
  for (std::size_t i = 1; i < matches.size(); ++i) {
    EXPECT_LE(matches[i - 1].span.start, matches[i].span.start);
  }
}

TEST(Scan, EmptyTextHasNoMatches) { EXPECT_TRUE(default_lexicon()->scan("").empty()); }

TEST(DefaultLexicon, KnownTermsFire) {
  const auto& lex = *default_lexicon();
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"Blood sprays across the floor.", "v.graphic.en"},
      {"Кровь на полу.", "v.graphic.ru"},
      {"He wants to kill him.", "v.explicit.en"},
      {"The soldiers share a bottle of vodka.", "d.moderate.en"},
      {"Они пьют водку.", "d.moderate.ru"},
      {"Marina's dreams were crushed.", "v.mild.en"},
      {"Heroin on the table.", "d.graphic.en"},
      {"Дети боятся темноты, им страшно.", "f.mild.ru"},
  };
  for (const auto& [text, id] : cases) {
    const auto ids = rule_ids(lex.scan(text));
    EXPECT_NE(std::find(ids.begin(), ids.end(), id), ids.end()) << text;
  }
  EXPECT_TRUE(lex.scan("Anna opens the window and looks down at the street.").empty());
  EXPECT_TRUE(lex.scan("Анна открывает окно и смотрит на улицу.").empty());
}

TEST(Scan, ConvenienceWrapperMatchesCompiledLexicon) {
  const auto rules = default_lexicon_rules();
  const std::string text = "Viktor swings the pipe. Blood sprays. A drink follows.";
  EXPECT_EQ(scan(text, rules), default_lexicon()->scan(text));
}

TEST(Anchor, ExplanationTemplate) {
  LexiconRule rule{"x", Category::kSexualContent, Severity::kModerate, "naked", "Art. 5"};
  LexiconMatch m{"x", Category::kSexualContent, Severity::kModerate, {0, 5}, "naked"};
  EXPECT_EQ(anchor_explanation(m, rule),
            "Flagged due to moderate sexual content term 'naked', classified under Art. 5");
}

TEST(Lexicon, FindAndInvalidPatternConstruction) {
  const Lexicon lex(load_lexicon_text("a|violence|mild|x|S"));
  ASSERT_NE(lex.find("a"), nullptr);
  EXPECT_EQ(lex.find("b"), nullptr);
  try {
    Lexicon bad({LexiconRule{"bad", Category::kViolence, Severity::kMild, "[", "S"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLexiconParseError);
  }
}

}  // namespace
}  // namespace qwerty
