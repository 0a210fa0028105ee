#include "qwerty/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>

#include "json.hpp"
#include "qwerty/error.hpp"

namespace qwerty {

namespace {

using nlohmann::json;

constexpr std::string_view kPreamble =
    "SYSTEM: You are an age-rating analyzer for Russian screenplays. Classify text according to "
    "Federal Law 436-FZ:\n"
    "\n"
    "0+ = Safe for all ages\n"
    "6+ = Mild conflict, characters in peril\n"
    "12+ = Moderate violence (no blood), mild fear\n"
    "16+ = Alcohol/tobacco, explicit violence, sexual references\n"
    "18+ = Graphic violence, drugs, explicit sexual content\n"
    "\n"
    "CATEGORIES: VIOLENCE, PROFANITY, SEXUAL CONTENT, ALCOHOL/DRUGS, FRIGHTENING CONTENT\n"
    "\n"
    "Return JSON only: {\"rating\": \"X+\", \"why\": \"explanation\", \"label\": \"category\"}\n"
    "\n"
    "Text to analyze: ";

// Returns the index one past the '}' closing the object opened at `open`,
// honoring JSON string escapes.
std::optional<std::size_t> object_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

struct LabelResult {
  bool known = false;
  std::optional<Category> category;
};

LabelResult parse_label(std::string_view raw) {
  std::string key;
  for (char c : raw) {
    const auto u = static_cast<unsigned char>(c);
    if (c == ' ' || c == '/' || c == '-' || c == '&') {
      if (!key.empty() && key.back() != '_') key += '_';
    } else {
      key += static_cast<char>(std::tolower(u));
    }
  }
  while (!key.empty() && key.back() == '_') key.pop_back();

  static const std::map<std::string, std::optional<Category>> kAliases = {
      {"", std::nullopt},
      {"none", std::nullopt},
      {"null", std::nullopt},
      {"safe", std::nullopt},
      {"n_a", std::nullopt},
      {"violence", Category::kViolence},
      {"profanity", Category::kProfanity},
      {"sexual_content", Category::kSexualContent},
      {"sexual", Category::kSexualContent},
      {"drugs_alcohol", Category::kDrugsAlcohol},
      {"alcohol_drugs", Category::kDrugsAlcohol},
      {"substances", Category::kDrugsAlcohol},
      {"fear_elements", Category::kFearElements},
      {"frightening_content", Category::kFearElements},
      {"frightening", Category::kFearElements},
      {"fear", Category::kFearElements},
  };
  const auto it = kAliases.find(key);
  if (it == kAliases.end()) return {};
  return {true, it->second};
}

}  // namespace

std::string_view prompt_preamble() { return kPreamble; }

std::string build_prompt(std::string_view scene_text) {
  std::string prompt;
  prompt.reserve(kPreamble.size() + scene_text.size());
  prompt += kPreamble;
  prompt += scene_text;
  return prompt;
}

SceneVerdict parse_verdict(std::string_view raw, std::size_t scene_index) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos;
       open = raw.find('{', open + 1)) {
    const auto end = object_end(raw, open);
    if (!end) break;
    const json obj = json::parse(raw.substr(open, *end - open), nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("rating")) continue;

    const json& rating = obj["rating"];
    const auto parsed = rating.is_string() ? parse_rating(rating.get<std::string>()) : std::nullopt;
    if (!parsed) {
      throw VerdictParseError("unknown rating " + rating.dump(), std::string(raw));
    }

    SceneVerdict verdict;
    verdict.scene_index = scene_index;
    verdict.rating = *parsed;
    verdict.source = VerdictSource::kModel;
    verdict.confidence = Confidence::kMedium;

    if (obj.contains("label") && !obj["label"].is_null()) {
      if (!obj["label"].is_string()) {
        throw VerdictParseError("label is not a string", std::string(raw));
      }
      const LabelResult label = parse_label(obj["label"].get<std::string>());
      if (!label.known) {
        throw VerdictParseError("unknown label \"" + obj["label"].get<std::string>() + "\"",
                                std::string(raw));
      }
      verdict.label = label.category;
    }
    if (obj.contains("why") && obj["why"].is_string()) verdict.why = obj["why"].get<std::string>();
    return verdict;
  }
  throw VerdictParseError("no verdict object in completion", std::string(raw));
}

}  // namespace qwerty
