#include "qwerty/rating.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "qwerty/error.hpp"

namespace qwerty {

namespace {

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyDocument: return "EmptyDocument";
    case ErrorCode::kMalformedDocx: return "MalformedDocx";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kLexiconParseError: return "LexiconParseError";
    case ErrorCode::kAnalyzerUnavailable: return "AnalyzerUnavailable";
    case ErrorCode::kVerdictParseError: return "VerdictParseError";
    case ErrorCode::kEmptyAnalysis: return "EmptyAnalysis";
    case ErrorCode::kDivisionDomain: return "DivisionDomain";
    case ErrorCode::kEmptyEval: return "EmptyEval";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kBadRequest: return "BadRequest";
    case ErrorCode::kPayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::kTooManyUploads: return "TooManyUploads";
    case ErrorCode::kStorageError: return "StorageError";
  }
  return "Unknown";
}

std::string_view to_string(Rating r) {
  static constexpr std::array<std::string_view, 5> kNames = {"0+", "6+", "12+", "16+", "18+"};
  return kNames[static_cast<std::size_t>(r)];
}

std::optional<Rating> parse_rating(std::string_view text) {
  for (Rating r : kAllRatings) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::kViolence: return "violence";
    case Category::kProfanity: return "profanity";
    case Category::kSexualContent: return "sexual_content";
    case Category::kDrugsAlcohol: return "drugs_alcohol";
    case Category::kFearElements: return "fear_elements";
  }
  return "violence";
}

std::optional<Category> parse_category(std::string_view text) {
  const std::string key = lower_ascii(text);
  for (Category c : kAllCategories) {
    if (to_string(c) == key) return c;
  }
  return std::nullopt;
}

int label_priority(Category c) {
  const auto it = std::find(kLabelPriority.begin(), kLabelPriority.end(), c);
  return static_cast<int>(it - kLabelPriority.begin());
}

std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::kMild: return "mild";
    case Severity::kModerate: return "moderate";
    case Severity::kExplicit: return "explicit";
    case Severity::kGraphic: return "graphic";
  }
  return "mild";
}

std::optional<Severity> parse_severity(std::string_view text) {
  const std::string key = lower_ascii(text);
  for (Severity s : {Severity::kMild, Severity::kModerate, Severity::kExplicit, Severity::kGraphic}) {
    if (to_string(s) == key) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::kLow: return "low";
    case Confidence::kMedium: return "medium";
    case Confidence::kHigh: return "high";
  }
  return "low";
}

std::optional<Confidence> parse_confidence(std::string_view text) {
  for (Confidence c : {Confidence::kLow, Confidence::kMedium, Confidence::kHigh}) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

std::string_view to_string(VerdictSource s) {
  switch (s) {
    case VerdictSource::kRules: return "rules";
    case VerdictSource::kModel: return "model";
    case VerdictSource::kMock: return "mock";
    case VerdictSource::kHuman: return "human";
  }
  return "rules";
}

std::optional<VerdictSource> parse_verdict_source(std::string_view text) {
  for (VerdictSource s :
       {VerdictSource::kRules, VerdictSource::kModel, VerdictSource::kMock, VerdictSource::kHuman}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

}  // namespace qwerty
