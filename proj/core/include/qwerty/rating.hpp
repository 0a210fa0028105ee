#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>

namespace qwerty {

// Age-rating tiers, totally ordered by restrictiveness.
enum class Rating : std::uint8_t { k0 = 0, k6 = 1, k12 = 2, k16 = 3, k18 = 4 };

inline constexpr std::array<Rating, 5> kAllRatings = {
    Rating::k0, Rating::k6, Rating::k12, Rating::k16, Rating::k18};

constexpr int rating_level(Rating r) { return static_cast<int>(r); }
constexpr Rating rating_from_level(int level) { return static_cast<Rating>(level); }

std::string_view to_string(Rating r);  // "0+", "6+", ...
std::optional<Rating> parse_rating(std::string_view text);

enum class Category : std::uint8_t {
  kViolence,
  kProfanity,
  kSexualContent,
  kDrugsAlcohol,
  kFearElements,
};

// Wire order, matching the report's "violations" object.
inline constexpr std::array<Category, 5> kAllCategories = {
    Category::kViolence, Category::kProfanity, Category::kSexualContent,
    Category::kDrugsAlcohol, Category::kFearElements};

// Order used to pick a verdict label when several categories share the
// maximal rating.
inline constexpr std::array<Category, 5> kLabelPriority = {
    Category::kViolence, Category::kSexualContent, Category::kDrugsAlcohol,
    Category::kProfanity, Category::kFearElements};

std::string_view to_string(Category c);  // "violence", "sexual_content", ...
std::optional<Category> parse_category(std::string_view text);
int label_priority(Category c);

enum class Severity : std::uint8_t { kMild, kModerate, kExplicit, kGraphic };

std::string_view to_string(Severity s);
std::optional<Severity> parse_severity(std::string_view text);

enum class Confidence : std::uint8_t { kLow, kMedium, kHigh };

std::string_view to_string(Confidence c);
std::optional<Confidence> parse_confidence(std::string_view text);

enum class VerdictSource : std::uint8_t { kRules, kModel, kMock, kHuman };

std::string_view to_string(VerdictSource s);
std::optional<VerdictSource> parse_verdict_source(std::string_view text);

}  // namespace qwerty
