#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qwerty/rating.hpp"
#include "qwerty/segmenter.hpp"
#include "qwerty/verdict.hpp"

namespace qwerty {

// Counts are per analysis unit (scene). The wire names keep the "sentences"
// wording for compatibility with existing consumers.
struct Statistics {
  std::size_t total_sentences = 0;
  std::size_t problematic_sentences = 0;
  std::array<std::size_t, 5> violations{};  // indexed by kAllCategories order

  std::size_t violation_count(Category c) const;
  bool operator==(const Statistics&) const = default;
};

struct TimelineEntry {
  std::size_t scene_index = 0;
  LineSpan span;
  std::string heading;
  Rating rating = Rating::k0;
  std::optional<Category> label;

  bool operator==(const TimelineEntry&) const = default;
};

struct Report {
  std::string file_id;
  Rating overall_rating = Rating::k0;
  std::string summary;
  Statistics statistics;
  std::vector<TimelineEntry> timeline;
  std::vector<SceneVerdict> verdicts;
  bool degraded = false;

  bool operator==(const Report&) const = default;
};

// Maximum rating over the verdicts. Throws kEmptyAnalysis on an empty list.
Rating aggregate_rating(std::span<const SceneVerdict> verdicts);

// A scene counts toward a category once if its rating is above 0+ and the
// category appears in its anchors or label.
Statistics compute_statistics(std::span<const SceneVerdict> verdicts);

// 100 * count / total, rounded to one decimal. Throws kDivisionDomain when
// total_sentences is zero.
std::array<double, 5> category_percentages(const Statistics& stats);

std::string summary_text(const Statistics& stats, Rating overall);

std::string new_file_id();
// UUID-shaped id derived from the document bytes, for reproducible offline runs.
std::string derived_file_id(std::string_view content);

Report build_report(std::string file_id, std::span<const Scene> scenes,
                    std::span<const SceneVerdict> verdicts);

// Recomputes overall rating, statistics, summary, timeline ratings and the
// degraded flag from the current verdicts.
void refresh_report(Report& report);

std::string report_to_json(const Report& report, int indent = 2);
Report report_from_json(std::string_view json);

std::string verdict_to_json(const SceneVerdict& verdict, int indent = -1);
SceneVerdict verdict_from_json(std::string_view json);

}  // namespace qwerty
