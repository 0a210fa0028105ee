#include "qwerty/report.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "json.hpp"
#include "qwerty/completion.hpp"
#include "qwerty/error.hpp"

namespace qwerty {

namespace {

using ojson = nlohmann::ordered_json;

std::size_t category_slot(Category c) {
  for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
    if (kAllCategories[i] == c) return i;
  }
  return 0;
}

[[noreturn]] void bad_json(const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, "malformed report JSON: " + what);
}

ojson label_json(const std::optional<Category>& label) {
  return label ? ojson(std::string(to_string(*label))) : ojson(nullptr);
}

std::optional<Category> label_from(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  const auto c = parse_category(j.get<std::string>());
  if (!c) bad_json("unknown category " + j.dump());
  return c;
}

Rating rating_from(const ojson& j) {
  const auto r = parse_rating(j.get<std::string>());
  if (!r) bad_json("unknown rating " + j.dump());
  return *r;
}

ojson to_ojson(const SceneVerdict& v) {
  ojson anchors = ojson::array();
  for (const LexiconMatch& m : v.anchors) {
    anchors.push_back({{"rule_id", m.rule_id},
                       {"category", to_string(m.category)},
                       {"severity", to_string(m.severity)},
                       {"span", {m.span.start, m.span.end}},
                       {"quote", m.quote}});
  }
  return {{"scene_index", v.scene_index},
          {"rating", to_string(v.rating)},
          {"label", label_json(v.label)},
          {"why", v.why},
          {"anchors", std::move(anchors)},
          {"confidence", to_string(v.confidence)},
          {"source", to_string(v.source)},
          {"degraded", v.degraded}};
}

SceneVerdict verdict_from(const ojson& j) {
  SceneVerdict v;
  v.scene_index = j.at("scene_index").get<std::size_t>();
  v.rating = rating_from(j.at("rating"));
  v.label = label_from(j.at("label"));
  v.why = j.at("why").get<std::string>();
  for (const ojson& a : j.at("anchors")) {
    LexiconMatch m;
    m.rule_id = a.at("rule_id").get<std::string>();
    const auto c = parse_category(a.at("category").get<std::string>());
    const auto s = parse_severity(a.at("severity").get<std::string>());
    if (!c || !s) bad_json("bad anchor");
    m.category = *c;
    m.severity = *s;
    m.span.start = a.at("span").at(0).get<std::size_t>();
    m.span.end = a.at("span").at(1).get<std::size_t>();
    m.quote = a.at("quote").get<std::string>();
    v.anchors.push_back(std::move(m));
  }
  const auto conf = parse_confidence(j.at("confidence").get<std::string>());
  const auto src = parse_verdict_source(j.at("source").get<std::string>());
  if (!conf || !src) bad_json("bad confidence or source");
  v.confidence = *conf;
  v.source = *src;
  v.degraded = j.value("degraded", false);
  return v;
}

}  // namespace

std::size_t Statistics::violation_count(Category c) const { return violations[category_slot(c)]; }

Rating aggregate_rating(std::span<const SceneVerdict> verdicts) {
  if (verdicts.empty()) throw Error(ErrorCode::kEmptyAnalysis, "no scene verdicts to aggregate");
  Rating overall = Rating::k0;
  for (const SceneVerdict& v : verdicts) overall = std::max(overall, v.rating);
  return overall;
}

Statistics compute_statistics(std::span<const SceneVerdict> verdicts) {
  Statistics stats;
  stats.total_sentences = verdicts.size();
  for (const SceneVerdict& v : verdicts) {
    if (v.rating == Rating::k0) continue;
    ++stats.problematic_sentences;
    std::set<Category> seen;
    if (v.label) seen.insert(*v.label);
    for (const LexiconMatch& m : v.anchors) seen.insert(m.category);
    for (Category c : seen) ++stats.violations[category_slot(c)];
  }
  return stats;
}

std::array<double, 5> category_percentages(const Statistics& stats) {
  if (stats.total_sentences == 0) {
    throw Error(ErrorCode::kDivisionDomain, "category percentages need at least one scene");
  }
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double pct = 100.0 * static_cast<double>(stats.violations[i]) /
                       static_cast<double>(stats.total_sentences);
    out[i] = std::round(pct * 10.0) / 10.0;
  }
  return out;
}

std::string summary_text(const Statistics& stats, Rating overall) {
  return "Found " + std::to_string(stats.problematic_sentences) + " problematic sentences in " +
         std::to_string(stats.total_sentences) + " analyzed scenes; overall rating " +
         std::string(to_string(overall)) + ".";
}

namespace {

std::string format_uuid4(std::uint64_t hi, std::uint64_t lo) {
  hi = (hi & 0xFFFFFFFFFFFF0FFFull) | 0x0000000000004000ull;  // version 4
  lo = (lo & 0x3FFFFFFFFFFFFFFFull) | 0x8000000000000000ull;  // RFC 4122 variant
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08llx-%04llx-%04llx-%04llx-%012llx",
                static_cast<unsigned long long>(hi >> 32),
                static_cast<unsigned long long>((hi >> 16) & 0xFFFF),
                static_cast<unsigned long long>(hi & 0xFFFF),
                static_cast<unsigned long long>(lo >> 48),
                static_cast<unsigned long long>(lo & 0xFFFFFFFFFFFFull));
  return buf;
}

}  // namespace

std::string new_file_id() {
  thread_local std::mt19937_64 rng{std::random_device{}()};
  const std::uint64_t hi = rng();
  return format_uuid4(hi, rng());
}

std::string derived_file_id(std::string_view content) {
  const std::uint64_t hi = fnv1a64(content);
  std::uint64_t lo = hi + 0x9E3779B97F4A7C15ull;
  lo = (lo ^ (lo >> 30)) * 0xBF58476D1CE4E5B9ull;
  lo = (lo ^ (lo >> 27)) * 0x94D049BB133111EBull;
  return format_uuid4(hi, lo ^ (lo >> 31) ^ content.size());
}

void refresh_report(Report& report) {
  report.overall_rating = aggregate_rating(report.verdicts);
  report.statistics = compute_statistics(report.verdicts);
  report.summary = summary_text(report.statistics, report.overall_rating);
  report.degraded = false;
  for (const SceneVerdict& v : report.verdicts) report.degraded = report.degraded || v.degraded;
  for (std::size_t i = 0; i < report.timeline.size() && i < report.verdicts.size(); ++i) {
    report.timeline[i].rating = report.verdicts[i].rating;
    report.timeline[i].label = report.verdicts[i].label;
  }
}

Report build_report(std::string file_id, std::span<const Scene> scenes,
                    std::span<const SceneVerdict> verdicts) {
  if (scenes.size() != verdicts.size()) {
    throw Error(ErrorCode::kInvalidArgument, "need exactly one verdict per scene");
  }
  Report report;
  report.file_id = file_id.empty() ? new_file_id() : std::move(file_id);
  report.verdicts.assign(verdicts.begin(), verdicts.end());
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    report.timeline.push_back({scenes[i].index, scenes[i].span, scenes[i].heading, verdicts[i].rating,
                               verdicts[i].label});
  }
  refresh_report(report);
  return report;
}

std::string report_to_json(const Report& report, int indent) {
  ojson violations;
  for (Category c : kAllCategories) violations[std::string(to_string(c))] = report.statistics.violation_count(c);

  ojson j;
  j["file_id"] = report.file_id;
  j["overall_rating"] = to_string(report.overall_rating);
  j["summary"] = report.summary;
  j["statistics"] = {{"total_sentences", report.statistics.total_sentences},
                     {"problematic_sentences", report.statistics.problematic_sentences},
                     {"violations", std::move(violations)}};
  if (report.statistics.total_sentences > 0) {
    const auto pct = category_percentages(report.statistics);
    ojson p;
    for (std::size_t i = 0; i < kAllCategories.size(); ++i) p[std::string(to_string(kAllCategories[i]))] = pct[i];
    j["category_percentages"] = std::move(p);
  }
  ojson timeline = ojson::array();
  for (const TimelineEntry& t : report.timeline) {
    timeline.push_back({{"scene_index", t.scene_index},
                        {"start_line", t.span.start_line},
                        {"end_line", t.span.end_line},
                        {"heading", t.heading},
                        {"rating", to_string(t.rating)},
                        {"label", label_json(t.label)}});
  }
  j["timeline"] = std::move(timeline);
  ojson verdicts = ojson::array();
  for (const SceneVerdict& v : report.verdicts) verdicts.push_back(to_ojson(v));
  j["verdicts"] = std::move(verdicts);
  j["degraded"] = report.degraded;
  return j.dump(indent);
}

Report report_from_json(std::string_view text) {
  const ojson j = ojson::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad_json("not an object");
  try {
    Report r;
    r.file_id = j.at("file_id").get<std::string>();
    r.overall_rating = rating_from(j.at("overall_rating"));
    r.summary = j.at("summary").get<std::string>();
    const ojson& s = j.at("statistics");
    r.statistics.total_sentences = s.at("total_sentences").get<std::size_t>();
    r.statistics.problematic_sentences = s.at("problematic_sentences").get<std::size_t>();
    for (std::size_t i = 0; i < kAllCategories.size(); ++i) {
      r.statistics.violations[i] =
          s.at("violations").at(std::string(to_string(kAllCategories[i]))).get<std::size_t>();
    }
    for (const ojson& t : j.at("timeline")) {
      TimelineEntry e;
      e.scene_index = t.at("scene_index").get<std::size_t>();
      e.span = {t.at("start_line").get<std::size_t>(), t.at("end_line").get<std::size_t>()};
      e.heading = t.at("heading").get<std::string>();
      e.rating = rating_from(t.at("rating"));
      e.label = label_from(t.at("label"));
      r.timeline.push_back(std::move(e));
    }
    for (const ojson& v : j.at("verdicts")) r.verdicts.push_back(verdict_from(v));
    r.degraded = j.value("degraded", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    bad_json(e.what());
  }
}

std::string verdict_to_json(const SceneVerdict& verdict, int indent) {
  return to_ojson(verdict).dump(indent);
}

SceneVerdict verdict_from_json(std::string_view text) {
  const ojson j = ojson::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad_json("verdict is not an object");
  try {
    return verdict_from(j);
  } catch (const nlohmann::json::exception& e) {
    bad_json(e.what());
  }
}

}  // namespace qwerty
