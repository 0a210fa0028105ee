#include "qwerty/segmenter.hpp"

#include <boost/regex/icu.hpp>

#include "qwerty/error.hpp"
#include "qwerty/unicode.hpp"

namespace qwerty {

namespace {

const boost::u32regex& heading_keyword_regex() {
  // Optional scene number, then INT./EXT. style prefixes and the Russian
  // ИНТ./НАТ./ПАВ. conventions.
  static const boost::u32regex re = boost::make_u32regex(
      std::u32string(
          U"^\\s*(?:\\d+[A-Za-zА-Яа-я]?[.)]?\\s*)?"
          U"(?:INT\\.?\\s*/\\s*EXT\\b|EXT\\.?\\s*/\\s*INT\\b|I/E\\b|INT\\.|EXT\\."
          U"|ИНТ\\.?\\s*/\\s*НАТ|НАТ\\.?\\s*/\\s*ИНТ|ИНТ\\.|НАТ\\.|ПАВ\\.)"),
      boost::regex::perl | boost::regex::icase);
  return re;
}

bool has_separator(std::u32string_view s) {
  return s.find(U'-') != std::u32string_view::npos || s.find(U'—') != std::u32string_view::npos ||
         s.find(U'–') != std::u32string_view::npos;
}

bool caps_heading(std::u32string_view line, const HeadingOptions& options) {
  if (line.size() > options.max_caps_length) return false;
  std::size_t letters = 0;
  std::size_t upper = 0;
  for (char32_t cp : line) {
    if (!unicode::is_letter(cp)) continue;
    ++letters;
    if (unicode::is_upper(cp)) ++upper;
  }
  if (letters == 0) return false;
  if (static_cast<double>(upper) < options.min_upper_ratio * static_cast<double>(letters)) {
    return false;
  }
  return has_separator(line);
}

std::string join_lines(const std::vector<std::string>& lines, std::size_t from) {
  std::string out;
  for (std::size_t i = from; i < lines.size(); ++i) {
    if (i > from) out += '\n';
    out += lines[i];
  }
  return out;
}

}  // namespace

std::string Scene::text() const {
  if (heading.empty()) return body;
  if (line_count() == 1) return heading;
  return heading + "\n" + body;
}

std::vector<std::string> Scene::lines() const {
  std::vector<std::string> out;
  std::size_t body_lines = line_count();
  if (!heading.empty()) {
    out.push_back(heading);
    --body_lines;
  }
  if (body_lines == 0) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < body_lines; ++i) {
    const std::size_t nl = i + 1 < body_lines ? body.find('\n', start) : std::string::npos;
    out.push_back(body.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    start = nl == std::string::npos ? body.size() : nl + 1;
  }
  return out;
}

bool is_scene_heading(std::string_view line, bool is_style_heading, const HeadingOptions& options) {
  const std::string_view trimmed = unicode::trim(line);
  if (trimmed.empty()) return false;
  if (is_style_heading) return true;
  const std::u32string text = unicode::to_utf32(trimmed);
  boost::match_results<std::u32string::const_iterator> m;
  if (boost::u32regex_search(text.cbegin(), text.cend(), m, heading_keyword_regex())) return true;
  return options.caps_rule && caps_heading(text, options);
}

Scene make_scene(std::size_t index, std::string heading, std::vector<std::string> body_lines,
                 std::size_t start_line) {
  Scene scene;
  scene.index = index;
  const std::size_t count = body_lines.size() + (heading.empty() ? 0 : 1);
  scene.heading = std::move(heading);
  scene.body = join_lines(body_lines, 0);
  scene.span = {start_line, start_line + (count == 0 ? 0 : count - 1)};
  scene.token_estimate = estimate_tokens(scene.text());
  return scene;
}

std::vector<Scene> segment(const DecodedDocument& doc, const SegmenterOptions& options) {
  HeadingOptions heading_options = options.heading;
  switch (options.caps_rule) {
    case CapsRule::kOn: heading_options.caps_rule = true; break;
    case CapsRule::kOff: heading_options.caps_rule = false; break;
    case CapsRule::kAuto: {
      // Style-tagged documents carry authoritative headings; the fuzzy
      // capitalization rule would only add dialog false positives there.
      bool any_style = false;
      for (bool b : doc.style_heading) any_style = any_style || b;
      heading_options.caps_rule = !any_style;
      break;
    }
  }

  std::vector<Scene> scenes;
  std::string heading;
  std::vector<std::string> body;
  std::size_t start = 0;
  bool open = false;

  auto flush = [&] {
    if (open) scenes.push_back(make_scene(scenes.size(), std::move(heading), std::move(body), start));
    heading.clear();
    body.clear();
    open = false;
  };

  for (std::size_t i = 0; i < doc.lines.size(); ++i) {
    const bool style = i < doc.style_heading.size() && doc.style_heading[i];
    if (is_scene_heading(doc.lines[i], style, heading_options)) {
      flush();
      heading = doc.lines[i];
      start = i;
      open = true;
    } else {
      if (!open) {
        start = i;
        open = true;
      }
      body.push_back(doc.lines[i]);
    }
  }
  flush();
  if (scenes.empty()) scenes.push_back(make_scene(0, {}, {std::string()}, 0));
  return scenes;
}

std::vector<std::size_t> scene_boundaries(const std::vector<Scene>& scenes) {
  std::vector<std::size_t> out;
  out.reserve(scenes.size());
  for (const Scene& s : scenes) out.push_back(s.span.start_line);
  return out;
}

std::size_t estimate_tokens(std::string_view text) {
  return (unicode::code_point_count(text) + kCharsPerToken - 1) / kCharsPerToken;
}

void validate(const WindowBudget& budget) {
  if (budget.max_tokens == 0 || budget.overlap_tokens >= budget.max_tokens) {
    throw Error(ErrorCode::kConfigError,
                "window budget requires max_tokens > overlap_tokens >= 0 (got max=" +
                    std::to_string(budget.max_tokens) +
                    ", overlap=" + std::to_string(budget.overlap_tokens) + ")");
  }
}

std::vector<SceneWindow> window_scene(const Scene& scene, const WindowBudget& budget) {
  validate(budget);
  const std::string text = scene.text();
  if (scene.token_estimate <= budget.max_tokens) {
    return {SceneWindow{scene.index, 0, text, scene.token_estimate, 0,
                        unicode::code_point_count(text)}};
  }
  const std::u32string chars = unicode::to_utf32(text);
  const std::size_t width = budget.max_tokens * kCharsPerToken;
  const std::size_t stride = (budget.max_tokens - budget.overlap_tokens) * kCharsPerToken;

  std::vector<SceneWindow> windows;
  for (std::size_t begin = 0; begin < chars.size(); begin += stride) {
    const std::size_t end = std::min(begin + width, chars.size());
    SceneWindow w;
    w.scene_index = scene.index;
    w.window_index = windows.size();
    w.text = unicode::to_utf8(std::u32string_view(chars).substr(begin, end - begin));
    w.token_count = estimate_tokens(w.text);
    w.char_begin = begin;
    w.char_end = end;
    windows.push_back(std::move(w));
  }
  return windows;
}

}  // namespace qwerty
