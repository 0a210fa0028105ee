#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qwerty/ingest.hpp"

namespace qwerty {

struct LineSpan {
  std::size_t start_line = 0;
  std::size_t end_line = 0;  // inclusive

  bool operator==(const LineSpan&) const = default;
};

struct Scene {
  std::size_t index = 0;
  std::string heading;  // empty for a preamble scene
  std::string body;     // lines after the heading joined with '\n'
  LineSpan span;
  std::size_t token_estimate = 0;

  // Text handed to the lexicon and analyzers: heading and body separated by
  // a newline. Lexicon spans are code-point offsets into this string.
  std::string text() const;
  std::size_t line_count() const { return span.end_line - span.start_line + 1; }
  // Reconstructs the source lines covered by span.
  std::vector<std::string> lines() const;
};

struct SceneWindow {
  std::size_t scene_index = 0;
  std::size_t window_index = 0;
  std::string text;
  std::size_t token_count = 0;
  // Code-point range of the scene text covered by this window.
  std::size_t char_begin = 0;
  std::size_t char_end = 0;
};

enum class CapsRule {
  kAuto,  // on for plain text, off when the document carries style headings
  kOn,
  kOff,
};

struct HeadingOptions {
  std::size_t max_caps_length = 60;
  double min_upper_ratio = 0.80;
  bool caps_rule = true;
};

struct SegmenterOptions {
  HeadingOptions heading;
  CapsRule caps_rule = CapsRule::kAuto;
};

bool is_scene_heading(std::string_view line, bool is_style_heading,
                      const HeadingOptions& options = {});

std::vector<Scene> segment(const DecodedDocument& doc, const SegmenterOptions& options = {});

// Start line of every scene, in the evaluation boundary format.
std::vector<std::size_t> scene_boundaries(const std::vector<Scene>& scenes);

// ceil(code points / 4)
std::size_t estimate_tokens(std::string_view text);

inline constexpr std::size_t kCharsPerToken = 4;

struct WindowBudget {
  std::size_t max_tokens = 1800;
  std::size_t overlap_tokens = 200;
};

// Throws kConfigError unless max_tokens > overlap_tokens.
void validate(const WindowBudget& budget);

std::vector<SceneWindow> window_scene(const Scene& scene, const WindowBudget& budget);

// Fills heading/body/span/token_estimate from a list of lines.
Scene make_scene(std::size_t index, std::string heading, std::vector<std::string> body_lines,
                 std::size_t start_line);

}  // namespace qwerty
