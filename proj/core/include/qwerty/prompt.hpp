#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "qwerty/verdict.hpp"

namespace qwerty {

// The fixed system prompt, ending right before the scene-text slot.
std::string_view prompt_preamble();

// Preamble followed by the scene text in the slot.
std::string build_prompt(std::string_view scene_text);

// Extracts the first {"rating", "why", "label"} object from a raw completion,
// tolerating surrounding prose. Throws VerdictParseError.
SceneVerdict parse_verdict(std::string_view raw, std::size_t scene_index);

}  // namespace qwerty
