#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace qwerty::unicode {

// Conversions assume well-formed input; ingest guarantees valid UTF-8 for
// everything downstream of it.
std::u32string to_utf32(std::string_view utf8);
std::string to_utf8(std::u32string_view utf32);
void append_utf8(std::string& out, char32_t cp);

std::size_t code_point_count(std::string_view utf8);

bool is_letter(char32_t cp);
bool is_upper(char32_t cp);
bool is_lower(char32_t cp);
bool is_cyrillic(char32_t cp);
char32_t to_lower(char32_t cp);

std::string_view trim(std::string_view s);

}  // namespace qwerty::unicode
