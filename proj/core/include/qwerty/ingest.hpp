#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qwerty {

enum class FormatHint { kAuto, kTxt, kDocx, kPdf };

std::optional<FormatHint> parse_format_hint(std::string_view text);

struct RawDocument {
  std::vector<std::uint8_t> bytes;
  std::string filename;
  FormatHint format_hint = FormatHint::kAuto;
};

// Resolves kAuto from the filename extension (.docx -> docx, .pdf -> pdf,
// everything else -> txt).
FormatHint resolve_format(const RawDocument& doc);

enum class EncodingId {
  kUtf8,
  kUtf16,
  kCp1251,
  kKoi8r,
  kIso88595,
  kMacRoman,
  kAscii,
  kDocxNative,
};

// Cascade order for plain-text detection.
inline constexpr std::array<EncodingId, 7> kEncodingCascade = {
    EncodingId::kUtf8,     EncodingId::kUtf16,    EncodingId::kCp1251,
    EncodingId::kKoi8r,    EncodingId::kIso88595, EncodingId::kMacRoman,
    EncodingId::kAscii};

std::string_view to_string(EncodingId id);
std::optional<EncodingId> parse_encoding_id(std::string_view text);

struct DecodedDocument {
  std::string text;                 // UTF-8, '\n' line breaks, no final terminator
  std::vector<std::string> lines;   // text split on '\n'
  EncodingId detected_encoding = EncodingId::kUtf8;
  bool had_replacements = false;
  // Per-line flag set by the docx reader for paragraphs whose style name
  // contains "Heading". Empty for plain text.
  std::vector<bool> style_heading;

  bool has_style_info() const { return !style_heading.empty(); }
};

struct DetectionOptions {
  // Minimum share of letters in the Cyrillic block for a single-byte
  // Cyrillic code page to be accepted.
  double cyrillic_ratio = 0.30;
  // Skip detection and decode with this encoding (replacing unmappable bytes).
  std::optional<EncodingId> forced;
};

struct DetectionResult {
  EncodingId encoding;
  std::size_t bom_length = 0;
  bool big_endian = false;  // utf-16 only
};

DetectionResult detect_encoding_ex(std::span<const std::uint8_t> bytes,
                                   const DetectionOptions& options = {});

// Never fails on non-empty input; falls back to ascii when nothing in the
// cascade decodes cleanly.
EncodingId detect_encoding(std::span<const std::uint8_t> bytes,
                           const DetectionOptions& options = {});

DecodedDocument decode_text(const RawDocument& doc, const DetectionOptions& options = {});

DecodedDocument parse_docx(const RawDocument& doc);

// Dispatches on the resolved format. PDF input is rejected with
// kUnsupportedFormat; callers are expected to supply extracted text instead.
DecodedDocument ingest(const RawDocument& doc, const DetectionOptions& options = {});

// Encodes UTF-8 text into one of the supported byte encodings. Utf16 output
// is little-endian with a BOM. Throws kInvalidArgument if a character is not
// representable.
std::vector<std::uint8_t> encode_text(std::string_view utf8, EncodingId encoding);

// Builds a DecodedDocument from already-decoded UTF-8 (line endings are
// normalized).
DecodedDocument make_decoded(std::string_view utf8, EncodingId encoding,
                             bool had_replacements = false);

}  // namespace qwerty
