#include <iconv.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "qwerty/error.hpp"
#include "qwerty/ingest.hpp"
#include "qwerty/unicode.hpp"

namespace qwerty {

namespace {

class IconvHandle {
 public:
  IconvHandle(const char* to, const char* from) : cd_(iconv_open(to, from)) {
    if (cd_ == reinterpret_cast<iconv_t>(-1)) {
      throw Error(ErrorCode::kConfigError,
                  std::string("iconv cannot convert ") + from + " to " + to);
    }
  }
  ~IconvHandle() { iconv_close(cd_); }
  IconvHandle(const IconvHandle&) = delete;
  IconvHandle& operator=(const IconvHandle&) = delete;

  iconv_t get() const { return cd_; }
  void reset() const { iconv(cd_, nullptr, nullptr, nullptr, nullptr); }

 private:
  iconv_t cd_;
};

const char* iconv_name(EncodingId id, bool big_endian) {
  switch (id) {
    case EncodingId::kUtf8: return "UTF-8";
    case EncodingId::kUtf16: return big_endian ? "UTF-16BE" : "UTF-16LE";
    case EncodingId::kCp1251: return "CP1251";
    case EncodingId::kKoi8r: return "KOI8-R";
    case EncodingId::kIso88595: return "ISO-8859-5";
    case EncodingId::kMacRoman: return "MACINTOSH";
    case EncodingId::kAscii: return "ASCII";
    case EncodingId::kDocxNative: return "UTF-8";
  }
  return "UTF-8";
}

struct Decoded {
  std::u32string text;
  std::size_t replacements = 0;
  // For each output code point, whether its source byte was >= 0x80
  // (single-byte encodings only).
  std::vector<bool> from_high_byte;
};

bool is_disallowed_control(char32_t cp) {
  if (cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v') return false;
  return cp < 0x20 || cp == 0x7F || (cp >= 0x80 && cp <= 0x9F);
}

// error=replace: every unmappable byte becomes U+FFFD and decoding resumes at
// the next byte. Control characters other than whitespace are treated as
// unmappable.
Decoded decode_bytes(std::span<const std::uint8_t> bytes, EncodingId id, bool big_endian) {
  Decoded out;
  out.text.reserve(bytes.size());
  const bool single_byte = id == EncodingId::kCp1251 || id == EncodingId::kKoi8r ||
                           id == EncodingId::kIso88595 || id == EncodingId::kMacRoman ||
                           id == EncodingId::kAscii;
  IconvHandle cd("UTF-32LE", iconv_name(id, big_endian));

  std::vector<char> in(bytes.begin(), bytes.end());
  std::vector<char> buf(4 * (bytes.size() + 4));
  char* src = in.data();
  std::size_t src_left = in.size();

  auto flush = [&](char* dst_begin, char* dst_end, const char* src_begin, const char* src_end) {
    const std::size_t produced = static_cast<std::size_t>(dst_end - dst_begin) / 4;
    for (std::size_t k = 0; k < produced; ++k) {
      char32_t cp;
      std::memcpy(&cp, dst_begin + 4 * k, 4);
      if (is_disallowed_control(cp)) {
        cp = 0xFFFD;
        ++out.replacements;
      }
      out.text.push_back(cp);
      if (single_byte) {
        out.from_high_byte.push_back(static_cast<unsigned char>(src_begin[k]) >= 0x80);
      }
    }
    (void)src_end;
  };

  while (src_left > 0) {
    char* dst = buf.data();
    std::size_t dst_left = buf.size();
    char* src_before = src;
    const std::size_t rc = iconv(cd.get(), &src, &src_left, &dst, &dst_left);
    flush(buf.data(), dst, src_before, src);
    if (rc == static_cast<std::size_t>(-1)) {
      if (errno == EILSEQ || errno == EINVAL) {
        out.text.push_back(0xFFFD);
        if (single_byte) out.from_high_byte.push_back(true);
        ++out.replacements;
        ++src;
        --src_left;
        cd.reset();
      } else if (errno != E2BIG) {
        throw Error(ErrorCode::kInvalidArgument, "iconv failure while decoding");
      }
    }
  }
  return out;
}

// Approximate Russian letter frequencies (percent), а..я then ё.
constexpr double kRussianFrequency[33] = {
    8.01, 1.59, 4.54, 1.70, 2.98, 8.45, 0.94, 1.65, 7.35, 1.21, 3.49, 4.40, 3.21, 6.70, 10.97, 2.81,
    4.73, 5.47, 6.26, 2.62, 0.26, 0.97, 0.48, 1.44, 0.73, 0.36, 0.04, 1.90, 1.74, 0.32, 0.64, 2.01,
    0.04};

bool is_russian_lower(char32_t cp) { return (cp >= 0x0430 && cp <= 0x044F) || cp == 0x0451; }

double russian_log_frequency(char32_t lower) {
  const std::size_t idx = lower == 0x0451 ? 32 : static_cast<std::size_t>(lower - 0x0430);
  return std::log(kRussianFrequency[idx]);
}

bool is_latin_letter(char32_t cp) {
  return (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z') || (cp >= 0x00C0 && cp <= 0x024F);
}

bool is_typographic(char32_t cp) {
  switch (cp) {
    case 0x00AB: case 0x00BB: case 0x2014: case 0x2013: case 0x2026: case 0x2116:
    case 0x201C: case 0x201D: case 0x201E: case 0x2018: case 0x2019: case 0x2022:
    case 0x00B7: case 0x00A0: case 0x00A9:
      return true;
    default:
      return false;
  }
}

struct Plausibility {
  bool acceptable = false;
  double score = 0.0;
};

// Scores a single-byte Cyrillic decoding. Wrong code pages produce
// mixed-script words, case flips inside words, rare letters and stray
// symbols; each costs points. Rejects outright when the Cyrillic share of
// letters is under the threshold or a word mixes Latin and Cyrillic.
Plausibility score_cyrillic(const Decoded& d, double min_ratio) {
  Plausibility result;
  std::size_t letters = 0;
  std::size_t cyrillic = 0;
  double score = 0.0;

  bool in_word = false;
  bool word_latin = false;
  bool word_cyrillic = false;
  bool prev_lower = false;

  for (std::size_t i = 0; i < d.text.size(); ++i) {
    const char32_t cp = d.text[i];
    if (unicode::is_letter(cp)) {
      ++letters;
      if (!in_word) {
        in_word = true;
        word_latin = word_cyrillic = false;
        prev_lower = false;
      }
      if (unicode::is_cyrillic(cp)) {
        ++cyrillic;
        word_cyrillic = true;
        const char32_t lower = unicode::to_lower(cp);
        score += is_russian_lower(lower) ? russian_log_frequency(lower) : -12.0;
      } else if (is_latin_letter(cp)) {
        word_latin = true;
      }
      if (word_latin && word_cyrillic) return result;
      const bool upper = unicode::is_upper(cp);
      if (upper && prev_lower) score -= 6.0;
      prev_lower = unicode::is_lower(cp);
    } else {
      in_word = false;
      if (i < d.from_high_byte.size() && d.from_high_byte[i] && !is_typographic(cp)) {
        score -= 8.0;
      }
    }
  }
  if (letters == 0) return result;
  const double ratio = static_cast<double>(cyrillic) / static_cast<double>(letters);
  if (ratio < min_ratio) return result;
  result.acceptable = true;
  result.score = score;
  return result;
}

}  // namespace

std::string_view to_string(EncodingId id) {
  switch (id) {
    case EncodingId::kUtf8: return "utf-8";
    case EncodingId::kUtf16: return "utf-16";
    case EncodingId::kCp1251: return "cp1251";
    case EncodingId::kKoi8r: return "koi8-r";
    case EncodingId::kIso88595: return "iso-8859-5";
    case EncodingId::kMacRoman: return "macroman";
    case EncodingId::kAscii: return "ascii";
    case EncodingId::kDocxNative: return "docx-native";
  }
  return "utf-8";
}

std::optional<EncodingId> parse_encoding_id(std::string_view text) {
  for (EncodingId id : kEncodingCascade) {
    if (to_string(id) == text) return id;
  }
  if (text == "docx-native") return EncodingId::kDocxNative;
  return std::nullopt;
}

DetectionResult detect_encoding_ex(std::span<const std::uint8_t> bytes,
                                   const DetectionOptions& options) {
  if (options.forced) {
    DetectionResult forced{*options.forced, 0, false};
    if (*options.forced == EncodingId::kUtf16) {
      if (bytes.size() >= 2 && bytes[0] == 0xFE && bytes[1] == 0xFF) {
        forced.bom_length = 2;
        forced.big_endian = true;
      } else if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xFE) {
        forced.bom_length = 2;
      }
    } else if (*options.forced == EncodingId::kUtf8 && bytes.size() >= 3 && bytes[0] == 0xEF &&
               bytes[1] == 0xBB && bytes[2] == 0xBF) {
      forced.bom_length = 3;
    }
    return forced;
  }

  // A byte-order mark wins before any cascade step runs.
  if (bytes.size() >= 3 && bytes[0] == 0xEF && bytes[1] == 0xBB && bytes[2] == 0xBF) {
    return {EncodingId::kUtf8, 3, false};
  }
  if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xFE) {
    return {EncodingId::kUtf16, 2, false};
  }
  if (bytes.size() >= 2 && bytes[0] == 0xFE && bytes[1] == 0xFF) {
    return {EncodingId::kUtf16, 2, true};
  }

  if (decode_bytes(bytes, EncodingId::kUtf8, false).replacements == 0) {
    return {EncodingId::kUtf8, 0, false};
  }

  // UTF-16 is recognized by BOM only.

  // The three Cyrillic code pages accept almost any byte sequence, so the
  // first clean decode is not enough; the most plausible one wins and
  // cascade order breaks ties.
  std::optional<EncodingId> best;
  double best_score = 0.0;
  for (EncodingId id : {EncodingId::kCp1251, EncodingId::kKoi8r, EncodingId::kIso88595}) {
    const Decoded d = decode_bytes(bytes, id, false);
    if (d.replacements != 0) continue;
    const Plausibility p = score_cyrillic(d, options.cyrillic_ratio);
    if (!p.acceptable) continue;
    if (!best || p.score > best_score) {
      best = id;
      best_score = p.score;
    }
  }
  if (best) return {*best, 0, false};

  for (EncodingId id : {EncodingId::kMacRoman, EncodingId::kAscii}) {
    if (decode_bytes(bytes, id, false).replacements == 0) return {id, 0, false};
  }
  return {EncodingId::kAscii, 0, false};
}

EncodingId detect_encoding(std::span<const std::uint8_t> bytes, const DetectionOptions& options) {
  return detect_encoding_ex(bytes, options).encoding;
}

DecodedDocument make_decoded(std::string_view utf8, EncodingId encoding, bool had_replacements) {
  DecodedDocument doc;
  doc.detected_encoding = encoding;
  doc.had_replacements = had_replacements;
  doc.text.reserve(utf8.size());
  for (std::size_t i = 0; i < utf8.size(); ++i) {
    if (utf8[i] == '\r') {
      doc.text.push_back('\n');
      if (i + 1 < utf8.size() && utf8[i + 1] == '\n') ++i;
    } else {
      doc.text.push_back(utf8[i]);
    }
  }
  if (!doc.text.empty() && doc.text.back() == '\n') doc.text.pop_back();

  std::size_t start = 0;
  while (true) {
    const std::size_t nl = doc.text.find('\n', start);
    if (nl == std::string::npos) {
      doc.lines.emplace_back(doc.text.substr(start));
      break;
    }
    doc.lines.emplace_back(doc.text.substr(start, nl - start));
    start = nl + 1;
  }
  return doc;
}

DecodedDocument decode_text(const RawDocument& doc, const DetectionOptions& options) {
  if (doc.bytes.empty()) {
    throw Error(ErrorCode::kEmptyDocument, "document '" + doc.filename + "' is empty");
  }
  const DetectionResult detected = detect_encoding_ex(doc.bytes, options);
  const std::span<const std::uint8_t> payload =
      std::span<const std::uint8_t>(doc.bytes).subspan(detected.bom_length);
  const Decoded d = decode_bytes(payload, detected.encoding, detected.big_endian);
  return make_decoded(unicode::to_utf8(d.text), detected.encoding, d.replacements != 0);
}

std::vector<std::uint8_t> encode_text(std::string_view utf8, EncodingId encoding) {
  if (encoding == EncodingId::kDocxNative) encoding = EncodingId::kUtf8;
  IconvHandle cd(iconv_name(encoding, false), "UTF-8");
  std::vector<char> in(utf8.begin(), utf8.end());
  std::vector<char> buf(4 * utf8.size() + 8);
  char* src = in.data();
  std::size_t src_left = in.size();
  char* dst = buf.data();
  std::size_t dst_left = buf.size();
  if (iconv(cd.get(), &src, &src_left, &dst, &dst_left) == static_cast<std::size_t>(-1)) {
    throw Error(ErrorCode::kInvalidArgument,
                "text is not representable in " + std::string(to_string(encoding)));
  }
  std::vector<std::uint8_t> out;
  if (encoding == EncodingId::kUtf16) {
    out = {0xFF, 0xFE};
  }
  out.insert(out.end(), buf.data(), dst);
  return out;
}

}  // namespace qwerty
