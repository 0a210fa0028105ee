#include <algorithm>
#include <cctype>
#include <string>

#include "qwerty/error.hpp"
#include "qwerty/ingest.hpp"

namespace qwerty {

std::optional<FormatHint> parse_format_hint(std::string_view text) {
  if (text == "auto") return FormatHint::kAuto;
  if (text == "txt") return FormatHint::kTxt;
  if (text == "docx") return FormatHint::kDocx;
  if (text == "pdf") return FormatHint::kPdf;
  return std::nullopt;
}

FormatHint resolve_format(const RawDocument& doc) {
  if (doc.format_hint != FormatHint::kAuto) return doc.format_hint;
  const auto dot = doc.filename.find_last_of('.');
  if (dot == std::string::npos) return FormatHint::kTxt;
  std::string ext = doc.filename.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == "docx") return FormatHint::kDocx;
  if (ext == "pdf") return FormatHint::kPdf;
  return FormatHint::kTxt;
}

DecodedDocument ingest(const RawDocument& doc, const DetectionOptions& options) {
  switch (resolve_format(doc)) {
    case FormatHint::kDocx:
      return parse_docx(doc);
    case FormatHint::kPdf:
      throw Error(ErrorCode::kUnsupportedFormat,
                  "PDF input is not supported; extract the text first and submit it as .txt");
    case FormatHint::kAuto:
    case FormatHint::kTxt:
      break;
  }
  return decode_text(doc, options);
}

}  // namespace qwerty
