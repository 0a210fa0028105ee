#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "qwerty/error.hpp"
#include "qwerty/ingest.hpp"

namespace qwerty {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::kMalformedDocx, "malformed docx: " + what);
}

std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 2 > b.size()) malformed("truncated archive");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 4 > b.size()) malformed("truncated archive");
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

struct ZipEntry {
  std::uint16_t method = 0;
  std::uint32_t crc = 0;
  std::uint32_t compressed_size = 0;
  std::uint32_t size = 0;
  std::uint32_t local_offset = 0;
};

// Reads the central directory of a (non-zip64) archive.
std::map<std::string, ZipEntry> read_directory(std::span<const std::uint8_t> bytes) {
  constexpr std::uint32_t kEndSig = 0x06054b50;
  constexpr std::uint32_t kCentralSig = 0x02014b50;
  if (bytes.size() < 22) malformed("not a zip archive");

  std::optional<std::size_t> eocd;
  const std::size_t lowest = bytes.size() > 22 + 0xFFFF ? bytes.size() - 22 - 0xFFFF : 0;
  for (std::size_t pos = bytes.size() - 22 + 1; pos-- > lowest;) {
    if (le32(bytes, pos) == kEndSig) {
      eocd = pos;
      break;
    }
  }
  if (!eocd) malformed("end of central directory not found");

  const std::uint16_t count = le16(bytes, *eocd + 10);
  std::size_t pos = le32(bytes, *eocd + 16);
  std::map<std::string, ZipEntry> entries;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (le32(bytes, pos) != kCentralSig) malformed("bad central directory entry");
    ZipEntry e;
    e.method = le16(bytes, pos + 10);
    e.crc = le32(bytes, pos + 16);
    e.compressed_size = le32(bytes, pos + 20);
    e.size = le32(bytes, pos + 24);
    const std::uint16_t name_len = le16(bytes, pos + 28);
    const std::uint16_t extra_len = le16(bytes, pos + 30);
    const std::uint16_t comment_len = le16(bytes, pos + 32);
    e.local_offset = le32(bytes, pos + 42);
    if (pos + 46 + name_len > bytes.size()) malformed("truncated central directory");
    std::string name(reinterpret_cast<const char*>(bytes.data() + pos + 46), name_len);
    if (e.size == 0xFFFFFFFFu || e.compressed_size == 0xFFFFFFFFu) malformed("zip64 unsupported");
    entries.emplace(std::move(name), e);
    pos += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

std::string extract(std::span<const std::uint8_t> bytes, const ZipEntry& e) {
  constexpr std::uint32_t kLocalSig = 0x04034b50;
  if (le32(bytes, e.local_offset) != kLocalSig) malformed("bad local header");
  const std::size_t data = e.local_offset + 30 + le16(bytes, e.local_offset + 26) +
                           le16(bytes, e.local_offset + 28);
  if (data + e.compressed_size > bytes.size()) malformed("entry data out of range");
  const std::uint8_t* src = bytes.data() + data;

  std::string out;
  if (e.method == 0) {
    out.assign(reinterpret_cast<const char*>(src), e.compressed_size);
  } else if (e.method == 8) {
    out.resize(e.size);
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) malformed("inflate init failed");
    zs.next_in = const_cast<Bytef*>(src);
    zs.avail_in = e.compressed_size;
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != e.size) malformed("corrupt deflate stream");
  } else {
    malformed("unsupported compression method " + std::to_string(e.method));
  }
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size()));
  if (crc != e.crc) malformed("crc mismatch");
  return out;
}

std::string_view local_name(std::string_view qname) {
  const auto colon = qname.find(':');
  return colon == std::string_view::npos ? qname : qname.substr(colon + 1);
}

std::optional<std::string> attr(const pt::ptree& node, std::string_view local) {
  const auto attrs = node.get_child_optional("<xmlattr>");
  if (!attrs) return std::nullopt;
  for (const auto& [key, value] : *attrs) {
    if (local_name(key) == local) return value.data();
  }
  return std::nullopt;
}

const pt::ptree* child(const pt::ptree& node, std::string_view local) {
  for (const auto& [key, value] : node) {
    if (local_name(key) == local) return &value;
  }
  return nullptr;
}

pt::ptree parse_xml(const std::string& xml, const char* part) {
  pt::ptree tree;
  std::istringstream in(xml);
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    malformed(std::string(part) + ": " + e.what());
  }
  return tree;
}

bool is_heading_style(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return lower.find("heading") != std::string::npos ||
         s.find("Заголовок") != std::string_view::npos ||
         s.find("заголовок") != std::string_view::npos;
}

// style id -> display name
std::map<std::string, std::string> read_styles(const std::string& xml) {
  std::map<std::string, std::string> styles;
  const pt::ptree tree = parse_xml(xml, "word/styles.xml");
  const pt::ptree* root = child(tree, "styles");
  if (!root) return styles;
  for (const auto& [key, style] : *root) {
    if (local_name(key) != "style") continue;
    const auto id = attr(style, "styleId");
    if (!id) continue;
    std::string name = *id;
    if (const pt::ptree* n = child(style, "name")) {
      if (auto v = attr(*n, "val")) name = *v;
    }
    styles.emplace(*id, std::move(name));
  }
  return styles;
}

void collect_text(const pt::ptree& node, std::string& out) {
  for (const auto& [key, value] : node) {
    const std::string_view name = local_name(key);
    if (name == "t") {
      out += value.data();
    } else if (name == "tab") {
      out += '\t';
    } else if (name == "br" || name == "cr") {
      out += ' ';
    } else if (name == "pPr" || name == "<xmlattr>" || name == "p") {
      continue;
    } else {
      collect_text(value, out);
    }
  }
}

struct Paragraph {
  std::string text;
  bool heading = false;
};

void collect_paragraphs(const pt::ptree& node, const std::map<std::string, std::string>& styles,
                        std::vector<Paragraph>& out) {
  for (const auto& [key, value] : node) {
    const std::string_view name = local_name(key);
    if (name == "p") {
      Paragraph p;
      collect_text(value, p.text);
      if (const pt::ptree* ppr = child(value, "pPr")) {
        if (const pt::ptree* ps = child(*ppr, "pStyle")) {
          if (auto id = attr(*ps, "val")) {
            const auto it = styles.find(*id);
            p.heading = is_heading_style(*id) || (it != styles.end() && is_heading_style(it->second));
          }
        }
      }
      out.push_back(std::move(p));
    } else if (name != "<xmlattr>") {
      collect_paragraphs(value, styles, out);
    }
  }
}

}  // namespace

DecodedDocument parse_docx(const RawDocument& doc) {
  if (doc.bytes.empty()) {
    throw Error(ErrorCode::kEmptyDocument, "document '" + doc.filename + "' is empty");
  }
  const std::span<const std::uint8_t> bytes(doc.bytes);
  const auto entries = read_directory(bytes);
  const auto main = entries.find("word/document.xml");
  if (main == entries.end()) malformed("missing word/document.xml");

  std::map<std::string, std::string> styles;
  if (const auto st = entries.find("word/styles.xml"); st != entries.end()) {
    styles = read_styles(extract(bytes, st->second));
  }

  const pt::ptree tree = parse_xml(extract(bytes, main->second), "word/document.xml");
  const pt::ptree* document = child(tree, "document");
  if (!document) malformed("word/document.xml has no document element");
  const pt::ptree* body = child(*document, "body");
  if (!body) malformed("word/document.xml has no body");

  std::vector<Paragraph> paragraphs;
  collect_paragraphs(*body, styles, paragraphs);

  DecodedDocument out;
  out.detected_encoding = EncodingId::kDocxNative;
  if (paragraphs.empty()) paragraphs.push_back({});
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    if (i) out.text += '\n';
    // Paragraph breaks are the only line breaks.
    std::replace(paragraphs[i].text.begin(), paragraphs[i].text.end(), '\n', ' ');
    std::replace(paragraphs[i].text.begin(), paragraphs[i].text.end(), '\r', ' ');
    out.text += paragraphs[i].text;
    out.lines.push_back(paragraphs[i].text);
    out.style_heading.push_back(paragraphs[i].heading);
  }
  return out;
}

}  // namespace qwerty
