#include "cli/eval_files.hpp"

#include <charconv>
#include <sstream>

namespace qwerty::cli {

namespace {

std::vector<std::string> fields_of(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string f; in >> f;) out.push_back(f);
  return out;
}

template <typename F>
void for_each_row(std::istream& in, F&& fn) {
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = fields_of(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    fn(row, fields);
  }
}

std::size_t index_field(std::size_t row, const std::string& text, const char* what) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw RowError(row, std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

Rating rating_field(std::size_t row, const std::string& text) {
  const auto r = parse_rating(text);
  if (!r) throw RowError(row, "unknown rating '" + text + "'");
  return *r;
}

std::optional<Category> label_field(std::size_t row, const std::string& text) {
  if (text == "-" || text == "none") return std::nullopt;
  const auto c = parse_category(text);
  if (!c) throw RowError(row, "unknown label '" + text + "'");
  return c;
}

}  // namespace

std::vector<RatingRow> read_rating_rows(std::istream& in) {
  std::vector<RatingRow> rows;
  for_each_row(in, [&](std::size_t row, const std::vector<std::string>& f) {
    if (f.size() != 3 && f.size() != 4) throw RowError(row, "expected: doc_id scene rating [label]");
    RatingRow r;
    r.doc_id = f[0];
    r.scene = index_field(row, f[1], "scene index");
    r.rating = rating_field(row, f[2]);
    if (f.size() == 4) {
      r.label = label_field(row, f[3]);
      r.has_label = true;
    }
    rows.push_back(std::move(r));
  });
  return rows;
}

std::vector<PairedRow> read_paired_rows(std::istream& in) {
  std::vector<PairedRow> rows;
  for_each_row(in, [&](std::size_t row, const std::vector<std::string>& f) {
    if (f.size() != 4 && f.size() != 6) {
      throw RowError(row, "expected: doc_id scene truth predicted [truth_label predicted_label]");
    }
    PairedRow p;
    p.doc_id = f[0];
    p.scene = index_field(row, f[1], "scene index");
    p.truth = {p.doc_id, p.scene, rating_field(row, f[2]), std::nullopt, false};
    p.predicted = {p.doc_id, p.scene, rating_field(row, f[3]), std::nullopt, false};
    if (f.size() == 6) {
      p.truth.label = label_field(row, f[4]);
      p.predicted.label = label_field(row, f[5]);
      p.truth.has_label = p.predicted.has_label = true;
    }
    rows.push_back(std::move(p));
  });
  return rows;
}

std::map<std::string, std::vector<std::size_t>> read_boundary_rows(std::istream& in) {
  std::map<std::string, std::vector<std::size_t>> docs;
  for_each_row(in, [&](std::size_t row, const std::vector<std::string>& f) {
    if (f.size() != 2) throw RowError(row, "expected: doc_id line");
    docs[f[0]].push_back(index_field(row, f[1], "line index"));
  });
  return docs;
}

std::vector<PairedRow> join_rows(const std::vector<RatingRow>& predicted,
                                 const std::vector<RatingRow>& truth) {
  std::map<std::pair<std::string, std::size_t>, const RatingRow*> truth_by_key;
  for (const RatingRow& t : truth) {
    if (!truth_by_key.emplace(std::pair(t.doc_id, t.scene), &t).second) {
      throw std::runtime_error("duplicate truth row " + t.doc_id + "/" + std::to_string(t.scene));
    }
  }
  std::vector<PairedRow> out;
  for (const RatingRow& p : predicted) {
    auto it = truth_by_key.find({p.doc_id, p.scene});
    if (it == truth_by_key.end()) {
      throw std::runtime_error("no truth row for " + p.doc_id + "/" + std::to_string(p.scene));
    }
    out.push_back({p.doc_id, p.scene, *it->second, p});
    truth_by_key.erase(it);
  }
  if (!truth_by_key.empty()) {
    const auto& key = truth_by_key.begin()->first;
    throw std::runtime_error("no prediction for " + key.first + "/" + std::to_string(key.second));
  }
  return out;
}

}  // namespace qwerty::cli
