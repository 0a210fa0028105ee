#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qwerty/rating.hpp"

namespace qwerty::cli {

// Row-oriented evaluation inputs. Fields are separated by tabs or spaces;
// blank lines and lines starting with '#' are skipped.
//
//   ratings, one system per file:   doc_id  scene  rating  [label]
//   ratings, paired in one file:    doc_id  scene  truth  predicted  [truth_label  predicted_label]
//   boundaries:                     doc_id  line
//
// A label of "-" or "none" means no violation.

struct RatingRow {
  std::string doc_id;
  std::size_t scene = 0;
  Rating rating = Rating::k0;
  std::optional<Category> label;
  bool has_label = false;
};

struct PairedRow {
  std::string doc_id;
  std::size_t scene = 0;
  RatingRow truth;
  RatingRow predicted;
};

// Thrown with the 1-based row number of the offending line.
class RowError : public std::runtime_error {
 public:
  RowError(std::size_t row, const std::string& message)
      : std::runtime_error("row " + std::to_string(row) + ": " + message), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

std::vector<RatingRow> read_rating_rows(std::istream& in);
std::vector<PairedRow> read_paired_rows(std::istream& in);
std::map<std::string, std::vector<std::size_t>> read_boundary_rows(std::istream& in);

// Joins two single-system files on (doc_id, scene). Throws std::runtime_error
// naming the first key present on one side only.
std::vector<PairedRow> join_rows(const std::vector<RatingRow>& predicted,
                                 const std::vector<RatingRow>& truth);

}  // namespace qwerty::cli
