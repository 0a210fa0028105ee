#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qwerty/rating.hpp"

namespace qwerty::eval {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Harmonic mean with the 0/0 conventions: precision 0 with no predictions,
// recall 0 with no truth, f1 0 when both components are 0.
Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Boundary scoring. tolerance = 0 is exact match; otherwise a predicted
// boundary may pair with one unpaired truth boundary within +/- tolerance lines.
Prf seg_boundary_prf(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                     std::size_t tolerance = 0);

struct RatingPair {
  Rating truth;
  Rating predicted;
};

struct ConfusionMatrix {
  // counts[truth][predicted]
  std::array<std::array<std::size_t, 5>, 5> counts{};

  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(Rating truth) const;
  std::size_t col_sum(Rating predicted) const;
};

struct EvalSummary {
  double accuracy = 0.0;
  double within_one = 0.0;
  double mae = 0.0;
  std::array<Prf, 5> per_class{};  // indexed by rating level
};

// Throws kEmptyEval on empty input.
std::pair<ConfusionMatrix, EvalSummary> rating_eval(std::span<const RatingPair> pairs);

struct CategoryReport {
  std::array<Prf, 5> per_category{};  // kAllCategories order
  Prf macro;
};

// One optional label per scene on each side; nullopt means "no violation".
CategoryReport category_prf(std::span<const std::optional<Category>> predicted,
                            std::span<const std::optional<Category>> truth);

enum class Metric { kAccuracy, kMae };

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

// Percentile bootstrap (2.5%, 97.5%). Iteration i draws from its own stream
// seeded from (seed, i), so the result is independent of thread count.
Interval bootstrap_ci(std::span<const RatingPair> pairs, Metric metric, std::size_t iterations,
                      std::uint64_t seed, std::size_t threads = 1);

double metric_value(std::span<const RatingPair> pairs, Metric metric);

// Two-sided exact McNemar p from discordant counts.
double mcnemar_exact(std::size_t b, std::size_t c);
// b = A right & B wrong, c = A wrong & B right. Throws kInvalidArgument on
// length mismatch.
double mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b);

// Two-sided signed-rank p. Zero differences are dropped, ties get average
// ranks. Exact null distribution for n <= 20, normal approximation above.
double wilcoxon_signed_rank(std::span<const double> errors_a, std::span<const double> errors_b);

inline constexpr std::size_t kWilcoxonExactLimit = 20;

double r_squared(std::span<const double> x, std::span<const double> y);

}  // namespace qwerty::eval
