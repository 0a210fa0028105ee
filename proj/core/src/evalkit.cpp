#include "qwerty/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "qwerty/error.hpp"

namespace qwerty::eval {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double percentile(std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

Prf prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf p;
  p.precision = ratio(tp, tp + fp);
  p.recall = ratio(tp, tp + fn);
  p.f1 = (p.precision + p.recall) == 0.0
             ? 0.0
             : 2.0 * p.precision * p.recall / (p.precision + p.recall);
  return p;
}

Prf seg_boundary_prf(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                     std::size_t tolerance) {
  const std::set<std::size_t> pred(predicted.begin(), predicted.end());
  std::set<std::size_t> open(truth.begin(), truth.end());
  const std::size_t truth_count = open.size();
  std::size_t tp = 0;
  for (std::size_t p : pred) {
    // Pair with the closest unmatched truth boundary in range.
    const std::size_t lo = p >= tolerance ? p - tolerance : 0;
    auto best = open.end();
    for (auto it = open.lower_bound(lo); it != open.end() && *it <= p + tolerance; ++it) {
      const auto dist = [p](std::size_t t) { return t > p ? t - p : p - t; };
      if (best == open.end() || dist(*it) < dist(*best)) best = it;
    }
    if (best != open.end()) {
      open.erase(best);
      ++tp;
    }
  }
  return prf_from_counts(tp, pred.size() - tp, truth_count - tp);
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts) n += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) n += counts[i][i];
  return n;
}

std::size_t ConfusionMatrix::row_sum(Rating truth) const {
  const auto& row = counts[static_cast<std::size_t>(truth)];
  return std::accumulate(row.begin(), row.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::col_sum(Rating predicted) const {
  std::size_t n = 0;
  for (const auto& row : counts) n += row[static_cast<std::size_t>(predicted)];
  return n;
}

std::pair<ConfusionMatrix, EvalSummary> rating_eval(std::span<const RatingPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyEval, "rating evaluation needs at least one pair");
  ConfusionMatrix cm;
  std::size_t within = 0;
  std::size_t distance = 0;
  for (const RatingPair& p : pairs) {
    ++cm.counts[static_cast<std::size_t>(p.truth)][static_cast<std::size_t>(p.predicted)];
    const int d = std::abs(rating_level(p.truth) - rating_level(p.predicted));
    distance += static_cast<std::size_t>(d);
    if (d <= 1) ++within;
  }
  EvalSummary s;
  s.accuracy = ratio(cm.trace(), pairs.size());
  s.within_one = ratio(within, pairs.size());
  s.mae = ratio(distance, pairs.size());
  for (Rating r : kAllRatings) {
    const std::size_t k = static_cast<std::size_t>(r);
    const std::size_t tp = cm.counts[k][k];
    s.per_class[k] = prf_from_counts(tp, cm.col_sum(r) - tp, cm.row_sum(r) - tp);
  }
  return {cm, s};
}

CategoryReport category_prf(std::span<const std::optional<Category>> predicted,
                            std::span<const std::optional<Category>> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::kInvalidArgument, "predicted and truth label lists differ in length");
  }
  CategoryReport report;
  for (std::size_t c = 0; c < kAllCategories.size(); ++c) {
    const Category cat = kAllCategories[c];
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
      const bool p = predicted[i] == cat;
      const bool t = truth[i] == cat;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    report.per_category[c] = prf_from_counts(tp, fp, fn);
    report.macro.precision += report.per_category[c].precision / 5.0;
    report.macro.recall += report.per_category[c].recall / 5.0;
    report.macro.f1 += report.per_category[c].f1 / 5.0;
  }
  return report;
}

double metric_value(std::span<const RatingPair> pairs, Metric metric) {
  if (pairs.empty()) return 0.0;
  std::size_t hits = 0;
  std::size_t distance = 0;
  for (const RatingPair& p : pairs) {
    const int d = std::abs(rating_level(p.truth) - rating_level(p.predicted));
    hits += d == 0;
    distance += static_cast<std::size_t>(d);
  }
  return metric == Metric::kAccuracy ? ratio(hits, pairs.size()) : ratio(distance, pairs.size());
}

Interval bootstrap_ci(std::span<const RatingPair> pairs, Metric metric, std::size_t iterations,
                      std::uint64_t seed, std::size_t threads) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyEval, "bootstrap needs at least one pair");
  if (iterations == 0) throw Error(ErrorCode::kInvalidArgument, "bootstrap needs at least one iteration");

  std::vector<double> values(iterations);
  auto run = [&](std::size_t begin, std::size_t end) {
    std::vector<RatingPair> sample(pairs.size());
    for (std::size_t i = begin; i < end; ++i) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(i)));
      std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
      for (RatingPair& s : sample) s = pairs[pick(rng)];
      values[i] = metric_value(sample, metric);
    }
  };

  threads = std::clamp<std::size_t>(threads, 1, iterations);
  if (threads == 1) {
    run(0, iterations);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (iterations + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(iterations, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
  }
  std::sort(values.begin(), values.end());
  return {percentile(values, 0.025), percentile(values, 0.975)};
}

double mcnemar_exact(std::size_t b, std::size_t c) {
  const std::size_t n = b + c;
  if (n == 0) return 1.0;
  const std::size_t k = std::min(b, c);
  double tail = 0.0;
  for (std::size_t i = 0; i <= k; ++i) {
    const double log_term = std::lgamma(static_cast<double>(n) + 1) -
                            std::lgamma(static_cast<double>(i) + 1) -
                            std::lgamma(static_cast<double>(n - i) + 1) -
                            static_cast<double>(n) * std::log(2.0);
    tail += std::exp(log_term);
  }
  return std::min(1.0, 2.0 * tail);
}

double mcnemar(std::span<const bool> correct_a, std::span<const bool> correct_b) {
  if (correct_a.size() != correct_b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "McNemar inputs differ in length");
  }
  std::size_t b = 0, c = 0;
  for (std::size_t i = 0; i < correct_a.size(); ++i) {
    b += correct_a[i] && !correct_b[i];
    c += !correct_a[i] && correct_b[i];
  }
  return mcnemar_exact(b, c);
}

double wilcoxon_signed_rank(std::span<const double> errors_a, std::span<const double> errors_b) {
  if (errors_a.size() != errors_b.size()) {
    throw Error(ErrorCode::kInvalidArgument, "Wilcoxon inputs differ in length");
  }
  constexpr double kEps = 1e-12;
  std::vector<double> diffs;
  for (std::size_t i = 0; i < errors_a.size(); ++i) {
    const double d = errors_a[i] - errors_b[i];
    if (std::abs(d) > kEps) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n == 0) return 1.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });

  // Ranks are kept doubled so tied (half-integer) ranks stay integral.
  std::vector<long> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(std::abs(diffs[order[j + 1]]) - std::abs(diffs[order[i]])) <= 1e-9) ++j;
    const long avg2 = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = avg2;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  long w2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (diffs[i] > 0) w2 += rank2[i];
  }
  const long total2 = static_cast<long>(n * (n + 1));

  if (n <= kWilcoxonExactLimit) {
    // Null distribution of the doubled positive-rank sum by subset counting.
    std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (long s = total2; s >= rank2[i]; --s) ways[s] += ways[s - rank2[i]];
    }
    const long observed = std::labs(2 * w2 - total2);
    double extreme = 0.0;
    for (long s = 0; s <= total2; ++s) {
      if (std::labs(2 * s - total2) >= observed) extreme += ways[s];
    }
    return std::min(1.0, extreme / std::ldexp(1.0, static_cast<int>(n)));
  }

  const double nd = static_cast<double>(n);
  const double w = static_cast<double>(w2) / 2.0;
  const double mean = nd * (nd + 1) / 4.0;
  const double var = nd * (nd + 1) * (2 * nd + 1) / 24.0 - tie_term / 48.0;
  if (var <= 0) return 1.0;
  const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

double r_squared(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "r_squared needs two equal-length series of size >= 2");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 1.0;
  return (sxy * sxy) / (sxx * syy);
}

}  // namespace qwerty::eval
