#pragma once

// Exact-state accumulators and interval estimates. Accumulators hold integer
// sums only, so merging replica batches is associative and commutative
// bit for bit; all floating point happens when an Estimate is read out.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"

namespace mixwalk {

inline constexpr double kZ95 = 1.959963984540054;

struct Estimate {
  double point = 0;
  double stderr_ = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  std::uint64_t replicas = 0;
  std::uint64_t master_seed = 0;
  std::string digest;

  bool covers(double value) const noexcept { return ci_lo <= value && value <= ci_hi; }
  bool disjoint_from(const Estimate& o) const noexcept { return ci_hi < o.ci_lo || o.ci_hi < ci_lo; }
};

inline std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  std::string s;
  while (u) {
    s.insert(s.begin(), static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  return neg ? "-" + s : s;
}

inline __int128 int128_from_string(const std::string& s) {
  if (s.empty()) throw ConfigError("empty integer string");
  std::size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) throw ConfigError("bad integer string '" + s + "'");
  __int128 v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') throw ConfigError("bad integer string '" + s + "'");
    v = v * 10 + (s[i] - '0');
  }
  return s[0] == '-' ? -v : v;
}

/// Count, sum, sum of squares, min and max of integer observations.
struct MeanAccumulator {
  std::uint64_t count = 0;
  __int128 sum = 0;
  __int128 sumsq = 0;
  std::int64_t min = std::numeric_limits<std::int64_t>::max();
  std::int64_t max = std::numeric_limits<std::int64_t>::min();

  void add(std::int64_t x) {
    const __int128 sq = static_cast<__int128>(x) * x;
    if (__builtin_add_overflow(sum, static_cast<__int128>(x), &sum) ||
        __builtin_add_overflow(sumsq, sq, &sumsq))
      throw InvariantError("accumulator overflow");
    ++count;
    if (x < min) min = x;
    if (x > max) max = x;
  }

  void merge(const MeanAccumulator& o) {
    if (__builtin_add_overflow(sum, o.sum, &sum) || __builtin_add_overflow(sumsq, o.sumsq, &sumsq))
      throw InvariantError("accumulator overflow");
    count += o.count;
    if (o.min < min) min = o.min;
    if (o.max > max) max = o.max;
  }

  friend bool operator==(const MeanAccumulator&, const MeanAccumulator&) = default;

  /// Normal-approximation 95% interval for the mean of x / scale.
  Estimate estimate(double scale = 1.0) const {
    Estimate e;
    e.replicas = count;
    if (count == 0) return e;
    const long double n = static_cast<long double>(count);
    const long double s = static_cast<long double>(sum);
    const long double mean = s / n;
    long double var = 0;
    if (count > 1) {
      var = (static_cast<long double>(sumsq) - s * mean) / (n - 1);
      if (var < 0) var = 0;
    }
    e.point = static_cast<double>(mean / scale);
    e.stderr_ = static_cast<double>(std::sqrt(var / n) / scale);
    e.ci_lo = e.point - kZ95 * e.stderr_;
    e.ci_hi = e.point + kZ95 * e.stderr_;
    return e;
  }
};

/// Successes out of trials.
struct BernoulliCounter {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;

  void add(bool hit) noexcept {
    ++trials;
    successes += hit ? 1 : 0;
  }
  void merge(const BernoulliCounter& o) noexcept {
    trials += o.trials;
    successes += o.successes;
  }
  friend bool operator==(const BernoulliCounter&, const BernoulliCounter&) = default;

  Estimate estimate() const { return wilson(successes, trials); }

  /// Wilson score 95% interval.
  static Estimate wilson(std::uint64_t k, std::uint64_t n, double z = kZ95) {
    Estimate e;
    e.replicas = n;
    if (n == 0) return e;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2 * nn)) / denom;
    const double half = z / denom * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
    e.point = p;
    e.stderr_ = std::sqrt(p * (1 - p) / nn);
    e.ci_lo = std::max(0.0, std::min(p, center - half));
    e.ci_hi = std::min(1.0, std::max(p, center + half));
    return e;
  }
};

struct ChiSquareResult {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
  std::size_t cells = 0;
};

/// Two-sample chi-square homogeneity test on paired cell counts. Cells whose
/// pooled count is below `min_pooled` are merged into one remainder cell.
inline ChiSquareResult chi_square_two_sample(const std::vector<std::uint64_t>& a,
                                             const std::vector<std::uint64_t>& b,
                                             std::uint64_t min_pooled = 10) {
  if (a.size() != b.size()) throw ConfigError("chi-square: cell vectors differ in length");
  std::vector<std::pair<double, double>> cells;
  double rest_a = 0, rest_b = 0;
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
    if (a[i] + b[i] == 0) continue;
    if (a[i] + b[i] < min_pooled) {
      rest_a += static_cast<double>(a[i]);
      rest_b += static_cast<double>(b[i]);
    } else {
      cells.emplace_back(static_cast<double>(a[i]), static_cast<double>(b[i]));
    }
  }
  if (rest_a + rest_b > 0) cells.emplace_back(rest_a, rest_b);
  ChiSquareResult r;
  r.cells = cells.size();
  if (na == 0 || nb == 0 || cells.size() < 2) return r;
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  for (const auto& [x, y] : cells) {
    const double diff = ka * x - kb * y;
    r.statistic += diff * diff / (x + y);
  }
  r.dof = static_cast<int>(cells.size()) - 1;
  r.p_value = boost::math::gamma_q(r.dof / 2.0, r.statistic / 2.0);
  return r;
}

/// Least-squares fit of p_n = C (ln ln n / ln n)^2.
struct ScalingFit {
  std::vector<std::pair<std::uint64_t, double>> grid;
  double constant = 0;
  double residual_norm = 0;
  double relative_residual = 0;
  bool good = false;
};

inline double scaling_shape(std::uint64_t n) {
  const double l = std::log(static_cast<double>(n));
  const double r = std::log(l) / l;
  return r * r;
}

inline ScalingFit fit_scaling(std::vector<std::pair<std::uint64_t, double>> grid,
                              double tolerance = 0.2) {
  if (grid.size() < 3) throw ConfigError("fit_scaling: need at least 3 grid points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].first < 16) throw ConfigError("fit_scaling: grid n must be >= 16");
    for (std::size_t j = 0; j < i; ++j)
      if (grid[i].first == grid[j].first) throw ConfigError("fit_scaling: duplicate n in grid");
  }
  ScalingFit fit;
  double gp = 0, gg = 0, pp = 0;
  for (const auto& [n, p] : grid) {
    const double g = scaling_shape(n);
    gp += g * p;
    gg += g * g;
    pp += p * p;
  }
  fit.constant = gp / gg;
  double rss = 0;
  for (const auto& [n, p] : grid) {
    const double r = p - fit.constant * scaling_shape(n);
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  fit.relative_residual = pp > 0 ? fit.residual_norm / std::sqrt(pp) : 0.0;
  fit.good = fit.constant > 0 && fit.relative_residual <= tolerance;
  fit.grid = std::move(grid);
  return fit;
}

inline ScalingFit fit_scaling(const std::vector<std::pair<std::uint64_t, Estimate>>& grid,
                              double tolerance = 0.2) {
  std::vector<std::pair<std::uint64_t, double>> points;
  for (const auto& [n, e] : grid) points.emplace_back(n, e.point);
  return fit_scaling(std::move(points), tolerance);
}

}  // namespace mixwalk

namespace mixwalk {

/// Per-replica origin-return counts: all returns in [1, n] and the late ones
/// with k > n/2.
struct ReturnsSummary {
  MeanAccumulator total;
  MeanAccumulator late;
  std::map<std::uint64_t, std::uint64_t> histogram;  // total returns -> replicas

  void add(std::uint64_t returns, std::uint64_t late_returns) {
    total.add(static_cast<std::int64_t>(returns));
    late.add(static_cast<std::int64_t>(late_returns));
    ++histogram[returns];
  }
  void merge(const ReturnsSummary& o) {
    total.merge(o.total);
    late.merge(o.late);
    for (const auto& [k, c] : o.histogram) histogram[k] += c;
  }
  friend bool operator==(const ReturnsSummary&, const ReturnsSummary&) = default;
};

}  // namespace mixwalk
