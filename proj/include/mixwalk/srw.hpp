#pragma once

// Two-dimensional simple random walk reference: local times, annulus entry
// times (sup-norm shells), return windows and range.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "site.hpp"
#include "stats.hpp"
#include "visit_table.hpp"

namespace mixwalk::srw {

using Point2 = Site<2>;

inline std::int64_t sup_norm(const Point2& p) noexcept {
  return std::max(std::llabs(p[0]), std::llabs(p[1]));
}

inline void srw_step(Xoshiro256pp& rng, Point2& p) {
  const std::uint32_t u = rng.below(4);
  const std::int64_t next = std::int64_t{p[u >> 1]} + ((u & 1) ? -1 : 1);
  if (next > INT32_MAX || next < INT32_MIN) throw OverflowError("srw: coordinate overflow");
  p[u >> 1] = static_cast<std::int32_t>(next);
}

/// U_0 = start, ..., U_n.
inline std::vector<Point2> run_srw2d(std::uint64_t seed, std::uint64_t n, Point2 start = {0, 0}) {
  Xoshiro256pp rng(seed);
  std::vector<Point2> traj;
  traj.reserve(n + 1);
  traj.push_back(start);
  for (std::uint64_t k = 0; k < n; ++k) {
    srw_step(rng, start);
    traj.push_back(start);
  }
  return traj;
}

struct LocalTimeProfile {
  std::vector<std::pair<Point2, std::uint64_t>> counts;  // sorted by site
  std::uint64_t maximum = 0;
  Point2 argmax{};
};

/// Visit counts over times 0..n inclusive.
inline LocalTimeProfile max_local_time(std::span<const Point2> traj) {
  if (traj.empty()) throw ConfigError("max_local_time: empty trajectory");
  VisitTable<2> table(traj.size());
  LocalTimeProfile prof;
  for (const Point2& p : traj) {
    auto& e = table.find_or_insert(p, [](auto&) {});
    ++e.walk;
    if (e.walk > prof.maximum) {
      prof.maximum = e.walk;
      prof.argmax = p;
    }
  }
  table.for_each([&](const auto& e) { prof.counts.emplace_back(e.site, e.walk); });
  std::sort(prof.counts.begin(), prof.counts.end());
  return prof;
}

/// First k > 0 with r < |U_k| <= r + 1 (sup-norm), if within the horizon.
inline std::optional<std::uint64_t> tau_annulus(std::span<const Point2> traj, double r) {
  if (r < 0) throw ConfigError("tau_annulus: radius must be >= 0");
  const auto shell = static_cast<std::int64_t>(std::floor(r)) + 1;
  for (std::size_t k = 1; k < traj.size(); ++k)
    if (sup_norm(traj[k]) == shell) return k;
  return std::nullopt;
}

/// N*_n of a fresh walk from the origin, without storing the trajectory.
inline std::uint64_t sample_max_local_time(Xoshiro256pp& rng, std::uint64_t n) {
  VisitTable<2> table(256);
  Point2 p{0, 0};
  std::uint64_t best = 0;
  for (std::uint64_t k = 0;; ++k) {
    auto& e = table.find_or_insert(p, [](auto&) {});
    best = std::max<std::uint64_t>(best, ++e.walk);
    if (k == n) break;
    srw_step(rng, p);
  }
  return best;
}

/// Walk from x until it first enters the shell |U| = 1 (true) or the shell
/// |U| = floor(R) + 1 (false), at times k > 0.
inline bool hits_inner_before_outer(Xoshiro256pp& rng, Point2 x, double outer_radius) {
  const auto outer = static_cast<std::int64_t>(std::floor(outer_radius)) + 1;
  for (;;) {
    srw_step(rng, x);
    const std::int64_t s = sup_norm(x);
    if (s == 1) return true;
    if (s == outer) return false;
  }
}

inline BernoulliCounter estimate_hitting_before_annulus(Point2 x, double outer_radius,
                                                        const MonteCarlo& mc) {
  if (x[0] == 0 && x[1] == 0) throw ConfigError("hitting: start site must differ from the origin");
  if (static_cast<double>(sup_norm(x)) > outer_radius)
    throw ConfigError("hitting: start site lies outside the outer radius");
  return run_replicas<BernoulliCounter>(mc, [&](std::uint64_t i, BernoulliCounter& acc) {
    Xoshiro256pp rng(mc.replica_seed(i));
    acc.add(hits_inner_before_outer(rng, x, outer_radius));
  });
}

/// P[0 in {U_t, ..., U_2n}].
inline BernoulliCounter estimate_return_window_srw(std::uint64_t t, std::uint64_t n,
                                                   const MonteCarlo& mc) {
  if (t > 2 * n) throw ConfigError("return window: t must be <= 2n");
  return run_replicas<BernoulliCounter>(mc, [&](std::uint64_t i, BernoulliCounter& acc) {
    Xoshiro256pp rng(mc.replica_seed(i));
    Point2 p{0, 0};
    bool hit = t == 0;
    for (std::uint64_t k = 1; k <= 2 * n && !hit; ++k) {
      srw_step(rng, p);
      hit = k >= t && p[0] == 0 && p[1] == 0;
    }
    acc.add(hit);
  });
}

/// E[r_{n,U}], the number of distinct sites among U_0..U_n.
inline MeanAccumulator range_size_srw(std::uint64_t n, const MonteCarlo& mc) {
  if (n < 1) throw ConfigError("range_size_srw: n must be >= 1");
  return run_replicas<MeanAccumulator>(mc, [&](std::uint64_t i, MeanAccumulator& acc) {
    Xoshiro256pp rng(mc.replica_seed(i));
    VisitTable<2> table(256);
    Point2 p{0, 0};
    table.find_or_insert(p, [](auto& e) { e.walk = 1; });
    for (std::uint64_t k = 0; k < n; ++k) {
      srw_step(rng, p);
      table.find_or_insert(p, [](auto& e) { e.walk = 1; });
    }
    acc.add(static_cast<std::int64_t>(table.size()));
  });
}

/// E[N*_n].
inline MeanAccumulator estimate_max_local_time(std::uint64_t n, const MonteCarlo& mc) {
  return run_replicas<MeanAccumulator>(mc, [&](std::uint64_t i, MeanAccumulator& acc) {
    Xoshiro256pp rng(mc.replica_seed(i));
    acc.add(static_cast<std::int64_t>(sample_max_local_time(rng, n)));
  });
}

}  // namespace mixwalk::srw

namespace mixwalk::srw {

/// Returns of U to the origin during [1, n].
inline ReturnsSummary returns_to_origin_srw(std::uint64_t n, const MonteCarlo& mc) {
  return run_replicas<ReturnsSummary>(mc, [&](std::uint64_t i, ReturnsSummary& acc) {
    Xoshiro256pp rng(mc.replica_seed(i));
    Point2 p{0, 0};
    std::uint64_t total = 0, late = 0;
    for (std::uint64_t k = 1; k <= n; ++k) {
      srw_step(rng, p);
      if (p[0] == 0 && p[1] == 0) {
        ++total;
        if (2 * k > n) ++late;
      }
    }
    acc.add(total, late);
  });
}

}  // namespace mixwalk::srw
