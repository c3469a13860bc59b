#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <map>

#include "mixwalk/srw.hpp"

using namespace mixwalk;
using namespace mixwalk::srw;

namespace {

constexpr std::array<Point2, 4> kMoves{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

MonteCarlo mc(std::uint64_t replicas, std::uint64_t seed) {
  MonteCarlo m;
  m.replicas = replicas;
  m.seed = seed;
  return m;
}

// Exact E[f(U_n)] over all 4^n paths.
template <class F>
double enumerate_endpoint(int n, F f) {
  double total = 0;
  const long paths = 1L << (2 * n);
  for (long code = 0; code < paths; ++code) {
    Point2 p{0, 0};
    long c = code;
    for (int k = 0; k < n; ++k, c >>= 2) {
      p[0] += kMoves[c & 3][0];
      p[1] += kMoves[c & 3][1];
    }
    total += f(p);
  }
  return total / static_cast<double>(paths);
}

// P[U enters the shell |.|=1 before |.|=outer] by value iteration over the box.
double hitting_dp(Point2 start, int outer) {
  const int w = 2 * outer + 1;
  std::vector<double> h(static_cast<std::size_t>(w * w), 0.0);
  auto at = [&](int x, int y) -> double& { return h[static_cast<std::size_t>((x + outer) * w + (y + outer))]; };
  auto value = [&](int x, int y) {
    const int s = std::max(std::abs(x), std::abs(y));
    if (s == 1) return 1.0;
    if (s == outer) return 0.0;
    return at(x, y);
  };
  for (int it = 0; it < 20000; ++it)
    for (int x = -outer + 1; x < outer; ++x)
      for (int y = -outer + 1; y < outer; ++y) {
        double v = 0;
        for (const auto& m : kMoves) v += value(x + m[0], y + m[1]);
        at(x, y) = v / 4;
      }
  // one step from the start, since times k > 0 count
  double v = 0;
  for (const auto& m : kMoves) v += value(start[0] + m[0], start[1] + m[1]);
  return v / 4;
}

}  // namespace

TEST(Srw, IncrementsAreUniform) {
  auto traj = run_srw2d(77, 400000);
  std::map<std::pair<int, int>, std::uint64_t> counts;
  for (std::size_t k = 1; k < traj.size(); ++k)
    ++counts[{traj[k][0] - traj[k - 1][0], traj[k][1] - traj[k - 1][1]}];
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [inc, c] : counts) EXPECT_NEAR(static_cast<double>(c), 100000.0, 4.5 * std::sqrt(75000.0));
}

TEST(Srw, EndpointMomentsMatchEnumeration) {
  const double p0 = enumerate_endpoint(2, [](Point2 p) { return p[0] == 0 && p[1] == 0 ? 1.0 : 0.0; });
  const double m2 = enumerate_endpoint(3, [](Point2 p) { return double(p[0] * p[0] + p[1] * p[1]); });
  EXPECT_DOUBLE_EQ(p0, 0.25);
  EXPECT_DOUBLE_EQ(m2, 3.0);

  BernoulliCounter back;
  MeanAccumulator sq;
  for (std::uint64_t s = 0; s < 40000; ++s) {
    auto t2 = run_srw2d(derive_seed(9, {s}), 3);
    back.add(t2[2] == Point2{0, 0});
    sq.add(t2[3][0] * t2[3][0] + t2[3][1] * t2[3][1]);
  }
  EXPECT_TRUE(back.estimate().covers(p0));
  EXPECT_TRUE(sq.estimate().covers(m2));
}

TEST(Srw, LocalTimeProfile) {
  auto traj = run_srw2d(5, 0);
  EXPECT_EQ(max_local_time(traj).maximum, 1u);
  traj = run_srw2d(11, 3000);
  auto prof = max_local_time(traj);
  std::uint64_t sum = 0, best = 0;
  for (const auto& [site, c] : prof.counts) {
    sum += c;
    best = std::max(best, c);
  }
  EXPECT_EQ(sum, traj.size());
  EXPECT_EQ(best, prof.maximum);
  Xoshiro256pp rng(11);
  EXPECT_EQ(sample_max_local_time(rng, 3000), prof.maximum);
  EXPECT_THROW(max_local_time(std::span<const Point2>{}), ConfigError);
}

TEST(Srw, MaxLocalTimeAtTwoSteps) {
  auto acc = estimate_max_local_time(2, mc(40000, 3));
  EXPECT_EQ(acc.min, 1);
  EXPECT_EQ(acc.max, 2);
  EXPECT_TRUE(acc.estimate().covers(1.25));
}

TEST(Srw, TauAnnulus) {
  std::vector<Point2> traj{{0, 0}, {1, 0}, {2, 0}, {2, 1}};
  EXPECT_EQ(tau_annulus(traj, 0), 1u);
  EXPECT_EQ(tau_annulus(traj, 1), 2u);
  EXPECT_EQ(tau_annulus(traj, 1.9), 2u);
  EXPECT_EQ(tau_annulus(traj, 2), std::nullopt);
  EXPECT_THROW(tau_annulus(traj, -1), ConfigError);
}

TEST(Srw, TruncatedExitTimeMatchesDp) {
  // E[min(tau_2, 12)] with tau_2 the first entry into the sup-norm shell 3.
  constexpr int kCap = 12;
  std::map<std::pair<int, int>, double> dist{{{0, 0}, 1.0}};
  double expected = 1.0;  // P[tau > 0]
  for (int k = 1; k < kCap; ++k) {
    std::map<std::pair<int, int>, double> next;
    for (const auto& [s, pr] : dist)
      for (const auto& m : kMoves) {
        const int x = s.first + m[0], y = s.second + m[1];
        if (std::max(std::abs(x), std::abs(y)) < 3) next[{x, y}] += pr / 4;
      }
    dist = std::move(next);
    for (const auto& [s, pr] : dist) expected += pr;
  }
  MeanAccumulator acc;
  for (std::uint64_t s = 0; s < 40000; ++s) {
    auto traj = run_srw2d(derive_seed(21, {s}), kCap);
    acc.add(static_cast<std::int64_t>(tau_annulus(traj, 2).value_or(kCap)));
  }
  EXPECT_TRUE(acc.estimate().covers(expected)) << expected << " vs " << acc.estimate().point;
}

TEST(Srw, HittingBeforeAnnulus) {
  // From (1,0): the first step lands on the inner shell with probability 1/2.
  const double oracle = hitting_dp({1, 0}, 5);
  EXPECT_GT(oracle, 0.5);
  auto est = estimate_hitting_before_annulus({1, 0}, 4, mc(20000, 8)).estimate();
  EXPECT_TRUE(est.covers(oracle)) << oracle << " vs " << est.point;

  auto a = estimate_hitting_before_annulus({3, 2}, 6, mc(20000, 1)).estimate();
  auto b = estimate_hitting_before_annulus({-3, -2}, 6, mc(20000, 2)).estimate();
  EXPECT_FALSE(a.disjoint_from(b));
  EXPECT_TRUE(a.covers(hitting_dp({3, 2}, 7)));
}

TEST(Srw, HittingDecreasesWithDistance) {
  auto near = estimate_hitting_before_annulus({8, 0}, 64, mc(4000, 4)).estimate();
  auto far = estimate_hitting_before_annulus({16, 0}, 64, mc(4000, 5)).estimate();
  EXPECT_GT(near.point, far.point);
  // log-potential: P ~ ln(R/|x|) / ln R
  EXPECT_NEAR(near.point, std::log(64.0 / 8) / std::log(64.0), 0.08);
  EXPECT_NEAR(far.point, std::log(64.0 / 16) / std::log(64.0), 0.08);
}

TEST(Srw, ReturnWindow) {
  EXPECT_EQ(estimate_return_window_srw(0, 10, mc(50, 1)).successes, 50u);
  std::uint64_t prev = 5000;
  for (std::uint64_t t = 1; t <= 40; t += 3) {
    auto c = estimate_return_window_srw(t, 20, mc(5000, 6));
    EXPECT_LE(c.successes, prev);
    prev = c.successes;
  }
  EXPECT_THROW(estimate_return_window_srw(41, 20, mc(1, 1)), ConfigError);
}

TEST(Srw, RangeSize) {
  auto one = range_size_srw(1, mc(200, 2));
  EXPECT_EQ(one.min, 2);
  EXPECT_EQ(one.max, 2);
  EXPECT_TRUE(range_size_srw(2, mc(40000, 3)).estimate().covers(2.75));
  EXPECT_THROW(range_size_srw(0, mc(1, 1)), ConfigError);
}

TEST(Srw, Preconditions) {
  EXPECT_THROW(estimate_hitting_before_annulus({0, 0}, 4, mc(1, 1)), ConfigError);
  EXPECT_THROW(estimate_hitting_before_annulus({5, 0}, 4, mc(1, 1)), ConfigError);
}

TEST(Srw, IntervalShrinksWithReplicas) {
  const double small = range_size_srw(100, mc(2000, 7)).estimate().stderr_;
  const double large = range_size_srw(100, mc(8000, 7)).estimate().stderr_;
  EXPECT_NEAR(small / large, 2.0, 0.3);
}

TEST(Srw, ReturnsToOrigin) {
  auto s = returns_to_origin_srw(2, mc(20000, 9));
  EXPECT_TRUE(s.total.estimate().covers(0.25));
  EXPECT_EQ(s.total, s.late);  // the only possible return is at k = 2 > 1
}
