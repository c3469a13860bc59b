// Acceptance run: one PASS/FAIL line per criterion, with indented details
// printed just above it.
// Exits nonzero if any criterion fails. Replica budgets and tolerances are
// the fixed targets; the seed is fixed before any run and never tuned.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mixwalk/mixwalk.hpp"

using namespace mixwalk;

namespace {

constexpr std::uint64_t kSeed = 20261018;

int failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MonteCarlo mc(std::uint64_t replicas, std::uint64_t stream) {
  MonteCarlo m;
  m.replicas = replicas;
  m.seed = kSeed;
  m.workers = 0;  // all cores; results do not depend on it
  m.stream = stream;
  return m;
}

void verdict(int id, const std::string& name, bool ok, const std::string& detail, double secs) {
  std::printf("[%s] %2d %s: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

void note(const char* fmt, auto... args) {
  std::printf("       ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string ci(const Estimate& e) { return fmt("%.6g [%.6g, %.6g]", e.point, e.ci_lo, e.ci_hi); }

// Replicas per arm for two normal-approximation 95% intervals to separate a
// difference `delta` when the per-replica standard deviations are s1, s2.
double replicas_to_separate(double s1, double s2, double delta) {
  if (delta <= 0) return INFINITY;
  const double r = kZ95 * (s1 + s2) / delta;
  return r * r;
}

void oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::string where;
  for (const auto& [parts, nmax] : std::vector<std::pair<std::vector<int>, int>>{{{1, 1}, 10}, {{2, 2}, 6}}) {
    const Partition p(parts);
    for (int n = 1; n <= nmax; ++n) {
      const auto exact = exact_distribution(p, Environment::empty(), n);
      const auto law = empirical_distribution(p, nullptr, n, mc(1000000, 100 + n * 8 + parts[0]));
      const double tv = law.total_variation(exact);
      if (tv > worst) {
        worst = tv;
        where = p.label() + " n=" + std::to_string(n);
      }
    }
  }
  verdict(1, "oracle equivalence", worst <= 0.01, fmt("max TV %.5f at %s (<= 0.01)", worst, where.c_str()),
          seconds_since(t0));
}

void decomposition() {
  const auto t0 = std::chrono::steady_clock::now();
  bool exact_ok = true;
  for (const auto& [parts, nmax] : std::vector<std::pair<std::vector<int>, int>>{{{1, 1}, 10}, {{2, 2}, 6}}) {
    const Partition p(parts);
    for (int n = 0; n <= nmax; ++n)
      exact_ok = exact_ok && total_variation(exact_distribution(p, Environment::empty(), n),
                                             exact_reconstruction_distribution(p, n)) == 0;
  }
  const Partition m22({2, 2});
  const auto direct = decomposition_consistency_test(m22, 10000, mc(100000, 200));
  const auto inverted = decomposition_consistency_test(m22, 10000, mc(100000, 201), true);
  const bool ok = exact_ok && direct.chi.p_value > 0.01 && inverted.chi.p_value < 1e-6;
  verdict(2, "decomposition", ok,
          fmt("exact TV=0 %s; chi2 p=%.4g (> 0.01, %d dof); inverted p=%.3g (< 1e-6)", exact_ok ? "yes" : "NO",
              direct.chi.p_value, direct.chi.dof, inverted.chi.p_value),
          seconds_since(t0));
}

void return_window_exact() {
  const auto t0 = std::chrono::steady_clock::now();
  int cover22 = 0, cover11 = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cover22 += estimate_return_window(Partition({2, 2}), nullptr, 1, mc(10000, 300 + s)).estimate().covers(0.25);
    cover11 += estimate_return_window(Partition({1, 1}), nullptr, 1, mc(10000, 400 + s)).estimate().covers(0.5);
  }
  // With exact 95% coverage, P[>= 18 of 20] = 0.925 per walk.
  note("M(2,2) covered %d/20, M(1,1) covered %d/20; a correct interval passes each with probability 0.925",
       cover22, cover11);
  verdict(3, "return-window exact values", cover22 >= 18 && cover11 >= 18,
          fmt("coverage of 1/4 (M(2,2)) %d/20, of 1/2 (M(1,1)) %d/20 (>= 18/20)", cover22, cover11),
          seconds_since(t0));
}

void return_window_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const Partition m22({2, 2});
  const std::vector<std::pair<std::uint64_t, std::uint64_t>> plan{{1u << 8, 100000}, {1u << 12, 100000},
                                                                  {1u << 16, 10000}};
  std::vector<std::pair<std::uint64_t, Estimate>> est;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto c = estimate_return_window(m22, nullptr, plan[i].first, mc(plan[i].second, 500 + i));
    est.emplace_back(plan[i].first, c.estimate());
    note("n=%-6llu replicas=%-6llu hits=%-4llu p=%s", (unsigned long long)plan[i].first,
         (unsigned long long)plan[i].second, (unsigned long long)c.successes, ci(c.estimate()).c_str());
  }
  bool decreasing = true, disjoint = true;
  for (std::size_t i = 0; i + 1 < est.size(); ++i) decreasing = decreasing && est[i].second.point > est[i + 1].second.point;
  for (std::size_t i = 0; i < est.size(); ++i)
    for (std::size_t j = i + 1; j < est.size(); ++j) disjoint = disjoint && est[i].second.disjoint_from(est[j].second);
  const ScalingFit fit = fit_scaling(est);
  const double secs = seconds_since(t0);
  note("fit p = C (lnln n/ln n)^2: C=%.4g relative residual %.3g", fit.constant, fit.relative_residual);
  // How many replicas the last pair would need to separate, taking p ~ 1/n.
  const double p12 = est[1].second.point > 0 ? est[1].second.point : est[0].second.point / 16;
  const double p16 = p12 / 16;
  note("separating n=2^12 from 2^16 at p~%.2g vs %.2g needs ~%.2g replicas per point", p12, p16,
       replicas_to_separate(std::sqrt(p12), std::sqrt(p16), p12 - p16));
  verdict(4, "return-window trend", decreasing && disjoint && fit.constant > 0 && secs <= 1800,
          fmt("strictly decreasing %s, pairwise disjoint CIs %s, C=%.4g > 0, %.0f s <= 1800 s", decreasing ? "yes" : "no",
              disjoint ? "yes" : "no", fit.constant, secs),
          secs);
}

void range_bounds() {
  const auto t0 = std::chrono::steady_clock::now();
  const Partition m22({2, 2});
  std::uint64_t upper = 0, lower = 0;
  for (std::uint64_t n : {10000u, 100000u}) {
    const auto s = estimate_range_stats(m22, nullptr, n, 10.0, mc(1000, 600 + n));
    upper += s.upper_violations;
    lower += s.lower_violations;
    note("n=%-6llu E[r_n/n]=%s min r=%lld max r=%lld", (unsigned long long)n, ci(s.mean_ratio(n)).c_str(),
         (long long)s.range.min, (long long)s.range.max);
  }
  verdict(5, "range bounds", upper == 0 && lower == 0,
          fmt("violations r_n > 0.99n: %llu, r_n < n/(10 ln n)^2: %llu", (unsigned long long)upper,
              (unsigned long long)lower),
          seconds_since(t0));
}

void transience_contrast() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto walk = estimate_returns_to_origin(Partition({2, 2}), nullptr, 1u << 22, mc(100, 700));
  const Estimate late = walk.late.estimate();
  const auto small = srw::returns_to_origin_srw(1u << 18, mc(100, 701));
  const auto large = srw::returns_to_origin_srw(1u << 22, mc(100, 702));
  const Estimate a = small.total.estimate(), b = large.total.estimate();
  note("M(2,2) late returns (k > 2^21): %s, total %s", ci(late).c_str(), ci(walk.total.estimate()).c_str());
  note("SRW returns by 2^18: %s; by 2^22: %s", ci(a).c_str(), ci(b).c_str());
  const double sd_a = a.stderr_ * 10, sd_b = b.stderr_ * 10;
  note("per-replica sd %.3g and %.3g; disjoint CIs for this gap need ~%.0f replicas per point", sd_a, sd_b,
       replicas_to_separate(sd_a, sd_b, b.point - a.point));
  const bool ok = late.point < 0.05 && b.point > a.point && a.disjoint_from(b);
  verdict(6, "transience contrast", ok,
          fmt("M(2,2) late mean %.3g (< 0.05); SRW mean %.3g -> %.3g, disjoint CIs %s", late.point, a.point, b.point,
              a.disjoint_from(b) ? "yes" : "no"),
          seconds_since(t0));
}

void srw_scaling() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> local, window;
  for (std::uint64_t e : {10u, 14u, 18u}) {
    const std::uint64_t n = 1ULL << e;
    const double l = std::log(static_cast<double>(n));
    const Estimate nstar = srw::estimate_max_local_time(n, mc(1000, 800 + e)).estimate();
    const Estimate w = srw::estimate_return_window_srw(n, n, mc(1000, 900 + e)).estimate();
    local.push_back(nstar.point / (l * l));
    window.push_back(w.point * l / std::log(l));
    note("n=2^%-2llu E[N*]=%s  /(ln n)^2=%.4g   window p=%s  *ln n/lnln n=%.4g", (unsigned long long)e,
         ci(nstar).c_str(), local.back(), ci(w).c_str(), window.back());
  }
  auto spread = [](const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo > 0 ? *hi / *lo : INFINITY;
  };
  const double s1 = spread(local), s2 = spread(window);
  verdict(7, "srw reference scaling", s1 < 2 && s2 < 2,
          fmt("max/min of N*/(ln n)^2 = %.3g, of p ln n/lnln n = %.3g (< 2)", s1, s2), seconds_since(t0));
}

void determinism_and_merge() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  const char* configs[] = {
      R"({"kind":"return-window","partition":[2,2],"n_grid":[1,64,256],"replicas":20000,"seed":20261018})",
      R"({"kind":"returns","partition":[2,2],"n_grid":[1024],"replicas":1000,"srw_baseline":true,"seed":20261018})",
      R"({"kind":"decomposition-test","partition":[2,2],"n_grid":[500],"replicas":4000,"seed":20261018})",
  };
  for (const char* text : configs) {
    ExperimentConfig c = config_from_json(json::parse(text));
    c.workers = 1;
    const auto one = run_experiment(c);
    c.workers = 8;
    const auto eight = run_experiment(c);
    ok = ok && one.csv(false) == eight.csv(false) && one.summary()["rows"].size() == eight.summary()["rows"].size();

    std::vector<ExperimentReport> parts;
    const std::uint64_t cut[] = {0, c.replicas / 3, c.replicas / 2, c.replicas};
    for (int i = 2; i >= 0; --i) {
      auto part = c;
      part.workers = 1 + i;
      part.replica_range = std::pair{cut[i], cut[i + 1]};
      parts.push_back(report_from_summary(run_experiment(part).summary()));
    }
    ok = ok && merge_results(parts).csv(false) == one.csv(false);
  }
  verdict(8, "determinism and merge", ok, "workers 1 vs 8 byte-identical; 3-way split merge equals monolithic run",
          seconds_since(t0));
}

void performance() {
  const auto t0 = std::chrono::steady_clock::now();
  Walk<4> w(Partition({2, 2}), nullptr, kSeed);
  w.run(1000000);
  const double secs = seconds_since(t0);
  verdict(9, "performance", secs <= 0.5, fmt("one M(2,2) replica of 10^6 steps in %.3f s (<= 0.5 s), range %llu", secs,
                                             (unsigned long long)w.range_size()),
          secs);
}

void diagnostics() {
  const auto t0 = std::chrono::steady_clock::now();
  const char* configs[] = {
      R"({"kind":"shape","partition":[1,1],"n_grid":{"base":2,"from":10,"to":16,"step":2},"replicas":400,"seed":20261018})",
      R"({"kind":"strategy","dimension":2,"n_grid":[16384],"replicas":200,"seed":20261018})",
  };
  for (const char* text : configs) {
    const auto rep = run_experiment(config_from_json(json::parse(text)));
    for (const auto& r : rep.rows())
      note("%-8s n=%-6llu %-13s %s", r.kind.c_str(), (unsigned long long)r.n, r.label.c_str(), ci(r.estimate).c_str());
  }
  std::printf("[INFO] 10 diagnostics: shape ratio and strategy leaderboard reported above (%.1f s)\n",
              seconds_since(t0));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::function<void()>> steps{oracle_equivalence, decomposition, return_window_exact,
                                                 return_window_trend, range_bounds, transience_contrast,
                                                 srw_scaling, determinism_and_merge, performance, diagnostics};
  for (const auto& s : steps) {
    try {
      s();
    } catch (const std::exception& e) {
      std::printf("[FAIL] exception: %s\n", e.what());
      ++failures;
    }
  }
  std::printf("%d criteria failed; total %.0f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
