#pragma once

// Monte Carlo estimators over independent replicas of the walk. Each
// estimator returns an exact, mergeable accumulator; Estimates are derived
// from it on demand.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "enumeration.hpp"
#include "environment.hpp"
#include "errors.hpp"
#include "parallel.hpp"
#include "partition.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "strategy.hpp"
#include "walk.hpp"

namespace mixwalk {

using EnvironmentPtr = std::shared_ptr<const Environment>;

inline EnvironmentPtr share(Environment env) {
  return std::make_shared<const Environment>(std::move(env));
}

// --- empirical law of S_n ----------------------------------------------------

struct EmpiricalLaw {
  std::map<Coords, std::uint64_t> counts;
  std::uint64_t total = 0;

  void merge(const EmpiricalLaw& o) {
    for (const auto& [s, c] : o.counts) counts[s] += c;
    total += o.total;
  }

  /// 1/2 sum |empirical - exact|.
  double total_variation(const ExactDistribution& exact) const {
    double tv = 0;
    for (const auto& [site, p] : exact.entries) {
      auto it = counts.find(site);
      const double emp = it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
      tv += std::abs(emp - p.convert_to<double>());
    }
    for (const auto& [site, c] : counts)
      if (!exact.entries.count(site)) tv += static_cast<double>(c) / static_cast<double>(total);
    return tv / 2;
  }
};

inline EmpiricalLaw empirical_distribution(const Partition& p, EnvironmentPtr env, std::uint64_t n,
                                           const MonteCarlo& mc) {
  return with_storage(p.dimension(), [&]<std::size_t D>() {
    struct Acc {
      std::map<Site<D>, std::uint64_t> counts;
      void merge(const Acc& o) {
        for (const auto& [s, c] : o.counts) counts[s] += c;
      }
    };
    const Acc acc = run_replicas<Acc>(mc, [&](std::uint64_t i, Acc& a) {
      Walk<D> w(p, env, mc.replica_seed(i));
      w.run(n);
      ++a.counts[w.position()];
    });
    EmpiricalLaw law;
    for (const auto& [s, c] : acc.counts) {
      law.counts[to_coords(s, p.dimension())] += c;
      law.total += c;
    }
    return law;
  });
}

// --- return window -----------------------------------------------------------

/// Bernoulli estimate of P[0 in {S_n, ..., S_2n}].
inline BernoulliCounter estimate_return_window(const Partition& p, EnvironmentPtr env,
                                               std::uint64_t n, const MonteCarlo& mc) {
  if (mc.replicas == 0) throw ConfigError("replicas must be >= 1");
  return with_storage(p.dimension(), [&]<std::size_t D>() {
    return run_replicas<BernoulliCounter>(mc, [&](std::uint64_t i, BernoulliCounter& acc) {
      Walk<D> w(p, env, mc.replica_seed(i));
      const Site<D> origin{};
      w.run(n);
      bool hit = w.position() == origin;
      for (std::uint64_t k = n; k < 2 * n && !hit; ++k) {
        w.step();
        hit = w.position() == origin;
      }
      acc.add(hit);
    });
  });
}

// --- range statistics --------------------------------------------------------

struct RangeStats {
  MeanAccumulator range;
  std::uint64_t upper_violations = 0;  // r_n > 99 n / 100
  std::uint64_t lower_violations = 0;  // r_n < n / (C ln n)^2

  void merge(const RangeStats& o) {
    range.merge(o.range);
    upper_violations += o.upper_violations;
    lower_violations += o.lower_violations;
  }
  friend bool operator==(const RangeStats&, const RangeStats&) = default;

  /// Estimate of E[r_n / n].
  Estimate mean_ratio(std::uint64_t n) const { return range.estimate(static_cast<double>(n)); }
};

inline double range_lower_bound(std::uint64_t n, double c) {
  const double l = c * std::log(static_cast<double>(n));
  return static_cast<double>(n) / (l * l);
}

inline RangeStats estimate_range_stats(const Partition& p, EnvironmentPtr env, std::uint64_t n,
                                       double c, const MonteCarlo& mc) {
  if (n < 2) throw ConfigError("range stats: n must be >= 2");
  if (!(c > 0)) throw ConfigError("range stats: bound constant C must be > 0");
  const double lower = range_lower_bound(n, c);
  return with_storage(p.dimension(), [&]<std::size_t D>() {
    return run_replicas<RangeStats>(mc, [&](std::uint64_t i, RangeStats& acc) {
      Walk<D> w(p, env, mc.replica_seed(i));
      w.run(n);
      const std::uint64_t r = w.range_size();
      acc.range.add(static_cast<std::int64_t>(r));
      if (100 * r > 99 * n) ++acc.upper_violations;
      if (static_cast<double>(r) < lower) ++acc.lower_violations;
    });
  });
}

// --- returns to the origin ---------------------------------------------------

inline ReturnsSummary estimate_returns_to_origin(const Partition& p, EnvironmentPtr env,
                                                 std::uint64_t n, const MonteCarlo& mc) {
  if (n < 1) throw ConfigError("returns: n must be >= 1");
  return with_storage(p.dimension(), [&]<std::size_t D>() {
    return run_replicas<ReturnsSummary>(mc, [&](std::uint64_t i, ReturnsSummary& acc) {
      Walk<D> w(p, env, mc.replica_seed(i));
      const Site<D> origin{};
      std::uint64_t total = 0, late = 0;
      for (std::uint64_t k = 1; k <= n; ++k) {
        w.step();
        if (w.position() == origin) {
          ++total;
          if (2 * k > n) ++late;
        }
      }
      acc.add(total, late);
    });
  });
}

// --- range shape -------------------------------------------------------------

inline constexpr double kShapeScale = 16777216.0;  // 2^24 ticks per unit ratio

struct ShapeSummary {
  MeanAccumulator ratio;  // floor(2^24 W / H) per replica with H > 0
  std::uint64_t zero_height = 0;

  void merge(const ShapeSummary& o) {
    ratio.merge(o.ratio);
    zero_height += o.zero_height;
  }
  friend bool operator==(const ShapeSummary&, const ShapeSummary&) = default;

  Estimate estimate() const { return ratio.estimate(kShapeScale); }
};

/// E[W_n / H_n] for M(1,1), W and H the x and y extents of the range;
/// replicas with H_n = 0 are counted apart.
inline ShapeSummary estimate_shape_ratio(const Partition& p, EnvironmentPtr env, std::uint64_t n,
                                         const MonteCarlo& mc) {
  if (p.dims() != std::vector<int>{1, 1}) throw ConfigError("shape: partition must be M(1,1)");
  return run_replicas<ShapeSummary>(mc, [&](std::uint64_t i, ShapeSummary& acc) {
    Walk<2> w(p, env, mc.replica_seed(i));
    w.run(n);
    const auto box = w.bounding_box();
    const std::int64_t width = box[0].width(), height = box[1].width();
    if (height == 0) {
      ++acc.zero_height;
      return;
    }
    acc.ratio.add((width << 24) / height);
  });
}

// --- controlled walk ---------------------------------------------------------

/// E[r_n] of the controlled walk in Z^d; make(seed) builds a fresh strategy
/// for each replica.
template <class MakeStrategy>
  requires std::invocable<MakeStrategy&, std::uint64_t>
MeanAccumulator evaluate_strategy(MakeStrategy&& make, std::size_t d, std::uint64_t n,
                                  const MonteCarlo& mc) {
  const Partition p(std::vector<int>{static_cast<int>(d)});
  return with_storage(d, [&]<std::size_t D>() {
    return run_replicas<MeanAccumulator>(mc, [&](std::uint64_t i, MeanAccumulator& acc) {
      const std::uint64_t seed = mc.replica_seed(i);
      Walk<D> w(p, nullptr, seed);
      auto strategy = make(derive_seed(seed, {0x57A7}));
      for (std::uint64_t k = 0; k < n; ++k) w.step_controlled(strategy);
      acc.add(static_cast<std::int64_t>(w.range_size()));
    });
  });
}

inline MeanAccumulator evaluate_strategy(const std::string& name, std::size_t d, std::uint64_t n,
                                         const MonteCarlo& mc) {
  make_strategy(name, 0);  // validates the name up front
  return evaluate_strategy(
      [&](std::uint64_t seed) {
        return [s = make_strategy(name, seed)]<std::size_t D>(const Walk<D>& w) mutable {
          return std::visit([&](auto& impl) { return impl(w); }, s);
        };
      },
      d, n, mc);
}

// --- time-change decomposition ----------------------------------------------

/// Cell of S_n for the chi-square test: orthant of each block (coordinate
/// >= 0 per bit) times a shell of |block|^2 / n with edges 0.1, 0.3, 0.7.
inline std::size_t decomposition_cell(std::span<const std::int32_t> s, const Partition& p,
                                      std::uint64_t n) {
  std::size_t cell = 0;
  for (std::size_t b = 0; b < 2; ++b) {
    std::size_t orthant = 0;
    std::int64_t norm2 = 0;
    for (std::size_t a = p.offset(b); a < p.offset(b + 1); ++a) {
      orthant = orthant * 2 + (s[a] >= 0 ? 1 : 0);
      norm2 += std::int64_t{s[a]} * s[a];
    }
    const std::int64_t scaled = 10 * norm2, nn = static_cast<std::int64_t>(n);
    const std::size_t shell = scaled < nn ? 0 : scaled < 3 * nn ? 1 : scaled < 7 * nn ? 2 : 3;
    cell = (cell << p.size(b)) | orthant;
    cell = cell * 4 + shell;
  }
  return cell;
}

inline std::size_t decomposition_cell_count(const Partition& p) {
  return (std::size_t{1} << p.dimension()) * 16;
}

struct DecompositionCells {
  std::vector<std::uint64_t> direct;
  std::vector<std::uint64_t> reconstructed;

  void merge(const DecompositionCells& o) {
    if (direct.size() < o.direct.size()) direct.resize(o.direct.size());
    if (reconstructed.size() < o.reconstructed.size()) reconstructed.resize(o.reconstructed.size());
    for (std::size_t i = 0; i < o.direct.size(); ++i) direct[i] += o.direct[i];
    for (std::size_t i = 0; i < o.reconstructed.size(); ++i) reconstructed[i] += o.reconstructed[i];
  }
  friend bool operator==(const DecompositionCells&, const DecompositionCells&) = default;

  ChiSquareResult test() const { return chi_square_two_sample(direct, reconstructed); }
};

/// S_n rebuilt from independent walks U (block 1) and V (block 2) consumed
/// on first arrivals and on revisits respectively (swapped when inverted).
template <std::size_t D>
Site<D> reconstruct_position(const Partition& p, std::uint64_t n, Xoshiro256pp& u_rng,
                             Xoshiro256pp& v_rng, bool inverted) {
  VisitTable<D> seen(64);
  Site<D> s{};
  std::uint32_t arrivals = ++seen.find_or_insert(s, [](auto&) {}).walk;
  const auto moves_u = static_cast<std::uint32_t>(2 * p.size(0));
  const auto moves_v = static_cast<std::uint32_t>(2 * p.size(1));
  for (std::uint64_t k = 0; k < n; ++k) {
    const bool use_u = (arrivals == 1) != inverted;
    const std::uint32_t r = use_u ? u_rng.below(moves_u) : v_rng.below(moves_v);
    const std::size_t axis = (use_u ? p.offset(0) : p.offset(1)) + (r >> 1);
    s[axis] += (r & 1) ? -1 : 1;
    arrivals = ++seen.find_or_insert(s, [](auto&) {}).walk;
  }
  return s;
}

struct DecompositionReport {
  DecompositionCells cells;
  ChiSquareResult chi;
};

inline DecompositionCells decomposition_cells(const Partition& p, std::uint64_t n,
                                              const MonteCarlo& mc, bool inverted = false) {
  if (p.blocks() != 2) throw ConfigError("decomposition: partition must have exactly two blocks");
  const std::size_t ncells = decomposition_cell_count(p);
  return with_storage(p.dimension(), [&]<std::size_t D>() {
    return run_replicas<DecompositionCells>(mc, [&](std::uint64_t i, DecompositionCells& acc) {
      if (acc.direct.empty()) {
        acc.direct.assign(ncells, 0);
        acc.reconstructed.assign(ncells, 0);
      }
      const std::uint64_t seed = mc.replica_seed(i);
      Walk<D> w(p, nullptr, derive_seed(seed, {0}));
      w.run(n);
      ++acc.direct[decomposition_cell(std::span<const std::int32_t>(w.position().data(), p.dimension()), p, n)];
      Xoshiro256pp u(derive_seed(seed, {1})), v(derive_seed(seed, {2}));
      const Site<D> s = reconstruct_position<D>(p, n, u, v, inverted);
      ++acc.reconstructed[decomposition_cell(std::span<const std::int32_t>(s.data(), p.dimension()), p, n)];
    });
  });
}

inline DecompositionReport decomposition_consistency_test(const Partition& p, std::uint64_t n,
                                                          const MonteCarlo& mc,
                                                          bool inverted = false) {
  DecompositionReport r;
  r.cells = decomposition_cells(p, n, mc, inverted);
  r.chi = r.cells.test();
  return r;
}

}  // namespace mixwalk
