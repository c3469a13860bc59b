#pragma once

// Exact laws of the walk at small horizons by exhaustive weighted path
// enumeration. This code deliberately shares nothing with the simulation
// engine beyond the partition/environment data types: visit counts are
// recomputed from the path prefix by a linear scan.
//
// Every path of length n has weight prod_k 1/(2 d_{c_k}). With L the lcm of
// the 2 d_c, that is an integer numerator over L^n, so accumulation is exact
// in 64-bit integers and only the final values become arbitrary-precision
// rationals.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "environment.hpp"
#include "errors.hpp"
#include "partition.hpp"
#include "site.hpp"

namespace mixwalk {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline constexpr double kEnumerationCutoff = 1e7;

inline std::string to_fraction_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

struct ExactDistribution {
  std::size_t dimension = 0;
  std::uint64_t horizon = 0;
  std::map<Coords, Rational> entries;

  Rational probability(const Coords& site) const {
    auto it = entries.find(site);
    return it == entries.end() ? Rational(0) : it->second;
  }

  Rational total() const {
    Rational s = 0;
    for (const auto& [site, p] : entries) s += p;
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json probs = nlohmann::json::object();
    for (const auto& [site, p] : entries) probs[format_coords(site)] = to_fraction_string(p);
    return {{"dimension", dimension}, {"horizon", horizon}, {"probabilities", probs}};
  }
};

/// Exact total variation distance 1/2 sum |p - q|.
inline Rational total_variation(const ExactDistribution& a, const ExactDistribution& b) {
  Rational s = 0;
  for (const auto& [site, p] : a.entries) s += boost::multiprecision::abs(p - b.probability(site));
  for (const auto& [site, q] : b.entries)
    if (!a.entries.count(site)) s += q;
  return s / 2;
}

namespace detail {

using EnumPoint = std::array<std::int32_t, kMaxDim>;

inline void check_cutoff(std::size_t branching, std::uint64_t horizon) {
  if (std::pow(static_cast<double>(branching), static_cast<double>(horizon)) > kEnumerationCutoff)
    throw ResourceError("enumeration: " + std::to_string(branching) + "^" +
                        std::to_string(horizon) + " paths exceed the 1e7 cutoff");
}

inline std::uint64_t lcm_of_moves(const Partition& p) {
  std::uint64_t l = 1;
  for (int d : p.dims()) l = std::lcm(l, static_cast<std::uint64_t>(2 * d));
  return l;
}

inline std::uint64_t checked_power(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t r = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (r > UINT64_MAX / base) throw ResourceError("enumeration: weight denominator overflow");
    r *= base;
  }
  return r;
}

}  // namespace detail

/// Depth-first enumeration of every path S_0..S_n with its exact weight.
class PathEnumerator {
 public:
  using Point = detail::EnumPoint;

  PathEnumerator(Partition p, Environment env, std::uint64_t horizon)
      : p_(std::move(p)), env_(std::move(env)), n_(horizon) {
    if (std::holds_alternative<Environment::Trumpet>(env_.spec()))
      throw ConfigError("enumeration: only empty, finite and line environments are supported");
    env_.validate(p_);
    detail::check_cutoff(p_.max_branching(), n_);
    lcm_ = detail::lcm_of_moves(p_);
    denominator_ = detail::checked_power(lcm_, n_);
  }

  const Partition& partition() const noexcept { return p_; }
  std::uint64_t horizon() const noexcept { return n_; }
  /// Every path weight is numerator / denominator().
  std::uint64_t denominator() const noexcept { return denominator_; }

  /// f(std::span<const Point> path, std::uint64_t weight_numerator)
  template <class F>
  void for_each(F&& f) const {
    std::vector<Point> path(n_ + 1, Point{});
    dfs(path, 0, 1, f);
  }

  Rational weight(std::uint64_t numerator) const { return Rational(BigInt(numerator), BigInt(denominator_)); }

 private:
  template <class F>
  void dfs(std::vector<Point>& path, std::uint64_t k, std::uint64_t w, F& f) const {
    if (k == n_) {
      f(std::span<const Point>(path.data(), path.size()), w);
      return;
    }
    const Point& here = path[k];
    std::uint64_t count = env_.pre_visits(std::span<const std::int32_t>(here.data(), p_.dimension()), p_);
    for (std::uint64_t j = 0; j <= k; ++j)
      if (path[j] == here) ++count;
    const std::size_t block = std::min<std::uint64_t>(count, p_.blocks()) - 1;
    const std::uint64_t factor = lcm_ / (2 * p_.size(block));
    for (std::size_t a = p_.offset(block); a < p_.offset(block + 1); ++a) {
      for (int delta : {1, -1}) {
        path[k + 1] = path[k];
        path[k + 1][a] += delta;
        dfs(path, k + 1, w * factor, f);
      }
    }
  }

  Partition p_;
  Environment env_;
  std::uint64_t n_;
  std::uint64_t lcm_ = 1;
  std::uint64_t denominator_ = 1;
};

namespace detail {

inline ExactDistribution finish(const std::map<EnumPoint, std::uint64_t>& acc, std::size_t d,
                                std::uint64_t n, std::uint64_t den) {
  ExactDistribution out{d, n, {}};
  for (const auto& [pt, num] : acc)
    out.entries.emplace(Coords(pt.begin(), pt.begin() + static_cast<std::ptrdiff_t>(d)),
                        Rational(BigInt(num), BigInt(den)));
  return out;
}

}  // namespace detail

/// Exact law of S_n.
inline ExactDistribution exact_distribution(const Partition& p, const Environment& env,
                                            std::uint64_t n) {
  PathEnumerator en(p, env, n);
  std::map<detail::EnumPoint, std::uint64_t> acc;
  en.for_each([&](std::span<const detail::EnumPoint> path, std::uint64_t w) { acc[path.back()] += w; });
  return detail::finish(acc, p.dimension(), n, en.denominator());
}

/// Exact E[f(path)] where f maps a path to a Rational.
template <class F>
Rational exact_expectation(const Partition& p, const Environment& env, std::uint64_t n, F&& f) {
  PathEnumerator en(p, env, n);
  Rational acc = 0;
  en.for_each([&](std::span<const detail::EnumPoint> path, std::uint64_t w) {
    acc += en.weight(w) * f(path);
  });
  return acc;
}

/// Exact P[0 in {S_a, ..., S_b}].
inline Rational exact_window_probability(const Partition& p, const Environment& env,
                                         std::uint64_t a, std::uint64_t b) {
  if (a > b) throw ConfigError("window: start after end");
  PathEnumerator en(p, env, b);
  const detail::EnumPoint origin{};
  std::uint64_t hit = 0;
  en.for_each([&](std::span<const detail::EnumPoint> path, std::uint64_t w) {
    for (std::uint64_t k = a; k <= b; ++k)
      if (path[k] == origin) {
        hit += w;
        return;
      }
  });
  return en.weight(hit);
}

/// Exact P[0 in {S_n, ..., S_2n}] from the empty environment.
inline Rational exact_return_window(const Partition& p, std::uint64_t n) {
  return exact_window_probability(p, Environment::empty(), n, 2 * n);
}

/// Law of S_n built from two independent walks U (block 1) and V (block 2):
/// when the current composite site is a first arrival the next U increment
/// is consumed, otherwise the next V increment. `inverted` swaps the rule
/// (U on revisits) and serves as a negative control.
inline ExactDistribution exact_reconstruction_distribution(const Partition& p, std::uint64_t n,
                                                           bool inverted = false) {
  if (p.blocks() != 2) throw ConfigError("reconstruction: partition must have exactly two blocks");
  detail::check_cutoff(p.max_branching(), n);
  const std::size_t d1 = p.size(0), d2 = p.size(1);
  const std::uint64_t lcm = detail::lcm_of_moves(p);
  const std::uint64_t den = detail::checked_power(lcm, n);

  std::array<std::int32_t, kMaxDim> u{}, v{};
  std::vector<detail::EnumPoint> composite;
  composite.reserve(n + 1);
  std::map<detail::EnumPoint, std::uint64_t> acc;

  auto compose = [&] {
    detail::EnumPoint s{};
    for (std::size_t i = 0; i < d1; ++i) s[i] = u[i];
    for (std::size_t i = 0; i < d2; ++i) s[d1 + i] = v[i];
    return s;
  };

  std::function<void(std::uint64_t, std::uint64_t)> rec = [&](std::uint64_t k, std::uint64_t w) {
    if (k == n) {
      acc[composite.back()] += w;
      return;
    }
    std::size_t arrivals = 0;
    for (const auto& s : composite)
      if (s == composite.back()) ++arrivals;
    const bool fresh = arrivals == 1;
    const bool use_u = inverted ? !fresh : fresh;
    auto& walker = use_u ? u : v;
    const std::size_t dim = use_u ? d1 : d2;
    const std::uint64_t factor = lcm / (2 * dim);
    for (std::size_t a = 0; a < dim; ++a) {
      for (int delta : {1, -1}) {
        walker[a] += delta;
        composite.push_back(compose());
        rec(k + 1, w * factor);
        composite.pop_back();
        walker[a] -= delta;
      }
    }
  };
  composite.push_back(compose());
  rec(0, 1);
  return detail::finish(acc, p.dimension(), n, den);
}

}  // namespace mixwalk
