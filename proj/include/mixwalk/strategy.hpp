#pragma once

// Coordinate-choice rules for the controlled walk. A strategy is any callable
// taking `const Walk<D>&` and returning an axis index; the built-ins below
// carry their own random streams so they stay pure given (state, stream).

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "walk.hpp"

namespace mixwalk {

struct AlwaysFirst {
  template <std::size_t D>
  std::size_t operator()(const Walk<D>&) const noexcept { return 0; }
};

struct RoundRobin {
  template <std::size_t D>
  std::size_t operator()(const Walk<D>& w) const noexcept {
    return static_cast<std::size_t>(w.time() % w.dimension());
  }
};

struct UniformAxis {
  Xoshiro256pp rng;
  template <std::size_t D>
  std::size_t operator()(const Walk<D>& w) {
    return rng.below(static_cast<std::uint32_t>(w.dimension()));
  }
};

/// Prefers axes with the most unvisited neighbours along them; ties are
/// broken uniformly.
struct GreedyFresh {
  Xoshiro256pp rng;
  template <std::size_t D>
  std::size_t operator()(const Walk<D>& w) {
    std::array<std::size_t, kMaxDim> best{};
    std::size_t n_best = 0;
    int best_score = -1;
    for (std::size_t a = 0; a < w.dimension(); ++a) {
      int score = 0;
      for (int delta : {-1, 1}) {
        Site<D> s = w.position();
        const std::int64_t next = std::int64_t{s[a]} + delta;
        if (next < INT32_MIN || next > INT32_MAX) continue;
        s[a] = static_cast<std::int32_t>(next);
        if (w.walk_count(s) == 0) ++score;
      }
      if (score > best_score) {
        best_score = score;
        n_best = 0;
      }
      if (score == best_score) best[n_best++] = a;
    }
    return best[rng.below(static_cast<std::uint32_t>(n_best))];
  }
};

using BuiltinStrategy = std::variant<AlwaysFirst, RoundRobin, UniformAxis, GreedyFresh>;

inline const std::vector<std::string>& builtin_strategy_names() {
  static const std::vector<std::string> names{"always-first", "round-robin", "uniform",
                                              "greedy-fresh"};
  return names;
}

inline BuiltinStrategy make_strategy(std::string_view name, std::uint64_t seed) {
  if (name == "always-first") return AlwaysFirst{};
  if (name == "round-robin") return RoundRobin{};
  if (name == "uniform") return UniformAxis{Xoshiro256pp(seed)};
  if (name == "greedy-fresh") return GreedyFresh{Xoshiro256pp(seed)};
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

}  // namespace mixwalk
