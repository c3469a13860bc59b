#pragma once

// Initial configurations of pre-visited sites. Pre-visit counts add to the
// walk's own arrival counts when the active block is chosen, but never count
// toward the range.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "partition.hpp"
#include "site.hpp"

namespace mixwalk {

class Environment {
 public:
  struct Empty {};
  struct Finite {
    std::vector<std::pair<Coords, std::uint32_t>> sites;
  };
  /// Sites whose coordinates outside `free_block` equal `fixed` (listed in
  /// axis order, skipping the free block).
  struct Line {
    std::size_t free_block = 0;
    Coords fixed;
    std::uint32_t count = 1;
  };
  /// {(x, y) : |y| < e^x} in Z^2.
  struct Trumpet {
    std::uint32_t count = 1;
  };
  using Spec = std::variant<Empty, Finite, Line, Trumpet>;

  Environment() = default;
  explicit Environment(Spec spec) : spec_(std::move(spec)) {}

  static Environment empty() { return Environment(Empty{}); }
  static Environment finite(std::vector<std::pair<Coords, std::uint32_t>> sites) {
    return Environment(Finite{std::move(sites)});
  }
  static Environment line(std::size_t free_block, Coords fixed, std::uint32_t count = 1) {
    return Environment(Line{free_block, std::move(fixed), count});
  }
  static Environment trumpet(std::uint32_t count = 1) { return Environment(Trumpet{count}); }

  const Spec& spec() const noexcept { return spec_; }
  bool is_empty() const noexcept { return std::holds_alternative<Empty>(spec_); }
  bool is_predicate() const noexcept {
    return std::holds_alternative<Line>(spec_) || std::holds_alternative<Trumpet>(spec_);
  }
  std::string kind_name() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Empty>) return "empty";
          else if constexpr (std::is_same_v<T, Finite>) return "finite";
          else if constexpr (std::is_same_v<T, Line>) return "line";
          else return "trumpet";
        },
        spec_);
  }

  void validate(const Partition& p) const {
    const std::size_t d = p.dimension();
    if (const auto* f = std::get_if<Finite>(&spec_)) {
      std::vector<Coords> seen;
      for (const auto& [site, count] : f->sites) {
        if (site.size() != d)
          throw ConfigError("environment: site (" + format_coords(site) + ") has dimension " +
                            std::to_string(site.size()) + ", partition has " +
                            std::to_string(d));
        if (count < 1) throw ConfigError("environment: pre-visit count must be >= 1");
        seen.push_back(site);
      }
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
        throw ConfigError("environment: finite site list contains duplicates");
    } else if (const auto* l = std::get_if<Line>(&spec_)) {
      if (l->free_block >= p.blocks())
        throw ConfigError("environment: line block index out of range");
      if (l->fixed.size() != d - p.size(l->free_block))
        throw ConfigError("environment: line needs " + std::to_string(d - p.size(l->free_block)) +
                          " fixed coordinates, got " + std::to_string(l->fixed.size()));
      if (l->count < 1) throw ConfigError("environment: pre-visit count must be >= 1");
    } else if (const auto* t = std::get_if<Trumpet>(&spec_)) {
      if (d != 2) throw ConfigError("environment: trumpet requires dimension 2");
      if (t->count < 1) throw ConfigError("environment: pre-visit count must be >= 1");
    }
  }

  /// Pre-visit count of a site under a predicate family (0 for non-members).
  std::uint32_t predicate_count(std::span<const std::int32_t> site, const Partition& p) const {
    if (const auto* l = std::get_if<Line>(&spec_)) {
      const std::size_t lo = p.offset(l->free_block), hi = p.offset(l->free_block + 1);
      std::size_t k = 0;
      for (std::size_t axis = 0; axis < p.dimension(); ++axis) {
        if (axis >= lo && axis < hi) continue;
        if (site[axis] != l->fixed[k++]) return 0;
      }
      return l->count;
    }
    if (const auto* t = std::get_if<Trumpet>(&spec_))
      return in_trumpet(site[0], site[1]) ? t->count : 0;
    return 0;
  }

  /// Pre-visit count of any site (linear scan for finite lists).
  std::uint32_t pre_visits(std::span<const std::int32_t> site, const Partition& p) const {
    if (const auto* f = std::get_if<Finite>(&spec_)) {
      for (const auto& [s, count] : f->sites)
        if (std::equal(s.begin(), s.end(), site.begin())) return count;
      return 0;
    }
    return predicate_count(site, p);
  }

  /// |y| < e^x. Always true on y = 0. For |y| >= 1 membership needs x >= 1,
  /// and e^22 already exceeds every 32-bit |y|; in between the double
  /// comparison is exact because e^x stays far from integers.
  static bool in_trumpet(std::int32_t x, std::int32_t y) {
    if (y == 0) return true;
    if (x <= 0) return false;
    if (x >= 22) return true;
    return static_cast<double>(std::llabs(y)) < std::exp(static_cast<double>(x));
  }

 private:
  Spec spec_{Empty{}};
};

}  // namespace mixwalk
