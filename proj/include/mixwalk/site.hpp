#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mixwalk {

inline constexpr std::size_t kMaxDim = 8;

/// Lattice point with a compile-time storage width. Coordinates beyond the
/// walk's dimension are kept at zero so the whole array is the hash key
/// (D = 4 packs into 128 bits).
template <std::size_t D>
using Site = std::array<std::int32_t, D>;

/// Dimension-erased lattice point used at API boundaries.
using Coords = std::vector<std::int32_t>;

/// Smallest supported storage width holding d coordinates.
constexpr std::size_t storage_dim(std::size_t d) {
  if (d <= 2) return 2;
  if (d <= 4) return 4;
  return 8;
}

template <std::size_t D>
Coords to_coords(const Site<D>& s, std::size_t d) {
  return Coords(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(d));
}

template <std::size_t D>
Site<D> to_site(std::span<const std::int32_t> c) {
  if (c.size() > D) throw ConfigError("site has more coordinates than storage allows");
  Site<D> s{};
  for (std::size_t i = 0; i < c.size(); ++i) s[i] = c[i];
  return s;
}

inline std::string format_coords(std::span<const std::int32_t> c) {
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(c[i]);
  }
  return out;
}

/// Dispatches a template lambda on the storage width for dimension d:
/// `with_storage(d, [&]<std::size_t D>() { ... })`.
template <class F>
decltype(auto) with_storage(std::size_t d, F&& f) {
  if (d == 0 || d > kMaxDim) throw ConfigError("dimension must be in 1..8");
  if (d <= 2) return f.template operator()<2>();
  if (d <= 4) return f.template operator()<4>();
  return f.template operator()<8>();
}

}  // namespace mixwalk
