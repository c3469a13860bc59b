#pragma once

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"
#include "site.hpp"

namespace mixwalk {

/// Positive rational weight num/den.
struct Weight {
  std::uint64_t num = 1;
  std::uint64_t den = 1;
};

/// Finitely supported symmetric jump law on Z^d with rational weights.
class StepLaw {
 public:
  StepLaw(std::size_t dimension, std::vector<std::pair<Coords, Weight>> support)
      : dim_(dimension) {
    if (support.empty()) throw ConfigError("step law: empty support");
    std::uint64_t den = 1;
    for (const auto& [offset, w] : support) {
      if (offset.size() != dim_) throw ConfigError("step law: offset dimension mismatch");
      if (w.num == 0 || w.den == 0) throw ConfigError("step law: weights must be positive");
      den = std::lcm(den, w.den / std::gcd(w.num, w.den));
      if (den > (1ULL << 62)) throw ConfigError("step law: weight denominators too large");
    }
    std::uint64_t acc = 0;
    for (const auto& [offset, w] : support) {
      const std::uint64_t g = std::gcd(w.num, w.den);
      const std::uint64_t scaled = (w.num / g) * (den / (w.den / g));
      acc += scaled;
      offsets_.push_back(offset);
      numerators_.push_back(scaled);
    }
    if (acc != den) throw ConfigError("step law: weights do not sum to 1");
    denominator_ = den;

    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      Coords neg(offsets_[i]);
      for (auto& c : neg) c = -c;
      bool found = false;
      for (std::size_t j = 0; j < offsets_.size() && !found; ++j)
        found = offsets_[j] == neg && numerators_[j] == numerators_[i];
      if (!found)
        throw ConfigError("step law: not symmetric at offset (" + format_coords(offsets_[i]) + ")");
    }
    cumulative_.resize(numerators_.size());
    std::partial_sum(numerators_.begin(), numerators_.end(), cumulative_.begin());
  }

  /// Uniform law on {±scale·e_a : a in axes}.
  static StepLaw unit_moves(std::size_t dimension, const std::vector<std::size_t>& axes,
                            std::int32_t scale = 1) {
    std::vector<std::pair<Coords, Weight>> support;
    for (std::size_t a : axes) {
      if (a >= dimension) throw ConfigError("step law: axis out of range");
      for (std::int32_t sign : {1, -1}) {
        Coords v(dimension, 0);
        v[a] = sign * scale;
        support.push_back({std::move(v), Weight{1, 2 * axes.size()}});
      }
    }
    return StepLaw(dimension, std::move(support));
  }

  std::size_t dimension() const noexcept { return dim_; }
  std::size_t support_size() const noexcept { return offsets_.size(); }
  const Coords& offset(std::size_t i) const { return offsets_.at(i); }
  Weight weight(std::size_t i) const { return {numerators_.at(i), denominator_}; }

  std::size_t sample_index(Xoshiro256pp& rng) const {
    const std::uint64_t u = rng.below64(denominator_);
    std::size_t i = 0;
    while (cumulative_[i] <= u) ++i;
    return i;
  }

  /// True when the support generates all of Z^d (row-echelon reduction with
  /// gcd pivots; the lattice is Z^d iff every pivot is a unit).
  bool generates_full_lattice() const {
    std::vector<std::vector<std::int64_t>> rows;
    for (const auto& o : offsets_) rows.emplace_back(o.begin(), o.end());
    std::size_t pivot = 0;
    for (std::size_t col = 0; col < dim_; ++col) {
      for (;;) {
        std::size_t best = rows.size();
        for (std::size_t r = pivot; r < rows.size(); ++r)
          if (rows[r][col] != 0 && (best == rows.size() ||
                                    std::llabs(rows[r][col]) < std::llabs(rows[best][col])))
            best = r;
        if (best == rows.size()) return false;
        std::swap(rows[pivot], rows[best]);
        bool reduced = true;
        for (std::size_t r = pivot + 1; r < rows.size(); ++r) {
          const std::int64_t q = rows[r][col] / rows[pivot][col];
          for (std::size_t c = col; c < dim_; ++c) rows[r][c] -= q * rows[pivot][c];
          if (rows[r][col] != 0) reduced = false;
        }
        if (reduced) break;
      }
      if (std::llabs(rows[pivot][col]) != 1) return false;
      ++pivot;
    }
    return true;
  }

 private:
  std::size_t dim_;
  std::vector<Coords> offsets_;
  std::vector<std::uint64_t> numerators_;
  std::vector<std::uint64_t> cumulative_;
  std::uint64_t denominator_ = 1;
};

}  // namespace mixwalk
