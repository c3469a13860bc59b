#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"
#include "site.hpp"

namespace mixwalk {

/// Ordered block sizes (d_1, ..., d_m). Block i (0-based) owns the
/// coordinates [offset(i), offset(i) + size(i)).
class Partition {
 public:
  Partition() = default;

  explicit Partition(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw ConfigError("partition: at least one block required");
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i] < 1)
        throw ConfigError("partition: block d_" + std::to_string(i + 1) +
                          " = " + std::to_string(dims_[i]) + " must be >= 1");
    }
    const int total = std::accumulate(dims_.begin(), dims_.end(), 0);
    if (total > static_cast<int>(kMaxDim))
      throw ConfigError("partition: total dimension " + std::to_string(total) +
                        " exceeds 8");
    offsets_.resize(dims_.size() + 1, 0);
    std::partial_sum(dims_.begin(), dims_.end(), offsets_.begin() + 1);
  }

  const std::vector<int>& dims() const noexcept { return dims_; }
  std::size_t blocks() const noexcept { return dims_.size(); }
  std::size_t dimension() const noexcept {
    return offsets_.empty() ? 0 : static_cast<std::size_t>(offsets_.back());
  }
  std::size_t size(std::size_t block) const { return static_cast<std::size_t>(dims_.at(block)); }
  std::size_t offset(std::size_t block) const {
    return static_cast<std::size_t>(offsets_.at(block));
  }

  std::size_t block_of(std::size_t axis) const {
    for (std::size_t b = 0; b < blocks(); ++b)
      if (axis < offset(b + 1)) return b;
    throw ConfigError("axis outside partition");
  }

  /// Largest number of signed unit moves available to any block.
  std::size_t max_branching() const noexcept {
    int best = 0;
    for (int d : dims_) best = std::max(best, 2 * d);
    return static_cast<std::size_t>(best);
  }

  std::string label() const {
    std::string s = "M(";
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) s += ',';
      s += std::to_string(dims_[i]);
    }
    return s + ')';
  }

  friend bool operator==(const Partition& a, const Partition& b) { return a.dims_ == b.dims_; }

 private:
  std::vector<int> dims_;
  std::vector<int> offsets_;
};

/// Block (0-based) that moves when departing a site seen `visit_count` times:
/// the i-th visit moves block i, every visit past the m-th moves the last one.
inline std::size_t component_for_visit(std::uint64_t visit_count, const Partition& p) {
  if (visit_count == 0)
    throw InvariantError("component_for_visit: departure site has no recorded arrival");
  const std::uint64_t m = p.blocks();
  return static_cast<std::size_t>((visit_count < m ? visit_count : m) - 1);
}

}  // namespace mixwalk
