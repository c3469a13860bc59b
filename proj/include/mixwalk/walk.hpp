#pragma once

// Single-replica engine for the M(d_1, ..., d_m) walk. Departing a site that
// has been seen k times (walk arrivals plus environment pre-visits) moves
// block min(k, m) by a uniform signed unit vector of that block. S_0 is the
// origin's first arrival, so from an empty environment the first step always
// moves block 1.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "environment.hpp"
#include "errors.hpp"
#include "partition.hpp"
#include "rng.hpp"
#include "site.hpp"
#include "step_law.hpp"
#include "visit_table.hpp"

namespace mixwalk {

struct AxisExtent {
  std::int32_t min = 0;
  std::int32_t max = 0;
  std::int64_t width() const noexcept { return std::int64_t{max} - min; }
  friend bool operator==(const AxisExtent&, const AxisExtent&) = default;
};

/// What `Walk::run` should record. The trajectory window is inclusive and
/// indexed by absolute time.
struct RecordingOptions {
  std::optional<std::pair<std::uint64_t, std::uint64_t>> window;
  bool fresh_times = false;
  bool origin_returns = false;
};

template <std::size_t D>
struct RunRecord {
  std::vector<std::pair<std::uint64_t, Site<D>>> trajectory;
  std::vector<std::uint64_t> fresh_times;  // k with S_k a first arrival, no pre-visit
  std::vector<std::uint64_t> origin_returns;  // k >= 1 with S_k = 0
};

template <std::size_t D>
class Walk {
 public:
  using Table = VisitTable<D>;

  Walk(Partition partition, std::shared_ptr<const Environment> env, std::uint64_t seed)
      : Walk(std::move(partition), std::move(env), Xoshiro256pp(seed)) {}

  Walk(Partition partition, std::shared_ptr<const Environment> env, Xoshiro256pp rng)
      : partition_(std::move(partition)), env_(std::move(env)), rng_(rng) {
    dim_ = partition_.dimension();
    if (dim_ == 0) throw ConfigError("walk: empty partition");
    if (dim_ > D) throw ConfigError("walk: partition dimension exceeds storage width");
    blocks_ = static_cast<std::uint32_t>(partition_.blocks());
    for (std::size_t b = 0; b < partition_.blocks(); ++b) {
      block_offset_[b] = static_cast<std::uint8_t>(partition_.offset(b));
      block_moves_[b] = static_cast<std::uint32_t>(2 * partition_.size(b));
    }
    if (env_ && !env_->is_empty()) {
      env_->validate(partition_);
      predicate_env_ = env_->is_predicate();
      if (const auto* f = std::get_if<Environment::Finite>(&env_->spec())) {
        for (const auto& [coords, count] : f->sites)
          visits_.find_or_insert(to_site<D>(coords), [&](auto& e) { e.env = count; });
      }
    } else {
      env_.reset();
    }
    arrive();
    range_ = 1;
  }

  // --- state ---------------------------------------------------------------
  const Partition& partition() const noexcept { return partition_; }
  std::size_t dimension() const noexcept { return dim_; }
  const Site<D>& position() const noexcept { return pos_; }
  Coords position_coords() const { return to_coords(pos_, dim_); }
  std::uint64_t time() const noexcept { return time_; }
  std::uint64_t range_size() const noexcept { return range_; }
  std::uint64_t fresh_steps() const noexcept { return fresh_steps_; }
  const Table& visits() const noexcept { return visits_; }
  const Environment* environment() const noexcept { return env_.get(); }

  /// Walk arrivals plus pre-visits at the current position.
  std::uint64_t current_visit_count() const noexcept {
    return std::uint64_t{cur_walk_} + cur_env_;
  }
  bool at_fresh_site() const noexcept { return cur_walk_ == 1 && cur_env_ == 0; }

  std::uint64_t walk_count(const Site<D>& s) const noexcept {
    const auto* e = visits_.find(s);
    return e ? e->walk : 0;
  }

  /// Total count (walk + environment) of an arbitrary site.
  std::uint64_t visit_count(const Site<D>& s) const {
    if (const auto* e = visits_.find(s)) return std::uint64_t{e->walk} + e->env;
    if (predicate_env_)
      return env_->predicate_count(std::span<const std::int32_t>(s.data(), dim_), partition_);
    return 0;
  }

  /// Per-axis extents of walk-visited sites.
  std::vector<AxisExtent> bounding_box() const {
    std::vector<AxisExtent> out(dim_);
    for (std::size_t a = 0; a < dim_; ++a) out[a] = {lo_[a], hi_[a]};
    return out;
  }

  // --- dynamics --------------------------------------------------------------
  void step() {
    const std::uint32_t total = cur_walk_ + cur_env_;
    const std::uint32_t block = (total < blocks_ ? total : blocks_) - 1;
    const std::uint32_t u = rng_.below(block_moves_[block]);
    move_axis(block_offset_[block] + (u >> 1), (u & 1) ? -1 : 1);
  }

  /// Jump from mu1 at fresh sites, from mu2 everywhere else.
  void step_general(const StepLaw& mu1, const StepLaw& mu2) {
    if (mu1.dimension() != dim_ || mu2.dimension() != dim_)
      throw ConfigError("step_general: law dimension differs from walk dimension");
    const StepLaw& law = at_fresh_site() ? mu1 : mu2;
    const Coords& off = law.offset(law.sample_index(rng_));
    Site<D> next = pos_;
    for (std::size_t a = 0; a < dim_; ++a) next[a] = checked_add(pos_[a], off[a]);
    const bool fresh = at_fresh_site();
    pos_ = next;
    for (std::size_t a = 0; a < dim_; ++a) {
      lo_[a] = std::min(lo_[a], pos_[a]);
      hi_[a] = std::max(hi_[a], pos_[a]);
    }
    finish_step(fresh);
  }

  /// The strategy picks an axis (0-based) from a read-only view of the walk;
  /// that axis then moves by ±1 with probability 1/2 each.
  template <class Strategy>
  void step_controlled(Strategy&& strategy) {
    const std::size_t axis = strategy(std::as_const(*this));
    if (axis >= dim_)
      throw ConfigError("strategy returned axis " + std::to_string(axis) + " outside 0.." +
                        std::to_string(dim_ - 1));
    move_axis(axis, rng_.coin() ? -1 : 1);
  }

  void run(std::uint64_t n) {
    for (std::uint64_t i = 0; i < n; ++i) step();
  }

  RunRecord<D> run(std::uint64_t n, const RecordingOptions& opts) {
    RunRecord<D> rec;
    const Site<D> origin{};
    auto record = [&] {
      if (opts.window && time_ >= opts.window->first && time_ <= opts.window->second)
        rec.trajectory.emplace_back(time_, pos_);
      if (opts.fresh_times && at_fresh_site()) rec.fresh_times.push_back(time_);
      if (opts.origin_returns && time_ > 0 && pos_ == origin) rec.origin_returns.push_back(time_);
    };
    if (time_ == 0) record();
    for (std::uint64_t i = 0; i < n; ++i) {
      step();
      record();
    }
    return rec;
  }

 private:
  static std::int32_t checked_add(std::int32_t x, std::int64_t delta) {
    const std::int64_t r = std::int64_t{x} + delta;
    if (r > std::numeric_limits<std::int32_t>::max() || r < std::numeric_limits<std::int32_t>::min())
      throw OverflowError("walk: coordinate leaves the signed 32-bit range");
    return static_cast<std::int32_t>(r);
  }

  void move_axis(std::size_t axis, std::int32_t delta) {
    const bool fresh = at_fresh_site();
    pos_[axis] = checked_add(pos_[axis], delta);
    lo_[axis] = std::min(lo_[axis], pos_[axis]);
    hi_[axis] = std::max(hi_[axis], pos_[axis]);
    finish_step(fresh);
  }

  void finish_step(bool departed_fresh) {
    if (departed_fresh) ++fresh_steps_;
    ++time_;
    if (arrive()) ++range_;
  }

  // Records an arrival at pos_; true on the walk's first arrival there.
  bool arrive() {
    auto& e = visits_.find_or_insert(pos_, [&](auto& entry) {
      if (predicate_env_)
        entry.env = env_->predicate_count(std::span<const std::int32_t>(pos_.data(), dim_),
                                          partition_);
    });
    ++e.walk;
    cur_walk_ = e.walk;
    cur_env_ = e.env;
    return e.walk == 1;
  }

  Partition partition_;
  std::shared_ptr<const Environment> env_;
  Xoshiro256pp rng_;
  std::size_t dim_ = 0;
  std::uint32_t blocks_ = 1;
  std::array<std::uint8_t, kMaxDim> block_offset_{};
  std::array<std::uint32_t, kMaxDim> block_moves_{};
  bool predicate_env_ = false;

  Site<D> pos_{};
  std::uint64_t time_ = 0;
  std::uint64_t range_ = 0;
  std::uint64_t fresh_steps_ = 0;
  std::uint32_t cur_walk_ = 0;
  std::uint32_t cur_env_ = 0;
  Site<D> lo_{};
  Site<D> hi_{};
  Table visits_;
};

/// Convenience constructor for the common empty-environment case.
template <std::size_t D>
Walk<D> new_walk(const Partition& p, std::uint64_t seed,
                 std::shared_ptr<const Environment> env = nullptr) {
  return Walk<D>(p, std::move(env), seed);
}

}  // namespace mixwalk
