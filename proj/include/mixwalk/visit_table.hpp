#pragma once

// Open-addressing visit map keyed by a whole Site<D> array. A slot is empty
// iff both counts are zero: every stored site is either walk-visited or
// carries a pre-visit, so no separate occupancy array is needed. Entries are
// never erased.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <vector>

#include "rng.hpp"
#include "site.hpp"

namespace mixwalk {

template <std::size_t D>
class VisitTable {
  static_assert(D % 2 == 0, "storage width must be even");

 public:
  struct Entry {
    Site<D> site;
    std::uint32_t walk;  // arrivals of the walk itself
    std::uint32_t env;   // pre-visits from the environment
  };

  explicit VisitTable(std::size_t initial_capacity = 64) { reset(initial_capacity); }

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return slots_.size(); }

  const Entry* find(const Site<D>& s) const noexcept {
    for (std::size_t i = hash(s) & mask_;; i = (i + 1) & mask_) {
      const Entry& e = slots_[i];
      if (is_empty(e)) return nullptr;
      if (e.site == s) return &e;
    }
  }

  /// Returns the entry for `s`, inserting a zeroed one when absent and
  /// passing it to `init`. The caller must leave a nonzero count on a new
  /// entry before the next insertion. References die on the next insertion.
  template <class Init>
  Entry& find_or_insert(const Site<D>& s, Init&& init) {
    std::size_t i = hash(s) & mask_;
    for (;; i = (i + 1) & mask_) {
      Entry& e = slots_[i];
      if (is_empty(e)) break;
      if (e.site == s) return e;
    }
    if (2 * (size_ + 1) > slots_.size()) {
      grow();
      i = hash(s) & mask_;
      while (!is_empty(slots_[i])) i = (i + 1) & mask_;
    }
    Entry& e = slots_[i];
    e.site = s;
    ++size_;
    init(e);
    return e;
  }

  template <class F>
  void for_each(F&& f) const {
    for (const Entry& e : slots_)
      if (!is_empty(e)) f(e);
  }

  void clear() noexcept {
    std::memset(static_cast<void*>(slots_.data()), 0, slots_.size() * sizeof(Entry));
    size_ = 0;
  }

  static std::uint64_t hash(const Site<D>& s) noexcept {
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < D; i += 2) {
      const std::uint64_t w = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s[i])) << 32) |
                              static_cast<std::uint32_t>(s[i + 1]);
      h = (h ^ w) * 0x9E3779B97F4A7C15ULL;
      h ^= h >> 29;
    }
    return mix64(h);
  }

 private:
  static bool is_empty(const Entry& e) noexcept { return (e.walk | e.env) == 0; }

  void reset(std::size_t capacity) {
    std::size_t cap = 8;
    while (cap < capacity) cap <<= 1;
    slots_.assign(cap, Entry{});
    mask_ = cap - 1;
    size_ = 0;
  }

  void grow() {
    std::vector<Entry> old = std::move(slots_);
    slots_.assign(old.size() * 2, Entry{});
    mask_ = slots_.size() - 1;
    for (const Entry& e : old) {
      if (is_empty(e)) continue;
      std::size_t i = hash(e.site) & mask_;
      while (!is_empty(slots_[i])) i = (i + 1) & mask_;
      slots_[i] = e;
    }
  }

  std::vector<Entry> slots_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
};

}  // namespace mixwalk
