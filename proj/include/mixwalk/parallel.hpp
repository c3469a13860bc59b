#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace mixwalk {

/// Replica budget and stream identity of a Monte Carlo run. Replica i draws
/// from the stream keyed by (seed, stream, i), so the replicas
/// [first, first + count) of one run can be split into batches and merged.
struct MonteCarlo {
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t first_replica = 0;
  std::uint64_t stream = 0;

  std::uint64_t replica_seed(std::uint64_t i) const noexcept {
    return derive_seed(seed, {stream, i});
  }
  MonteCarlo with_stream(std::uint64_t s) const {
    MonteCarlo m = *this;
    m.stream = s;
    return m;
  }
};

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i, acc) for every replica index and merges per-worker
/// accumulators. Acc::merge must be exact so the result does not depend on
/// the worker count or on scheduling.
template <class Acc, class Body>
Acc run_replicas(const MonteCarlo& mc, Body&& body) {
  const std::uint64_t begin = mc.first_replica;
  const std::uint64_t end = mc.first_replica + mc.replicas;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(mc.workers), std::max<std::uint64_t>(mc.replicas, 1)));
  if (workers <= 1) {
    Acc acc{};
    for (std::uint64_t i = begin; i < end; ++i) body(i, acc);
    return acc;
  }

  const std::uint64_t chunk = std::max<std::uint64_t>(1, mc.replicas / (workers * 32ULL));
  std::atomic<std::uint64_t> next{begin};
  std::vector<Acc> partial(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (;;) {
            const std::uint64_t lo = next.fetch_add(chunk);
            if (lo >= end) break;
            const std::uint64_t hi = std::min(end, lo + chunk);
            for (std::uint64_t i = lo; i < hi; ++i) body(i, partial[w]);
          }
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(end);
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
  Acc acc{};
  for (const Acc& p : partial) acc.merge(p);
  return acc;
}

}  // namespace mixwalk
