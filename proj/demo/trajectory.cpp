// Runs one M(2,2) walk and prints range growth at powers of two.

#include <cstdio>

#include "mixwalk/mixwalk.hpp"

int main() {
  using namespace mixwalk;
  Walk<4> walk(Partition({2, 2}), nullptr, 7);
  std::printf("%10s %10s %8s %12s\n", "n", "range", "r_n/n", "fresh_steps");
  for (std::uint64_t n = 1; n <= (1u << 20); n *= 2) {
    walk.run(n - walk.time());
    std::printf("%10llu %10llu %8.4f %12llu\n", static_cast<unsigned long long>(n),
                static_cast<unsigned long long>(walk.range_size()),
                static_cast<double>(walk.range_size()) / static_cast<double>(n),
                static_cast<unsigned long long>(walk.fresh_steps()));
  }
}
