// Prints the exact law of S_4 for M(1,1) and checks it against the
// two-walk reconstruction.

#include <iostream>

#include "mixwalk/mixwalk.hpp"

int main() {
  using namespace mixwalk;
  const Partition p({1, 1});
  const auto law = exact_distribution(p, Environment::empty(), 4);
  std::cout << law.to_json().dump(2) << "\n";
  const auto rebuilt = exact_reconstruction_distribution(p, 4);
  std::cout << "total variation to reconstruction: " << to_fraction_string(total_variation(law, rebuilt)) << "\n";
}
