#pragma once

#include <stdexcept>
#include <string>

namespace mixwalk {

// Bad partition, environment, strategy output or experiment field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An exhaustive computation would exceed its enforced cutoff.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A lattice coordinate left the signed 32-bit range.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Internal bookkeeping reached a state that should be impossible.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mixwalk
