#pragma once

#include <stdexcept>
#include <string>

namespace teamq {

// Invalid or inconsistent user-supplied configuration (bad dims, unknown
// keys, malformed files).
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition was violated by the caller (stale cache,
// unavailable action, invisible viewpoint target).
class ContractViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf or other numeric breakdown detected mid-computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace teamq
