#pragma once

#include <stdexcept>
#include <string>

namespace lcg {

// Thrown when an iteration diverges or a quantity stops being finite.
// The CLI maps this to exit code 2; contract violations (std::invalid_argument
// and friends) map to exit code 1.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lcg
