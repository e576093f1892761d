#pragma once

#include <stdexcept>
#include <string>

namespace sectorfm {

/// Malformed input files, invalid arguments, violated type invariants.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Failures of the numerical core (factorizations that stay indefinite
/// after the jitter retry, singular systems). Never used for bad input.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sectorfm
