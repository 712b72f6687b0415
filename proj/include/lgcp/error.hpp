#pragma once

#include <stdexcept>
#include <string>

namespace lgcp {

/// Invalid input data, configuration or arguments (CLI exit status 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-convergence, factorization breakdown (CLI exit status 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lgcp
