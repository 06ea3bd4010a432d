#pragma once

#include <stdexcept>
#include <string>

namespace hyperembed {

/// Invalid arguments or hyperparameters out of range. CLI exit code 2.
class argument_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input files or infeasible data requests. CLI exit code 3.
class data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failures: divergence, degenerate estimators. CLI exit code 4.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hyperembed
