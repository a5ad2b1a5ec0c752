#pragma once

#include <stdexcept>
#include <string>

namespace ctb {

/// Raised for every domain failure (bad input, solver non-convergence, I/O).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ctb
