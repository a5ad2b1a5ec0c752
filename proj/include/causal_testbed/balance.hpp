#pragma once

#include <string>
#include <vector>

#include "causal_testbed/linalg.hpp"

namespace ctb {

struct BalanceOptions {
  double tol = 1e-8;  // max |weighted mean - target| over constraint columns
  int max_iter = 500;
};

struct BalanceResult {
  Vector weights;  // nonnegative, sum to 1
  Vector lambda;   // dual solution on the internally scaled columns
  double max_violation = 0.0;
  int iterations = 0;
};

/// Exponential tilting of `base` weights (renormalized to sum 1) so the
/// weighted means of the columns of `c` equal `target`: the minimum
/// Kullback-Leibler perturbation of the base weights. Solved by damped Newton
/// on the dual. Throws naming the worst column when it does not converge.
/// `names` labels the columns of `c` in messages and may be empty.
BalanceResult entropy_balance(const Matrix& c, const Vector& target, const Vector& base,
                              const std::vector<std::string>& names = {},
                              const BalanceOptions& opts = {});

}  // namespace ctb
