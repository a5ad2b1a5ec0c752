#pragma once

#include "causal_testbed/linalg.hpp"

namespace ctb {

struct LogisticOptions {
  double ridge = 1e-8;  // added to the Hessian diagonal (intercept excluded)
  int max_iter = 100;
  double gradient_tol = 1e-9;
};

struct LogisticFit {
  Vector coef;    // intercept first
  Vector fitted;  // probabilities
  double loglik = 0.0;
  double loglik_null = 0.0;
  double gradient_norm = 0.0;  // of the penalized log-likelihood at coef
  int iterations = 0;
  bool converged = false;
  /// The fitted linear predictor classifies every row correctly (or every
  /// fitted probability is within 1e-3 of its label).
  bool separated = false;
};

/// Logistic regression of binary z on [1, x] by IRLS (Newton with step
/// halving). Throws when z has a single class.
LogisticFit fit_logistic(const Matrix& x, const Vector& z, const LogisticOptions& opts = {});

double logistic(double eta);
double logit(double p);

}  // namespace ctb
