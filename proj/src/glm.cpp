#include "causal_testbed/glm.hpp"

#include <algorithm>
#include <cmath>

#include "causal_testbed/error.hpp"

namespace ctb {

double logistic(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

namespace {

// log(1 + exp(eta)) without overflow
double softplus(double eta) {
  return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

double penalized_loglik(const Vector& eta, const Vector& z, const Vector& coef, double ridge) {
  double ll = 0.0;
  for (Index i = 0; i < eta.size(); ++i) ll += z(i) * eta(i) - softplus(eta(i));
  return ll - 0.5 * ridge * coef.tail(coef.size() - 1).squaredNorm();
}

}  // namespace

LogisticFit fit_logistic(const Matrix& x, const Vector& z, const LogisticOptions& opts) {
  const Index n = x.rows();
  if (z.size() != n) throw Error("fit_logistic: z length does not match design rows");
  double n1 = z.sum();
  if (n1 <= 0.0 || n1 >= static_cast<double>(n))
    throw Error("fit_logistic: both treatment classes must be present");

  Matrix design = with_intercept(x);
  const Index k = design.cols();
  LogisticFit fit;
  fit.coef = Vector::Zero(k);
  double pbar = n1 / static_cast<double>(n);
  fit.coef(0) = logit(pbar);
  fit.loglik_null = n1 * std::log(pbar) + (static_cast<double>(n) - n1) * std::log1p(-pbar);

  Vector penalty = Vector::Constant(k, opts.ridge);
  penalty(0) = 0.0;

  Vector eta = design * fit.coef;
  double obj = penalized_loglik(eta, z, fit.coef, opts.ridge);
  for (int it = 0; it < opts.max_iter; ++it) {
    fit.iterations = it + 1;
    Vector p = eta.unaryExpr([](double e) { return logistic(e); });
    Vector w = p.cwiseProduct(Vector::Ones(n) - p);
    Vector grad = design.transpose() * (z - p) - penalty.cwiseProduct(fit.coef);
    fit.gradient_norm = grad.norm();
    if (fit.gradient_norm < opts.gradient_tol) {
      fit.converged = true;
      break;
    }
    Matrix hess = design.transpose() * w.asDiagonal() * design;
    hess.diagonal() += penalty;
    hess.diagonal().array() += 1e-12;
    Vector step = hess.ldlt().solve(grad);
    double scale = 1.0;
    bool improved = false;
    for (int half = 0; half < 40; ++half) {
      Vector trial = fit.coef + scale * step;
      Vector trial_eta = design * trial;
      double trial_obj = penalized_loglik(trial_eta, z, trial, opts.ridge);
      if (trial_obj >= obj) {
        fit.coef = trial;
        eta = trial_eta;
        improved = trial_obj > obj || scale == 1.0;
        obj = trial_obj;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) break;
  }
  fit.fitted = eta.unaryExpr([](double e) { return logistic(e); });
  Vector grad = design.transpose() * (z - fit.fitted) - penalty.cwiseProduct(fit.coef);
  fit.gradient_norm = grad.norm();
  // Step halving can stall a hair above gradient_tol from rounding alone.
  if (fit.gradient_norm < std::max(opts.gradient_tol, 1e-7)) fit.converged = true;
  fit.loglik = 0.0;
  for (Index i = 0; i < n; ++i) fit.loglik += z(i) * eta(i) - softplus(eta(i));
  // A linear predictor that classifies every row correctly is a separating
  // hyperplane, so the unpenalized MLE does not exist.
  fit.separated = true;
  for (Index i = 0; i < n && fit.separated; ++i)
    if ((z(i) == 1.0) != (eta(i) > 0.0) || eta(i) == 0.0) fit.separated = false;
  fit.separated = fit.separated || (fit.fitted - z).cwiseAbs().maxCoeff() < 1e-3;
  return fit;
}

}  // namespace ctb
