#include "causal_testbed/balance.hpp"

#include <cmath>
#include <sstream>

#include "causal_testbed/error.hpp"

namespace ctb {

namespace {

std::string column_label(const std::vector<std::string>& names, Index j) {
  if (static_cast<std::size_t>(j) < names.size()) return names[static_cast<std::size_t>(j)];
  return "column " + std::to_string(j + 1);
}

struct Tilt {
  Vector w;
  double value;  // log sum q exp(d lambda)
};

Tilt tilt(const Matrix& d, const Vector& logq, const Vector& lambda) {
  Vector a = logq + d * lambda;
  double m = a.maxCoeff();
  Vector w = (a.array() - m).exp();
  double s = w.sum();
  return Tilt{w / s, m + std::log(s)};
}

}  // namespace

BalanceResult entropy_balance(const Matrix& c, const Vector& target, const Vector& base,
                              const std::vector<std::string>& names, const BalanceOptions& opts) {
  const Index n = c.rows();
  const Index k = c.cols();
  if (target.size() != k) throw Error("entropy_balance: target length does not match columns");
  if (base.size() != n) throw Error("entropy_balance: base weight length does not match rows");
  if (n == 0) throw Error("entropy_balance: no rows to weight");
  if ((base.array() < 0.0).any() || !(base.sum() > 0.0))
    throw Error("entropy_balance: base weights must be nonnegative with positive sum");

  Vector logq(n);
  for (Index i = 0; i < n; ++i) logq(i) = base(i) > 0.0 ? std::log(base(i)) : -INFINITY;

  Matrix d = c.rowwise() - target.transpose();
  Vector scale = Vector::Ones(k);
  for (Index j = 0; j < k; ++j) {
    double lo = d.col(j).minCoeff();
    double hi = d.col(j).maxCoeff();
    if (lo > opts.tol || hi < -opts.tol)
      throw Error("entropy_balance: target mean of " + column_label(names, j) +
                  " lies outside the range of the weighted rows");
    double sdv = std::sqrt((d.col(j).array() - d.col(j).mean()).square().mean());
    if (sdv > 0.0) scale(j) = sdv;
  }
  Matrix ds = d * scale.cwiseInverse().asDiagonal();

  BalanceResult out;
  out.lambda = Vector::Zero(k);
  Tilt cur = tilt(ds, logq, out.lambda);
  Vector violation = d.transpose() * cur.w;
  for (int it = 0;; ++it) {
    out.max_violation = k > 0 ? violation.cwiseAbs().maxCoeff() : 0.0;
    out.iterations = it;
    if (out.max_violation <= opts.tol) break;
    if (it >= opts.max_iter) {
      Index worst = 0;
      violation.cwiseAbs().maxCoeff(&worst);
      std::ostringstream os;
      os << "entropy_balance: no convergence after " << opts.max_iter
         << " Newton iterations; max constraint violation " << out.max_violation << " at "
         << column_label(names, worst);
      throw Error(os.str());
    }
    Vector g = ds.transpose() * cur.w;
    Matrix h = ds.transpose() * cur.w.asDiagonal() * ds - g * g.transpose();
    h.diagonal().array() += 1e-12 * (1.0 + h.diagonal().maxCoeff());
    Vector step = -h.completeOrthogonalDecomposition().solve(g);
    double slope = g.dot(step);
    if (!(slope < 0.0)) step = -g, slope = -g.squaredNorm();
    double alpha = 1.0;
    Tilt next = cur;
    for (int half = 0; half < 60; ++half) {
      next = tilt(ds, logq, out.lambda + alpha * step);
      if (next.value <= cur.value + 1e-4 * alpha * slope) break;
      alpha *= 0.5;
    }
    out.lambda += alpha * step;
    cur = next;
    violation = d.transpose() * cur.w;
  }
  out.weights = cur.w;
  return out;
}

}  // namespace ctb
