#include "causal_testbed/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "causal_testbed/error.hpp"

namespace ctb {

CholeskyResult cholesky(const Matrix& a) {
  const Index n = a.rows();
  if (a.cols() != n) throw Error("cholesky: matrix is not square");
  CholeskyResult out;
  out.lower = Matrix::Zero(n, n);
  Matrix& l = out.lower;
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) {
      out.failed_minor = j + 1;
      return out;
    }
    l(j, j) = std::sqrt(d);
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / l(j, j);
    }
  }
  return out;
}

Matrix with_intercept(const Matrix& x) {
  Matrix out(x.rows(), x.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(x.cols()) = x;
  return out;
}

LeastSquares least_squares(const Matrix& design, const Vector& y, const Vector* weights) {
  if (design.rows() != y.size()) throw Error("least_squares: row count mismatch");
  LeastSquares out;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
  if (weights != nullptr) {
    Vector root = weights->cwiseMax(0.0).cwiseSqrt();
    Matrix wx = root.asDiagonal() * design;
    cod.compute(wx);
    out.coef = cod.solve(root.cwiseProduct(y));
  } else {
    cod.compute(design);
    out.coef = cod.solve(y);
  }
  out.rank = cod.rank();
  out.rank_deficient = out.rank < design.cols();
  out.fitted = design * out.coef;
  out.residuals = y - out.fitted;
  return out;
}

std::vector<Index> collinear_columns(const Matrix& design, double tol) {
  std::vector<Index> out;
  if (design.cols() == 0) return out;
  // Scale columns so the tolerance is relative to each column's magnitude.
  Matrix scaled = design;
  for (Index j = 0; j < scaled.cols(); ++j) {
    double norm = scaled.col(j).norm();
    if (norm > 0.0) scaled.col(j) /= norm;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
  qr.setThreshold(tol);
  if (qr.rank() == scaled.cols()) return out;
  Matrix accepted(scaled.rows(), 0);
  for (Index j = 0; j < scaled.cols(); ++j) {
    Vector col = scaled.col(j);
    double norm = col.norm();
    if (norm == 0.0) {
      out.push_back(j);
      continue;
    }
    if (accepted.cols() > 0) {
      Vector coef = accepted.colPivHouseholderQr().solve(col);
      Vector resid = col - accepted * coef;
      if (resid.norm() < std::sqrt(tol)) {
        out.push_back(j);
        continue;
      }
    }
    accepted.conservativeResize(Eigen::NoChange, accepted.cols() + 1);
    accepted.col(accepted.cols() - 1) = col;
  }
  return out;
}

Matrix sandwich_covariance(const Matrix& design, const Vector& residuals, const Vector* weights) {
  const Index n = design.rows();
  const Index k = design.cols();
  Vector w = weights != nullptr ? *weights : Vector::Ones(n);
  Matrix bread = design.transpose() * w.asDiagonal() * design;
  Matrix bread_inv = bread.completeOrthogonalDecomposition().pseudoInverse();
  Vector u = w.cwiseProduct(residuals);
  Matrix meat = design.transpose() * u.cwiseAbs2().asDiagonal() * design;
  double dof = n > k ? static_cast<double>(n) / static_cast<double>(n - k) : 1.0;
  return dof * bread_inv * meat * bread_inv;
}

double r_squared(const Vector& y, const Vector& fitted) {
  if (y.size() < 2) return 0.0;
  double ybar = y.mean();
  double sst = (y.array() - ybar).square().sum();
  if (!(sst > 0.0)) return 0.0;
  double sse = (y - fitted).squaredNorm();
  return std::clamp(1.0 - sse / sst, 0.0, 1.0);
}

double mean(const Vector& v) { return v.size() == 0 ? 0.0 : v.mean(); }

double variance(const Vector& v) {
  if (v.size() < 2) return 0.0;
  double m = v.mean();
  return (v.array() - m).square().sum() / static_cast<double>(v.size() - 1);
}

double sd(const Vector& v) { return std::sqrt(variance(v)); }

double population_sd(const Vector& v) {
  if (v.size() == 0) return 0.0;
  double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size()));
}

double correlation(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw Error("correlation: length mismatch");
  if (a.size() < 2) return 0.0;
  Vector da = a.array() - a.mean();
  Vector db = b.array() - b.mean();
  double saa = da.squaredNorm();
  double sbb = db.squaredNorm();
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return std::clamp(da.dot(db) / std::sqrt(saa * sbb), -1.0, 1.0);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile: empty input");
  std::sort(values.begin(), values.end());
  double h = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, values.size() - 1);
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double midpoint_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("midpoint_quantile: empty input");
  std::sort(values.begin(), values.end());
  double h = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  if (static_cast<double>(lo) == h || lo + 1 >= values.size()) return values[lo];
  return 0.5 * (values[lo] + values[lo + 1]);
}

Vector select_rows(const Vector& v, std::span<const Index> rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

Matrix select_rows(const Matrix& m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

std::vector<Index> rows_where(const Vector& z, double value) {
  std::vector<Index> out;
  for (Index i = 0; i < z.size(); ++i)
    if (z(i) == value) out.push_back(i);
  return out;
}

}  // namespace ctb
