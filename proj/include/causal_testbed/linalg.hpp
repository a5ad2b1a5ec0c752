#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ctb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct CholeskyResult {
  Matrix lower;
  /// 1-based order of the first leading principal minor that is not
  /// positive; empty when the matrix is positive definite.
  std::optional<Index> failed_minor;
};

/// Plain column-Cholesky that reports where positive-definiteness breaks.
CholeskyResult cholesky(const Matrix& a);

/// Prepends a column of ones.
Matrix with_intercept(const Matrix& x);

struct LeastSquares {
  Vector coef;
  Vector fitted;
  Vector residuals;
  Index rank = 0;
  bool rank_deficient = false;
};

/// Minimum-norm (weighted) least squares. `design` is used as given; add the
/// intercept column yourself. Weights, when present, must be nonnegative.
LeastSquares least_squares(const Matrix& design, const Vector& y,
                           const Vector* weights = nullptr);

/// Columns that are (numerically) linear combinations of earlier ones.
std::vector<Index> collinear_columns(const Matrix& design, double tol = 1e-10);

/// HC1 heteroskedasticity-robust covariance of (weighted) least-squares
/// coefficients.
Matrix sandwich_covariance(const Matrix& design, const Vector& residuals,
                           const Vector* weights = nullptr);

/// 1 - SSE/SST clamped to [0, 1]; zero-variance y gives 0.
double r_squared(const Vector& y, const Vector& fitted);

double mean(const Vector& v);
/// Sample variance with n-1 denominator (0 for n < 2).
double variance(const Vector& v);
double sd(const Vector& v);
/// Population standard deviation (n denominator).
double population_sd(const Vector& v);
/// Pearson correlation; 0 when either side has zero variance.
double correlation(const Vector& a, const Vector& b);

/// Linear-interpolation quantile (R type 7).
double quantile(std::vector<double> values, double q);

/// Threshold quantile: midpoint of the two order statistics bracketing
/// q*(n-1), or the order statistic itself when q*(n-1) is integral.
double midpoint_quantile(std::vector<double> values, double q);

Vector select_rows(const Vector& v, std::span<const Index> rows);
Matrix select_rows(const Matrix& m, std::span<const Index> rows);

/// Row indices where z == value.
std::vector<Index> rows_where(const Vector& z, double value);

}  // namespace ctb
