#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "causal_testbed/linalg.hpp"

namespace ctb {

enum class ColumnKind { categorical, binary, count, continuous };

std::string to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

/// Marginal description of one covariate. Only the parameters matching
/// `kind` are meaningful.
struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::continuous;
  std::vector<double> level_probs;  // categorical, k >= 3
  double prob = 0.5;                // binary success probability
  double rate = 1.0;                // count (Poisson) mean
  double location = 0.0;            // continuous
  double scale = 1.0;
  bool log_normal = false;          // continuous: exp(location + scale * N(0,1))

  void validate() const;
  double analytic_mean() const;
  double analytic_variance() const;

  bool operator==(const ColumnSchema&) const = default;
};

void to_json(nlohmann::json& j, const ColumnSchema& c);
void from_json(const nlohmann::json& j, ColumnSchema& c);

/// 58 columns: 3 categorical, 5 binary, 27 count, 23 continuous.
std::vector<ColumnSchema> default_schema();

/// 20 columns: 1 categorical, 2 binary, 9 count, 8 continuous.
std::vector<ColumnSchema> desk_schema();

/// Block-structured latent correlation from a one-global-plus-one-block
/// factor model. Column j belongs to block j % num_blocks, so every block
/// mixes column kinds. Within-block correlations cycle through 0.3, 0.45 and
/// 0.6; every cross-block pair has 0.1. Positive definite by construction.
Matrix block_correlation(std::size_t p, std::size_t num_blocks = 0);

/// Covariate table with its schema and the derived standardized design.
/// Immutable after construction.
class CovariateTable {
 public:
  CovariateTable(std::vector<ColumnSchema> columns, Matrix values);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const std::vector<ColumnSchema>& columns() const { return columns_; }
  const Matrix& values() const { return values_; }

 private:
  std::vector<ColumnSchema> columns_;
  Matrix values_;
};

/// Gaussian-copula draw: latent N(0, correlation) rows mapped through each
/// column's inverse marginal CDF.
CovariateTable generate_covariates(const std::vector<ColumnSchema>& schema, Index n,
                                   const Matrix& correlation, std::uint64_t seed);

/// Scaled design consumed by the DGP, the metrics and the estimators.
struct StandardizedDesign {
  Matrix values;
  std::vector<std::string> names;
  std::vector<ColumnKind> kinds;   // kind of the source column
  std::vector<Index> source;       // source column in the table

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

/// Maps each column so its 1st..99th percentile range lands on [-1, 1] and
/// clips to +-1.5. Categorical columns become k-1 indicator columns (level 0
/// is the reference) before scaling. Constant columns become zeros.
StandardizedDesign standardize(const CovariateTable& table);

/// The per-column affine rule used by standardize().
Vector standardize_column(const Vector& column);

}  // namespace ctb
