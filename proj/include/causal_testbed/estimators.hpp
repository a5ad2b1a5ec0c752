#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "causal_testbed/boosting.hpp"
#include "causal_testbed/bootstrap.hpp"
#include "causal_testbed/linalg.hpp"

namespace ctb {

struct Realization;

/// Observable data only: standardized covariates, binary z and outcome y.
struct EstimatorInput {
  Matrix x;
  Vector z;
  Vector y;

  /// Throws unless sizes agree, z is 0/1 with both groups present and every
  /// entry is finite.
  void validate() const;
  Index treated() const;
  EstimatorInput subset(const std::vector<Index>& rows) const;
};

EstimatorInput observable_input(const Realization& r);

struct EstimateResult {
  std::string method;
  double satt_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::optional<Vector> individual_effects;  // over treated units, in row order
  double wall_time = 0.0;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
  std::optional<Vector> weights;  // control weights, for weighting methods
};

struct EstimatorOptions {
  std::uint64_t seed = 0;
  int bootstrap_reps = 250;
  IntervalKind interval = IntervalKind::percentile;
  double truncation = 0.01;    // propensities clipped to [t, 1 - t]
  int n_strata = 5;
  BoostingOptions boosting;
  int bootstrap_rounds = 200;  // boosting rounds cap inside the bootstrap
  double min_ess = 10.0;       // warn below this control effective sample size
};

EstimateResult diff_in_means(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult ols_adjust(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult regression_ra(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult iptw_att(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult ipw_ra_dr(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult psm_match(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult ps_stratify(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult entropy_balance_dr(const EstimatorInput& in, const EstimatorOptions& opts = {});
EstimateResult flexible_rs(const EstimatorInput& in, const EstimatorOptions& opts = {});

/// Mean over treated of mu1 - mu0 from the realization's truth; harness only.
EstimateResult oracle_catt(const Realization& r);

// Building blocks, exposed for testing and for the metrics module.

/// Logistic propensity of z on x, clipped to [t, 1 - t].
Vector fit_propensity(const Matrix& x, const Vector& z, double truncation);

struct WeightedAtt {
  double estimate = 0.0;
  Vector weights;  // normalized, over controls in row order
  double ess = 0.0;
};

/// ATT weighting with a given propensity: treated weight 1, control weight
/// e / (1 - e) normalized within controls.
WeightedAtt att_weighting(const Vector& y, const Vector& z, const Vector& e);

/// Doubly robust ATT: ATT weights from `e`, weighted least squares of control
/// outcomes on [1, outcome_design], then mean over treated of y - mu0_hat plus
/// the weighted control residual correction.
double dr_att(const Vector& y, const Vector& z, const Vector& e, const Matrix& outcome_design);

struct Matching {
  std::vector<Index> match;       // matched control row for each treated, in treated row order
  std::vector<Index> treated;     // treated rows
};

/// 1-nearest-neighbour matching with replacement on a scalar score; ties go to
/// the lowest row index.
Matching nearest_neighbor_match(const Vector& score, const Vector& z);

/// Fitted control and treated surfaces from boosted trees with CV-chosen rounds.
struct ResponseSurfaces {
  BoostedTrees mu0;
  BoostedTrees mu1;
  int rounds0 = 0;
  int rounds1 = 0;
};
ResponseSurfaces fit_response_surfaces(const EstimatorInput& in, const BoostingOptions& opts);

using Estimator = std::function<EstimateResult(const EstimatorInput&, const EstimatorOptions&)>;

/// Registered observable-data estimators, in registration order.
const std::vector<std::string>& estimator_names();
/// Throws listing the registered names for an unknown method.
const Estimator& find_estimator(const std::string& name);
/// Runs by name and records wall time.
EstimateResult run_estimator(const std::string& name, const EstimatorInput& in, const EstimatorOptions& opts);

inline constexpr const char* kOracleMethod = "oracle_catt";

}  // namespace ctb
