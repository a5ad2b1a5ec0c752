#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causal_testbed/boosting.hpp"
#include "causal_testbed/linalg.hpp"

namespace ctb {

struct DgpSpec;
struct Realization;
struct EstimatorInput;

/// OLS of y on [1, design]; 1 - SSE/SST in [0, 1]. Zero-variance y gives 0.
/// Requires rows >= cols + 2.
double r2_linear(const Vector& y, const Matrix& design);

struct PropensityR2 {
  double value = 0.0;
  bool separated = false;
};

/// McFadden pseudo-R2 of a logistic regression of z on [1, design]. Perfect
/// separation gives 1 with the flag set.
PropensityR2 propensity_r2(const Vector& z, const Matrix& design);

/// Mean over all units of the Mahalanobis distance to the nearest unit of the
/// other group, under the pooled within-group covariance plus 1e-6 jitter.
double mahalanobis_counterfactual_distance(const Matrix& design, const Vector& z);
/// Same with an explicit covariance matrix (no jitter).
double mahalanobis_counterfactual_distance(const Matrix& design, const Vector& z, const Matrix& covariance);

/// Euclidean norm of the difference of group mean vectors.
double mean_imbalance(const Matrix& design, const Vector& z);

struct SinkhornOptions {
  double epsilon = 0.05;  // absolute, in squared design units
  int max_iter = 500;
  double tol = 1e-4;      // L1 marginal error
  Index max_per_group = 500;
  std::uint64_t seed = 0;  // subsampling stream
};

/// Entropic optimal-transport cost between the treated and control point
/// clouds (uniform masses, squared Euclidean cost). Groups larger than
/// max_per_group are subsampled. An approximation of the exact transport cost
/// that is biased upward by the entropic blur.
double wasserstein_distance(const Matrix& design, const Vector& z, const SinkhornOptions& opts = {});

/// Sinkhorn transport cost between two point clouds with uniform masses.
double sinkhorn_cost(const Matrix& a, const Matrix& b, const SinkhornOptions& opts = {});

/// Pearson correlation of logit(e) with y over rows outside the penalty
/// regions; 0 when the propensity is constant.
double alignment_correlation(const Realization& r);

/// sd of mu1 - mu0 over rows divided by sd of y; exactly 0 for a constant
/// effect.
double heterogeneity_sd(const Realization& r);

/// R2 of estimated individual effects on estimated propensities (both over
/// treated units). Throws when the effects are missing.
double nonoracle_alignment_proxy(const std::optional<Vector>& individual_effects, const Vector& propensity);

struct MetricEntry {
  std::string name;
  double value = 0.0;
  bool oracle = false;
};

struct MetricVector {
  int setting = 0;
  int replication = 0;
  std::vector<MetricEntry> entries;

  double get(const std::string& name) const;
};

struct MetricOptions {
  SinkhornOptions sinkhorn;
  BoostingOptions boosting;
  std::uint64_t seed = 0;
};

/// Column names in output order. Oracle names carry the "oracle_" prefix.
const std::vector<std::string>& observable_metric_names();
const std::vector<std::string>& oracle_metric_names();

/// Observable-only metrics. Individual effects over treated units from the
/// boosted-tree estimator may be passed in; otherwise they are refit.
std::vector<MetricEntry> observable_metrics(const EstimatorInput& in, const MetricOptions& opts,
                                            const std::optional<Vector>& individual_effects = std::nullopt);

/// Metrics that need the generating spec and the realization's truth.
std::vector<MetricEntry> oracle_metrics(const DgpSpec& spec, const Realization& r, const MetricOptions& opts);

/// Design used for the oracle R2 entries: observable columns followed by the
/// truth basis.
Matrix oracle_design(const DgpSpec& spec, const Matrix& x);

}  // namespace ctb
