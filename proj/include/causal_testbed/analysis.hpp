#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "causal_testbed/linalg.hpp"

namespace ctb {

/// One estimator run on one realization.
struct EstimateRow {
  int setting = 0;
  int replication = 0;
  std::string method;
  double satt_hat = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double wall_time = 0.0;
  double pehe = std::numeric_limits<double>::quiet_NaN();  // NaN without individual effects
  std::string status = "ok";                               // "ok" or "error: ..."

  bool ok() const { return status == "ok"; }
};

/// Estimand of one realization.
struct TruthRow {
  int setting = 0;
  int replication = 0;
  double satt = 0.0;
  int n = 0;
  int n_treated = 0;
};

/// Metric table row (one realization), columns in a fixed order.
struct MetricRow {
  int setting = 0;
  int replication = 0;
  std::vector<double> values;
};
struct MetricTable {
  std::vector<std::string> names;
  std::vector<MetricRow> rows;
};

/// sqrt(mean((tau_hat - tau)^2)); throws on length mismatch.
double pehe(const Vector& tau_hat, const Vector& tau);

struct MethodSummary {
  std::string method;
  int cells = 0;     // successful runs
  int failures = 0;  // runs that reported an error
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_length = 0.0;
  double pehe = std::numeric_limits<double>::quiet_NaN();
  double mean_time = 0.0;
  double bias_iqr = 0.0;  // over all cells pooled
};

/// Per-method performance, methods in alphabetical order. Throws listing
/// estimate rows without a truth row.
std::vector<MethodSummary> summarize(const std::vector<EstimateRow>& estimates, const std::vector<TruthRow>& truths);

/// Methods ordered by ascending RMSE, ties alphabetical.
std::vector<MethodSummary> rank_by_rmse(std::vector<MethodSummary> summary);

struct ExplainRow {
  std::string method;
  int cells = 0;
  double nonoracle_metrics = 0.0;
  double settings = 0.0;
  double all_metrics = 0.0;
  double settings_and_metrics = 0.0;
  bool rank_deficient = false;
};

inline constexpr double kLogBiasFloor = 1e-6;

/// Per method, R2 of OLS fits of log(|bias| + 1e-6) on (i) observable
/// metrics and their squares, (ii) setting indicators, (iii) all metrics and
/// their squares, (iv) settings plus all metrics. Needs at least `min_cells`
/// successful cells per method; metric names starting with "oracle_" count as
/// oracle metrics. With `skip_small`, methods below the minimum get NA R2
/// values instead of an error.
std::vector<ExplainRow> explain_performance(const std::vector<EstimateRow>& estimates,
                                            const std::vector<TruthRow>& truths, const MetricTable& metrics,
                                            int min_cells = 30, bool skip_small = false);

struct VarianceComponents {
  double method = 0.0;
  double setting = 0.0;
  double interaction = 0.0;
  double realization = 0.0;
  double total = 0.0;            // sum of the four (truncated) components
  double sample_variance = 0.0;  // of log absolute bias; equals the raw sum
  /// Raw method-of-moments values before truncation at 0.
  double raw_method = 0.0;
  double raw_setting = 0.0;
  double raw_interaction = 0.0;
  double raw_realization = 0.0;
  bool truncated = false;
  int methods = 0;
  int settings = 0;
  double replications = 0.0;  // harmonic mean of cell counts

  double share(double component) const;
};

/// Two-way random-effects method-of-moments split of log(|bias| + 1e-6) into
/// method, setting, method x setting and realization parts. The realization
/// part is the total sample variance minus the other three, so the raw parts
/// sum to the total exactly.
VarianceComponents variance_components(const std::vector<EstimateRow>& estimates,
                                       const std::vector<TruthRow>& truths);

/// Same on already computed (method, setting, value) observations.
struct Observation {
  std::string method;
  int setting = 0;
  double value = 0.0;
};
VarianceComponents variance_components(const std::vector<Observation>& obs);

nlohmann::json to_json(const VarianceComponents& v);

}  // namespace ctb
