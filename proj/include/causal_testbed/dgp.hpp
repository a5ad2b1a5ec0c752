#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causal_testbed/covariates.hpp"
#include "causal_testbed/knobs.hpp"
#include "causal_testbed/linalg.hpp"

namespace ctb {

enum class TermKind { linear, quadratic, cubic, jump, kink, interaction, exponential };

std::string to_string(TermKind kind);
TermKind term_kind_from_string(const std::string& s);

/// One additive piece of an assignment or response function, evaluated on the
/// standardized design.
///
///   linear       c * x_j
///   quadratic    c * x_j^2
///   cubic        c * x_j^3
///   jump         c * I{x_j <= A}                       thresholds = {A}
///   kink         c * (x_j - B) * I{x_j <= C}           thresholds = {B, C}
///   interaction  c * x_j * x_k [* x_l]
///   exponential  c * exp(sum of inner terms)           inner = sub-functions
struct FunctionTerm {
  TermKind kind = TermKind::linear;
  std::vector<Index> columns;
  double coefficient = 1.0;
  std::vector<double> thresholds;
  std::vector<FunctionTerm> inner;

  /// Term value without the outer coefficient.
  Vector basis(const Matrix& x) const;
  Vector evaluate(const Matrix& x) const { return coefficient * basis(x); }
  /// Shape identity (everything except the outer coefficient).
  std::string signature() const;

  bool operator==(const FunctionTerm&) const = default;
};

/// x_column > cutoff when `upper`, otherwise x_column <= cutoff.
struct Condition {
  Index column = 0;
  bool upper = true;
  double quantile = 0.5;  // marginal quantile the cutoff was taken at
  double cutoff = 0.0;

  bool operator==(const Condition&) const = default;
};

/// Conjunction of threshold conditions; rows inside get propensity 0.
struct PenaltyRegion {
  std::vector<Condition> conditions;

  std::vector<char> membership(const Matrix& x) const;
  bool operator==(const PenaltyRegion&) const = default;
};

/// Free parameters of the generator that the knobs do not pin down.
struct DgpConfig {
  double term_count_mean = 8.0;     // columns per function ~ 1 + Poisson(mean)
  std::size_t min_terms = 4;
  double coefficient_df = 3.0;      // Student-t for unbounded coefficients
  double beta_prime_a = 2.0;        // beta-prime for positive magnitudes
  double beta_prime_b = 4.0;
  double quadratic_prob = 0.5;
  double cubic_prob = 0.25;
  double interaction_mean = 2.0;    // extra interaction terms ~ Poisson(mean)
  double three_way_prob = 0.3;
  double logit_sd_min = 0.5;        // spread of the rescaled logit
  double logit_sd_max = 1.1;
  double penalty_share_min = 0.03;  // fraction of rows inside the penalty region
  double penalty_share_max = 0.35;
  double noise_df = 10.0;
  double noise_ratio_min = 0.5;     // noise sd relative to the mu0 signal sd
  double noise_ratio_max = 1.2;
  double heterogeneity_low = 0.5;   // effect sd relative to the mu0 signal sd
  double heterogeneity_high = 0.9;
  double effect_center = 0.65;      // target effect = center + spread * t(df)
  double effect_spread = 0.1;
  double effect_df = 5.0;
  std::optional<double> fixed_target_effect;
  double treated_fraction_tol = 1e-4;
  int max_bisection_iterations = 200;

  bool operator==(const DgpConfig&) const = default;
};

/// Realized random functions for one replication plus their rescaling
/// constants. Evaluation is pure; the spec is immutable once built.
struct DgpSpec {
  Knobs knobs;
  DgpConfig config;
  std::uint64_t seed = 0;

  std::vector<FunctionTerm> assignment_terms;
  std::vector<PenaltyRegion> penalties;
  std::size_t copied_terms = 0;  // assignment terms copied into the response
  double logit_sd = 1.0;         // drawn target spread of the logit
  double logit_intercept = 0.0;
  double logit_scale = 1.0;
  bool assignment_rescaled = false;

  std::vector<FunctionTerm> response_terms;       // mu0 shape
  std::vector<FunctionTerm> heterogeneity_terms;  // tau shape
  double noise_ratio = 1.0;
  double heterogeneity_amplitude = 0.0;
  double target_effect = 0.0;
  double response_shift = 0.0;
  double response_scale = 1.0;
  double effect_shift = 0.0;
  double effect_scale = 0.0;
  double noise_scale = 1.0;
  bool response_rescaled = false;

  Vector raw_assignment(const Matrix& x) const;
  Vector raw_response(const Matrix& x) const;
  Vector raw_heterogeneity(const Matrix& x) const;
  std::vector<char> penalized(const Matrix& x) const;
  /// Logit of the propensity; -infinity inside penalty regions.
  Vector logit(const Matrix& x) const;
  Vector propensity(const Matrix& x) const;
  Vector mu0(const Matrix& x) const;
  /// Noiseless effect mu1(x) - mu0(x).
  Vector tau(const Matrix& x) const;
  Vector mu1(const Matrix& x) const;

  /// copied_terms / assignment_terms.size().
  double alignment_fraction() const;

  bool operator==(const DgpSpec&) const = default;
};

void to_json(nlohmann::json& j, const FunctionTerm& t);
void from_json(const nlohmann::json& j, FunctionTerm& t);
void to_json(nlohmann::json& j, const Condition& c);
void from_json(const nlohmann::json& j, Condition& c);
void to_json(nlohmann::json& j, const PenaltyRegion& r);
void from_json(const nlohmann::json& j, PenaltyRegion& r);
void to_json(nlohmann::json& j, const DgpConfig& c);
void from_json(const nlohmann::json& j, DgpConfig& c);
void to_json(nlohmann::json& j, const DgpSpec& s);
void from_json(const nlohmann::json& j, DgpSpec& s);

/// Draws the random functions without rescaling them.
DgpSpec build_raw_dgp(const Knobs& knobs, const StandardizedDesign& design, std::uint64_t seed,
                      const DgpConfig& config = {});

/// Full build: raw functions, then rescale_assignment and rescale_response.
DgpSpec build_dgp(const Knobs& knobs, const StandardizedDesign& design, std::uint64_t seed,
                  const DgpConfig& config = {});

/// Affine logit adjustment: expected treated fraction among rows outside the
/// penalty regions hits the knob target, and at least 90% of those rows get
/// a propensity in [0.1, 0.9].
DgpSpec rescale_assignment(DgpSpec spec, const StandardizedDesign& design);

/// Affine outcome adjustment: expected observed outcome has mean 0 and
/// standard deviation 1 on the build sample, and the propensity-weighted
/// mean of mu1 - mu0 equals the drawn target effect.
DgpSpec rescale_response(DgpSpec spec, const StandardizedDesign& design);

/// Evaluated basis of every distinct term shape plus one indicator per
/// penalty region: the ground-truth design.
Matrix truth_basis(const DgpSpec& spec, const Matrix& x);

struct OracleTruth {
  Vector e;
  Vector mu0;
  Vector mu1;
  Vector y0;
  Vector y1;
  Vector tau;  // y1 - y0
  std::vector<char> penalized;
};

/// One generated dataset. Estimators only ever see design, z and y.
struct Realization {
  std::shared_ptr<const StandardizedDesign> design;
  Vector z;
  Vector y;
  OracleTruth oracle;
};

struct RealizeOptions {
  bool noiseless = false;
};

/// z from the assignment stream, outcome noise from an independent stream.
Realization realize(const DgpSpec& spec, std::shared_ptr<const StandardizedDesign> design,
                    std::uint64_t assignment_seed, std::uint64_t noise_seed,
                    const RealizeOptions& opts = {});

/// Splits `seed` into the assignment and noise streams.
Realization realize(const DgpSpec& spec, std::shared_ptr<const StandardizedDesign> design,
                    std::uint64_t seed, const RealizeOptions& opts = {});

/// Mean of y1 - y0 over treated units; throws without treated units.
double satt(const Realization& r);

}  // namespace ctb
