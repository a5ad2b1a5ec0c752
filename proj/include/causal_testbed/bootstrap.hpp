#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "causal_testbed/linalg.hpp"

namespace ctb {

enum class IntervalKind { percentile, normal };

struct BootstrapOptions {
  int reps = 250;
  std::uint64_t seed = 0;
  IntervalKind kind = IntervalKind::percentile;
  double level = 0.95;
  double max_failure_share = 0.10;
};

struct BootstrapResult {
  double lo = 0.0;
  double hi = 0.0;
  double se = 0.0;
  int failures = 0;
  std::vector<double> replicates;  // successful resample statistics, in draw order
};

/// Statistic evaluated on a resample, given the resampled row indices into the
/// original data and a seed for any randomness of its own.
using ResampleStatistic = std::function<double(const std::vector<Index>& rows, std::uint64_t seed)>;

/// Row resampling with replacement, stratified by the distinct values of
/// `strata` so group sizes are preserved. Resample b uses
/// derive_seed(seed, {b}). A throwing statistic counts as a failed resample;
/// more than max_failure_share failures is an error. The normal variant is
/// centered at `estimate`.
BootstrapResult bootstrap_interval(const ResampleStatistic& statistic, const Vector& strata,
                                   double estimate, const BootstrapOptions& opts);

/// Stratified resample of row indices (used by bootstrap_interval).
std::vector<Index> stratified_resample(const Vector& strata, std::uint64_t seed);

}  // namespace ctb
