#include "causal_testbed/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "causal_testbed/error.hpp"
#include "causal_testbed/rng.hpp"

namespace ctb {

std::vector<Index> stratified_resample(const Vector& strata, std::uint64_t seed) {
  std::map<double, std::vector<Index>> groups;
  for (Index i = 0; i < strata.size(); ++i) groups[strata(i)].push_back(i);
  Rng rng(seed);
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(strata.size()));
  for (const auto& [value, members] : groups) {
    for (std::size_t k = 0; k < members.size(); ++k) rows.push_back(members[rng.index(members.size())]);
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

BootstrapResult bootstrap_interval(const ResampleStatistic& statistic, const Vector& strata,
                                   double estimate, const BootstrapOptions& opts) {
  if (opts.reps < 2) throw Error("bootstrap: at least 2 resamples are required");
  BootstrapResult out;
  std::string last_error;
  for (int b = 0; b < opts.reps; ++b) {
    std::uint64_t s = derive_seed(opts.seed, {static_cast<std::uint64_t>(b)});
    auto rows = stratified_resample(strata, s);
    try {
      double v = statistic(rows, derive_seed(s, {1}));
      if (!std::isfinite(v)) throw Error("non-finite statistic");
      out.replicates.push_back(v);
    } catch (const std::exception& e) {
      ++out.failures;
      last_error = e.what();
    }
  }
  if (out.failures > opts.max_failure_share * opts.reps) {
    std::ostringstream os;
    os << "bootstrap: " << out.failures << " of " << opts.reps << " resamples failed (last: " << last_error << ")";
    throw Error(os.str());
  }
  Vector rep = Eigen::Map<const Vector>(out.replicates.data(), static_cast<Index>(out.replicates.size()));
  out.se = sd(rep);
  const double alpha = 1.0 - opts.level;
  if (opts.kind == IntervalKind::percentile) {
    out.lo = quantile(out.replicates, alpha / 2.0);
    out.hi = quantile(out.replicates, 1.0 - alpha / 2.0);
  } else {
    double zq = boost::math::quantile(boost::math::normal(), 1.0 - alpha / 2.0);
    out.lo = estimate - zq * out.se;
    out.hi = estimate + zq * out.se;
  }
  return out;
}

}  // namespace ctb
