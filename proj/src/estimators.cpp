#include "causal_testbed/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "causal_testbed/balance.hpp"
#include "causal_testbed/dgp.hpp"
#include "causal_testbed/error.hpp"
#include "causal_testbed/glm.hpp"
#include "causal_testbed/rng.hpp"

namespace ctb {

// ------------------------------------------------------------------- input

void EstimatorInput::validate() const {
  if (z.size() != x.rows() || y.size() != x.rows())
    throw Error("estimator input: x, z and y must have the same number of rows");
  if (!x.allFinite() || !y.allFinite()) throw Error("estimator input: non-finite entries");
  Index n1 = 0;
  for (Index i = 0; i < z.size(); ++i) {
    if (z(i) != 0.0 && z(i) != 1.0) throw Error("estimator input: z must be 0 or 1");
    n1 += z(i) == 1.0;
  }
  if (n1 == 0 || n1 == z.size()) throw Error("estimator input: both treatment groups must be nonempty");
}

Index EstimatorInput::treated() const { return static_cast<Index>(z.sum()); }

EstimatorInput EstimatorInput::subset(const std::vector<Index>& rows) const {
  return EstimatorInput{select_rows(x, rows), select_rows(z, rows), select_rows(y, rows)};
}

EstimatorInput observable_input(const Realization& r) {
  if (!r.design) throw Error("observable_input: realization has no design");
  return EstimatorInput{r.design->values, r.z, r.y};
}

namespace {

const double kZ975 = boost::math::quantile(boost::math::normal(), 0.975);

double t_quantile(double df) {
  if (!(df > 0.0) || !std::isfinite(df)) return kZ975;
  return boost::math::quantile(boost::math::students_t(df), 0.975);
}

// Drops covariate columns that are constant over the rows.
Matrix varying_columns(const Matrix& x) {
  std::vector<Index> keep;
  for (Index j = 0; j < x.cols(); ++j)
    if (x.rows() > 0 && x.col(j).maxCoeff() > x.col(j).minCoeff()) keep.push_back(j);
  Matrix out(x.rows(), static_cast<Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(static_cast<Index>(k)) = x.col(keep[k]);
  return out;
}

Matrix with_z(const Vector& z, const Matrix& x) {
  Matrix d(x.rows(), x.cols() + 2);
  d.col(0).setOnes();
  d.col(1) = z;
  d.rightCols(x.cols()) = x;
  return d;
}

// Keeps the ordering lo <= estimate <= hi when a percentile interval misses
// the point estimate.
void set_interval(EstimateResult& r, double lo, double hi) {
  r.lo = std::min(lo, r.satt_hat);
  r.hi = std::max(hi, r.satt_hat);
}

BootstrapOptions boot_options(const EstimatorOptions& opts, std::uint64_t label) {
  BootstrapOptions b;
  b.reps = opts.bootstrap_reps;
  b.seed = derive_seed(opts.seed, {label});
  b.kind = opts.interval;
  return b;
}

template <typename Stat>
void add_bootstrap(EstimateResult& r, const EstimatorInput& in, const EstimatorOptions& opts,
                   std::uint64_t label, Stat stat) {
  auto boot = bootstrap_interval(
      [&](const std::vector<Index>& rows, std::uint64_t seed) { return stat(in.subset(rows), seed); }, in.z,
      r.satt_hat, boot_options(opts, label));
  set_interval(r, boot.lo, boot.hi);
  r.diagnostics["bootstrap_se"] = boot.se;
  r.diagnostics["bootstrap_failures"] = boot.failures;
}

std::vector<Index> treated_rows(const Vector& z) { return rows_where(z, 1.0); }
std::vector<Index> control_rows(const Vector& z) { return rows_where(z, 0.0); }

double treated_mean(const Vector& y, const Vector& z) {
  double s = 0.0;
  double n = 0.0;
  for (Index i = 0; i < y.size(); ++i)
    if (z(i) == 1.0) s += y(i), n += 1.0;
  return s / n;
}

// ------------------------------------------------------ regression pieces

struct RaFit {
  double estimate;
  Vector effects;  // mu1_hat - mu0_hat over treated
};

RaFit regression_ra_core(const EstimatorInput& in) {
  Matrix x = varying_columns(in.x);
  auto t = treated_rows(in.z);
  auto c = control_rows(in.z);
  const Index p = x.cols();
  if (static_cast<Index>(t.size()) <= p + 2 || static_cast<Index>(c.size()) <= p + 2) {
    std::ostringstream os;
    os << "regression_ra: each group needs more than " << p + 2 << " rows (treated " << t.size()
       << ", control " << c.size() << ")";
    throw Error(os.str());
  }
  Matrix d = with_intercept(x);
  Matrix dt = select_rows(d, t);
  auto fit0 = least_squares(select_rows(d, c), select_rows(in.y, c));
  auto fit1 = least_squares(dt, select_rows(in.y, t));
  Vector mu0 = dt * fit0.coef;
  Vector mu1 = dt * fit1.coef;
  Vector yt = select_rows(in.y, t);
  return RaFit{(yt - mu0).mean(), mu1 - mu0};
}

}  // namespace

// -------------------------------------------------------------- primitives

Vector fit_propensity(const Matrix& x, const Vector& z, double truncation) {
  auto fit = fit_logistic(varying_columns(x), z);
  return fit.fitted.cwiseMax(truncation).cwiseMin(1.0 - truncation);
}

WeightedAtt att_weighting(const Vector& y, const Vector& z, const Vector& e) {
  auto c = control_rows(z);
  WeightedAtt out;
  out.weights.resize(static_cast<Index>(c.size()));
  for (std::size_t k = 0; k < c.size(); ++k) {
    double ei = e(c[k]);
    if (!(ei >= 0.0 && ei < 1.0)) throw Error("att_weighting: propensity must lie in [0, 1)");
    out.weights(static_cast<Index>(k)) = ei / (1.0 - ei);
  }
  double total = out.weights.sum();
  if (!(total > 0.0)) throw Error("att_weighting: control weights sum to zero");
  out.weights /= total;
  out.ess = 1.0 / out.weights.squaredNorm();
  out.estimate = treated_mean(y, z) - out.weights.dot(select_rows(y, c));
  return out;
}

double dr_att(const Vector& y, const Vector& z, const Vector& e, const Matrix& outcome_design) {
  auto w = att_weighting(y, z, e);
  auto c = control_rows(z);
  auto t = treated_rows(z);
  Matrix d = with_intercept(outcome_design);
  auto fit = least_squares(select_rows(d, c), select_rows(y, c), &w.weights);
  Vector mu0 = d * fit.coef;
  Vector resid = y - mu0;
  return select_rows(resid, t).mean() - w.weights.dot(select_rows(resid, c));
}

Matching nearest_neighbor_match(const Vector& score, const Vector& z) {
  Matching m;
  m.treated = treated_rows(z);
  auto c = control_rows(z);
  if (c.empty()) throw Error("matching: no controls");
  for (Index i : m.treated) {
    Index best = c.front();
    double best_d = std::abs(score(i) - score(best));
    for (Index j : c) {
      double d = std::abs(score(i) - score(j));
      if (d < best_d) best_d = d, best = j;  // strict: earlier rows win ties
    }
    m.match.push_back(best);
  }
  return m;
}

ResponseSurfaces fit_response_surfaces(const EstimatorInput& in, const BoostingOptions& opts) {
  auto t = treated_rows(in.z);
  auto c = control_rows(in.z);
  ResponseSurfaces s;
  BoostingOptions o0 = opts;
  o0.seed = derive_seed(opts.seed, {0});
  BoostingOptions o1 = opts;
  o1.seed = derive_seed(opts.seed, {1});
  auto f0 = fit_boosting_cv(select_rows(in.x, c), select_rows(in.y, c), o0);
  auto f1 = fit_boosting_cv(select_rows(in.x, t), select_rows(in.y, t), o1);
  s.mu0 = std::move(f0.model);
  s.mu1 = std::move(f1.model);
  s.rounds0 = f0.rounds;
  s.rounds1 = f1.rounds;
  return s;
}

// -------------------------------------------------------------- estimators

EstimateResult diff_in_means(const EstimatorInput& in, const EstimatorOptions&) {
  in.validate();
  EstimateResult r;
  r.method = "diff_in_means";
  Vector y1 = select_rows(in.y, treated_rows(in.z));
  Vector y0 = select_rows(in.y, control_rows(in.z));
  r.satt_hat = y1.mean() - y0.mean();
  double n1 = static_cast<double>(y1.size());
  double n0 = static_cast<double>(y0.size());
  double a = variance(y1) / n1;
  double b = variance(y0) / n0;
  if (y1.size() < 2 || y0.size() < 2) r.warnings.push_back("group of size 1: its variance is taken as 0");
  double se = std::sqrt(a + b);
  double df = (a + b) * (a + b);
  double den = 0.0;
  if (n1 > 1) den += a * a / (n1 - 1.0);
  if (n0 > 1) den += b * b / (n0 - 1.0);
  df = den > 0.0 ? df / den : std::numeric_limits<double>::infinity();
  double q = t_quantile(df);
  r.lo = r.satt_hat - q * se;
  r.hi = r.satt_hat + q * se;
  r.diagnostics["se"] = se;
  r.diagnostics["df"] = std::isfinite(df) ? df : 0.0;
  return r;
}

EstimateResult ols_adjust(const EstimatorInput& in, const EstimatorOptions&) {
  in.validate();
  EstimateResult r;
  r.method = "ols_adjust";
  Matrix d = with_z(in.z, varying_columns(in.x));
  auto bad = collinear_columns(d);
  if (!bad.empty()) {
    std::ostringstream os;
    os << "ols_adjust: design is collinear (dependent column";
    for (Index j : bad) os << ' ' << (j == 1 ? std::string("z") : "#" + std::to_string(j));
    os << ")";
    throw Error(os.str());
  }
  auto fit = least_squares(d, in.y);
  r.satt_hat = fit.coef(1);
  Matrix v = sandwich_covariance(d, fit.residuals);
  double se = std::sqrt(std::max(0.0, v(1, 1)));
  double q = t_quantile(static_cast<double>(d.rows() - d.cols()));
  r.lo = r.satt_hat - q * se;
  r.hi = r.satt_hat + q * se;
  r.diagnostics["se"] = se;
  return r;
}

EstimateResult regression_ra(const EstimatorInput& in, const EstimatorOptions& opts) {
  in.validate();
  EstimateResult r;
  r.method = "regression_ra";
  auto fit = regression_ra_core(in);
  r.satt_hat = fit.estimate;
  r.individual_effects = fit.effects;
  add_bootstrap(r, in, opts, 3, [](const EstimatorInput& b, std::uint64_t) { return regression_ra_core(b).estimate; });
  return r;
}

EstimateResult iptw_att(const EstimatorInput& in, const EstimatorOptions& opts) {
  in.validate();
  EstimateResult r;
  r.method = "iptw_att";
  Vector e = fit_propensity(in.x, in.z, opts.truncation);
  auto w = att_weighting(in.y, in.z, e);
  r.satt_hat = w.estimate;
  r.diagnostics["ess"] = w.ess;
  r.diagnostics["max_weight"] = w.weights.maxCoeff();
  r.diagnostics["min_weight"] = w.weights.minCoeff();
  if (w.ess < opts.min_ess) {
    std::ostringstream os;
    os << "control effective sample size " << w.ess << " is below " << opts.min_ess;
    r.warnings.push_back(os.str());
  }
  r.weights = w.weights;
  const double t = opts.truncation;
  add_bootstrap(r, in, opts, 4, [t](const EstimatorInput& b, std::uint64_t) {
    return att_weighting(b.y, b.z, fit_propensity(b.x, b.z, t)).estimate;
  });
  return r;
}

EstimateResult ipw_ra_dr(const EstimatorInput& in, const EstimatorOptions& opts) {
  in.validate();
  EstimateResult r;
  r.method = "ipw_ra_dr";
  const double t = opts.truncation;
  Matrix x = varying_columns(in.x);
  Vector e = fit_propensity(x, in.z, t);
  auto w = att_weighting(in.y, in.z, e);
  auto c = control_rows(in.z);
  auto tr = treated_rows(in.z);
  Matrix d = with_intercept(x);
  auto fit = least_squares(select_rows(d, c), select_rows(in.y, c), &w.weights);
  Vector mu0 = d * fit.coef;
  Vector resid = in.y - mu0;
  r.satt_hat = select_rows(resid, tr).mean() - w.weights.dot(select_rows(resid, c));
  r.individual_effects = select_rows(resid, tr);
  r.weights = w.weights;
  r.diagnostics["ess"] = w.ess;
  add_bootstrap(r, in, opts, 5, [t](const EstimatorInput& b, std::uint64_t) {
    Matrix bx = varying_columns(b.x);
    return dr_att(b.y, b.z, fit_propensity(bx, b.z, t), bx);
  });
  return r;
}

EstimateResult psm_match(const EstimatorInput& in, const EstimatorOptions& opts) {
  in.validate();
  EstimateResult r;
  r.method = "psm_match";
  Vector e = fit_propensity(in.x, in.z, opts.truncation);
  Vector score = e.unaryExpr([](double p) { return logit(p); });
  auto m = nearest_neighbor_match(score, in.z);
  const double n1 = static_cast<double>(m.treated.size());
  Vector diff(static_cast<Index>(m.treated.size()));
  for (std::size_t k = 0; k < m.treated.size(); ++k)
    diff(static_cast<Index>(k)) = in.y(m.treated[k]) - in.y(m.match[k]);
  r.satt_hat = diff.mean();
  r.individual_effects = diff;

  // Matched-pair variance with a control-reuse term; each control's
  // conditional variance comes from its nearest other control.
  auto c = control_rows(in.z);
  std::vector<double> uses(static_cast<std::size_t>(in.z.size()), 0.0);
  for (Index j : m.match) uses[static_cast<std::size_t>(j)] += 1.0;
  double v = (diff.array() - r.satt_hat).square().sum();
  double max_uses = 0.0;
  for (Index j : c) {
    double k = uses[static_cast<std::size_t>(j)];
    max_uses = std::max(max_uses, k);
    if (k < 2.0 || c.size() < 2) continue;
    Index nb = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Index l : c) {
      if (l == j) continue;
      double d = std::abs(score(j) - score(l));
      if (d < best) best = d, nb = l;
    }
    double s2 = 0.5 * (in.y(j) - in.y(nb)) * (in.y(j) - in.y(nb));
    v += (k * k - k) * s2;
  }
  double se = std::sqrt(v) / n1;
  r.lo = r.satt_hat - kZ975 * se;
  r.hi = r.satt_hat + kZ975 * se;
  r.diagnostics["se"] = se;
  r.diagnostics["max_control_uses"] = max_uses;
  return r;
}

EstimateResult ps_stratify(const EstimatorInput& in, const EstimatorOptions& opts) {
  in.validate();
  if (opts.n_strata < 1) throw Error("ps_stratify: n_strata must be positive");
  EstimateResult r;
  r.method = "ps_stratify";
  Matrix x = varying_columns(in.x);
  Vector e = fit_propensity(x, in.z, opts.truncation);
  const Index n = in.z.size();

  std::vector<double> cuts;
  if (e.maxCoeff() - e.minCoeff() >= 1e-10) {
    Vector et = select_rows(e, treated_rows(in.z));
    std::vector<double> ev(et.data(), et.data() + et.size());
    for (int k = 1; k < opts.n_strata; ++k) {
      double q = quantile(ev, static_cast<double>(k) / opts.n_strata);
      if (cuts.empty() || q > cuts.back()) cuts.push_back(q);
    }
  }
  std::vector<int> stratum(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    stratum[static_cast<std::size_t>(i)] =
        static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), e(i)) - cuts.begin());

  // Merge strata until each has treated units and at least two controls.
  int count = static_cast<int>(cuts.size()) + 1;
  auto tally = [&](int s, double zv) {
    int c = 0;
    for (Index i = 0; i < n; ++i) c += stratum[static_cast<std::size_t>(i)] == s && in.z(i) == zv;
    return c;
  };
  for (int s = 0; s < count && count > 1;) {
    int n1 = tally(s, 1.0);
    int n0 = tally(s, 0.0);
    if (n1 >= 1 && n0 >= 2) {
      ++s;
      continue;
    }
    int into = s + 1 < count ? s + 1 : s - 1;
    if (n1 >= 1) {
      std::ostringstream os;
      os << "stratum " << s + 1 << " has " << n0 << " controls; merged with a neighbour";
      r.warnings.push_back(os.str());
    }
    for (auto& v : stratum) {
      if (v == s) v = into;
      if (v > s) --v;
    }
    --count;
    s = 0;
  }

  double total = 0.0;
  double var = 0.0;
  const double n1_all = static_cast<double>(in.treated());
  for (int s = 0; s < count; ++s) {
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i)
      if (stratum[static_cast<std::size_t>(i)] == s) rows.push_back(i);
    Matrix d = with_z(select_rows(in.z, rows), select_rows(x, rows));
    auto bad = collinear_columns(d);
    if (!bad.empty()) {
      std::vector<Index> keep;
      for (Index j = 0; j < d.cols(); ++j)
        if (std::find(bad.begin(), bad.end(), j) == bad.end()) keep.push_back(j);
      Matrix reduced(d.rows(), static_cast<Index>(keep.size()));
      for (std::size_t k = 0; k < keep.size(); ++k) reduced.col(static_cast<Index>(k)) = d.col(keep[k]);
      d = reduced;
    }
    Vector ys = select_rows(in.y, rows);
    auto fit = least_squares(d, ys);
    Matrix v = sandwich_covariance(d, fit.residuals);
    double n1 = select_rows(in.z, rows).sum();
    double share = n1 / n1_all;
    total += share * fit.coef(1);
    var += share * share * std::max(0.0, v(1, 1));
    r.diagnostics["stratum_" + std::to_string(s + 1) + "_treated"] = n1;
  }
  r.satt_hat = total;
  double se = std::sqrt(var);
  r.lo = total - kZ975 * se;
  r.hi = total + kZ975 * se;
  r.diagnostics["strata"] = count;
  r.diagnostics["se"] = se;
  return r;
}

namespace {

struct BalanceFit {
  double estimate;
  Vector weights;
  int iterations;
  double violation;
  double ess;
};

BalanceFit balance_core(const EstimatorInput& in, const Vector& mu0_hat, double truncation) {
  Matrix x = varying_columns(in.x);
  Vector e = fit_propensity(x, in.z, truncation);
  auto base = att_weighting(in.y, in.z, e);
  auto c = control_rows(in.z);
  auto t = treated_rows(in.z);
  Matrix cols(in.z.size(), x.cols() + 1);
  cols.leftCols(x.cols()) = x;
  cols.col(x.cols()) = mu0_hat;
  Vector target = select_rows(cols, t).colwise().mean().transpose();
  std::vector<std::string> names;
  for (Index j = 0; j < x.cols(); ++j) names.push_back("covariate " + std::to_string(j + 1));
  names.push_back("fitted control response");
  auto bal = entropy_balance(select_rows(cols, c), target, base.weights, names);
  double est = treated_mean(in.y, in.z) - bal.weights.dot(select_rows(in.y, c));
  return BalanceFit{est, bal.weights, bal.iterations, bal.max_violation, 1.0 / bal.weights.squaredNorm()};
}

// Boosting inside the bootstrap: at most `cap` rounds, with the shrinkage
// raised so rounds * shrinkage matches the CV choice.
BoostingOptions reduced_boosting(const BoostingOptions& base, int chosen, int cap) {
  BoostingOptions o = base;
  int rounds = std::max(1, std::min(chosen, cap));
  o.shrinkage = std::min(1.0, base.shrinkage * chosen / rounds);
  o.max_rounds = rounds;
  return o;
}

Vector refit_mu0(const EstimatorInput& in, const BoostingOptions& o) {
  auto c = control_rows(in.z);
  auto model = BoostedTrees::fit(select_rows(in.x, c), select_rows(in.y, c), o.max_rounds, o);
  return model.predict(in.x);
}

void require_rows(const EstimatorInput& in, const char* method) {
  if (in.x.rows() < 100) throw Error(std::string(method) + ": at least 100 rows are required");
}

}  // namespace

EstimateResult entropy_balance_dr(const EstimatorInput& in, const EstimatorOptions& opts) {
  in.validate();
  require_rows(in, "entropy_balance_dr");
  EstimateResult r;
  r.method = "entropy_balance_dr";
  auto c = control_rows(in.z);
  BoostingOptions bo = opts.boosting;
  bo.seed = derive_seed(opts.seed, {6, 0});
  auto cv = fit_boosting_cv(select_rows(in.x, c), select_rows(in.y, c), bo);
  Vector mu0 = cv.model.predict(in.x);
  auto fit = balance_core(in, mu0, opts.truncation);
  r.satt_hat = fit.estimate;
  r.weights = fit.weights;
  r.diagnostics["boosting_rounds"] = cv.rounds;
  r.diagnostics["newton_iterations"] = fit.iterations;
  r.diagnostics["max_violation"] = fit.violation;
  r.diagnostics["ess"] = fit.ess;
  BoostingOptions reduced = reduced_boosting(opts.boosting, cv.rounds, opts.bootstrap_rounds);
  const double t = opts.truncation;
  add_bootstrap(r, in, opts, 6, [reduced, t](const EstimatorInput& b, std::uint64_t) {
    return balance_core(b, refit_mu0(b, reduced), t).estimate;
  });
  return r;
}

EstimateResult flexible_rs(const EstimatorInput& in, const EstimatorOptions& opts) {
  in.validate();
  require_rows(in, "flexible_rs");
  EstimateResult r;
  r.method = "flexible_rs";
  BoostingOptions bo = opts.boosting;
  bo.seed = derive_seed(opts.seed, {7, 0});
  auto s = fit_response_surfaces(in, bo);
  auto t = treated_rows(in.z);
  Matrix xt = select_rows(in.x, t);
  Vector effects = select_rows(in.y, t) - s.mu0.predict(xt);
  r.satt_hat = effects.mean();
  r.individual_effects = effects;
  r.diagnostics["boosting_rounds_control"] = s.rounds0;
  r.diagnostics["boosting_rounds_treated"] = s.rounds1;
  BoostingOptions reduced = reduced_boosting(opts.boosting, s.rounds0, opts.bootstrap_rounds);
  add_bootstrap(r, in, opts, 7, [reduced](const EstimatorInput& b, std::uint64_t) {
    Vector mu0 = refit_mu0(b, reduced);
    double sum = 0.0;
    double n1 = 0.0;
    for (Index i = 0; i < b.z.size(); ++i)
      if (b.z(i) == 1.0) sum += b.y(i) - mu0(i), n1 += 1.0;
    return sum / n1;
  });
  return r;
}

EstimateResult oracle_catt(const Realization& real) {
  EstimateResult r;
  r.method = kOracleMethod;
  auto t = treated_rows(real.z);
  if (t.empty()) throw Error("oracle_catt: realization has no treated units");
  Vector tau = real.oracle.mu1 - real.oracle.mu0;
  r.satt_hat = select_rows(tau, t).mean();
  r.lo = r.hi = r.satt_hat;
  r.individual_effects = select_rows(tau, t);
  return r;
}

// ---------------------------------------------------------------- registry

namespace {

const std::vector<std::pair<std::string, Estimator>>& registry() {
  static const std::vector<std::pair<std::string, Estimator>> r = {
      {"diff_in_means", diff_in_means}, {"ols_adjust", ols_adjust},
      {"regression_ra", regression_ra}, {"iptw_att", iptw_att},
      {"ipw_ra_dr", ipw_ra_dr},         {"psm_match", psm_match},
      {"ps_stratify", ps_stratify},     {"entropy_balance_dr", entropy_balance_dr},
      {"flexible_rs", flexible_rs},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& estimator_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

const Estimator& find_estimator(const std::string& name) {
  for (const auto& [n, fn] : registry())
    if (n == name) return fn;
  std::string msg = "unknown method '" + name + "'; registered methods:";
  for (const auto& n : estimator_names()) msg += " " + n;
  throw Error(msg);
}

EstimateResult run_estimator(const std::string& name, const EstimatorInput& in, const EstimatorOptions& opts) {
  const auto& fn = find_estimator(name);
  auto start = std::chrono::steady_clock::now();
  EstimateResult r = fn(in, opts);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace ctb
