#include "causal_testbed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "causal_testbed/dgp.hpp"
#include "causal_testbed/error.hpp"
#include "causal_testbed/estimators.hpp"
#include "causal_testbed/glm.hpp"
#include "causal_testbed/rng.hpp"

namespace ctb {

double r2_linear(const Vector& y, const Matrix& design) {
  if (design.rows() != y.size()) throw Error("r2_linear: design rows and y length differ");
  if (y.size() < design.cols() + 2) throw Error("r2_linear: need at least cols + 2 rows");
  if (y.size() == 0 || y.maxCoeff() == y.minCoeff()) return 0.0;
  auto fit = least_squares(with_intercept(design), y);
  return r_squared(y, fit.fitted);
}

PropensityR2 propensity_r2(const Vector& z, const Matrix& design) {
  auto fit = fit_logistic(design, z);
  PropensityR2 out;
  if (fit.separated) {
    out.value = 1.0;
    out.separated = true;
    return out;
  }
  out.value = std::clamp(1.0 - fit.loglik / fit.loglik_null, 0.0, 1.0);
  return out;
}

namespace {

void check_groups(const Matrix& design, const Vector& z, const char* what) {
  if (design.rows() != z.size()) throw Error(std::string(what) + ": design rows and z length differ");
  auto n1 = z.sum();
  if (n1 < 1.0 || n1 > static_cast<double>(z.size()) - 1.0)
    throw Error(std::string(what) + ": both groups must be nonempty");
}

// Mean nearest-opposite-group Euclidean distance on already whitened rows.
double mean_nearest_opposite(const Matrix& w, const Vector& z) {
  auto t = rows_where(z, 1.0);
  auto c = rows_where(z, 0.0);
  Matrix wt = select_rows(w, t);
  Matrix wc = select_rows(w, c);
  Vector nt = wt.rowwise().squaredNorm();
  Vector nc = wc.rowwise().squaredNorm();
  Matrix cross = wt * wc.transpose();
  double total = 0.0;
  for (Index i = 0; i < wt.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < wc.rows(); ++j) best = std::min(best, nt(i) + nc(j) - 2.0 * cross(i, j));
    total += std::sqrt(std::max(0.0, best));
  }
  for (Index j = 0; j < wc.rows(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < wt.rows(); ++i) best = std::min(best, nt(i) + nc(j) - 2.0 * cross(i, j));
    total += std::sqrt(std::max(0.0, best));
  }
  return total / static_cast<double>(w.rows());
}

}  // namespace

double mahalanobis_counterfactual_distance(const Matrix& design, const Vector& z, const Matrix& covariance) {
  check_groups(design, z, "mahalanobis");
  if (covariance.rows() != design.cols() || covariance.cols() != design.cols())
    throw Error("mahalanobis: covariance shape does not match the design");
  auto chol = cholesky(covariance);
  if (chol.failed_minor) {
    auto bad = collinear_columns(design.rowwise() - design.colwise().mean());
    std::ostringstream os;
    os << "mahalanobis: covariance is singular (leading minor " << *chol.failed_minor << ")";
    if (!bad.empty()) {
      os << "; collinear columns:";
      for (Index j : bad) os << ' ' << j + 1;
    }
    throw Error(os.str());
  }
  // Rows whitened by L^{-1}: w = x L^{-T}.
  Matrix w = chol.lower.triangularView<Eigen::Lower>().solve(design.transpose()).transpose();
  return mean_nearest_opposite(w, z);
}

double mahalanobis_counterfactual_distance(const Matrix& design, const Vector& z) {
  check_groups(design, z, "mahalanobis");
  const Index p = design.cols();
  Matrix s = Matrix::Zero(p, p);
  for (double g : {0.0, 1.0}) {
    Matrix xg = select_rows(design, rows_where(z, g));
    Matrix centered = xg.rowwise() - xg.colwise().mean();
    s += centered.transpose() * centered;
  }
  s /= std::max<double>(1.0, static_cast<double>(design.rows()) - 2.0);
  s.diagonal().array() += 1e-6;
  return mahalanobis_counterfactual_distance(design, z, s);
}

double mean_imbalance(const Matrix& design, const Vector& z) {
  check_groups(design, z, "mean_imbalance");
  Vector m1 = select_rows(design, rows_where(z, 1.0)).colwise().mean();
  Vector m0 = select_rows(design, rows_where(z, 0.0)).colwise().mean();
  return (m1 - m0).norm();
}

namespace {

// Entropic transport between uniform masses in the log domain. For potentials
// f the column potentials g(f) make the column marginals exact; the row
// marginals are then what the iterations drive to 1/n.
class EntropicTransport {
 public:
  EntropicTransport(const Matrix& cost, double eps)
      : cost_(cost), eps_(eps), n_(cost.rows()), m_(cost.cols()),
        log_a_(-std::log(static_cast<double>(n_))), log_b_(-std::log(static_cast<double>(m_))) {}

  void set_eps(double eps) { eps_ = eps; }

  // g(f): exact column marginals.
  Vector column_potential(const Vector& f) const {
    Vector g(m_);
    for (Index j = 0; j < m_; ++j) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Index i = 0; i < n_; ++i) mx = std::max(mx, (f(i) - cost_(i, j)) / eps_);
      double s = 0.0;
      for (Index i = 0; i < n_; ++i) s += std::exp((f(i) - cost_(i, j)) / eps_ - mx);
      g(j) = eps_ * (log_b_ - mx - std::log(s));
    }
    return g;
  }

  // Sinkhorn row update given g.
  Vector row_potential(const Vector& g) const {
    Vector f(n_);
    for (Index i = 0; i < n_; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < m_; ++j) mx = std::max(mx, (g(j) - cost_(i, j)) / eps_);
      double s = 0.0;
      for (Index j = 0; j < m_; ++j) s += std::exp((g(j) - cost_(i, j)) / eps_ - mx);
      f(i) = eps_ * (log_a_ - mx - std::log(s));
    }
    return f;
  }

  Matrix plan(const Vector& f, const Vector& g) const {
    Matrix p(n_, m_);
    for (Index i = 0; i < n_; ++i)
      for (Index j = 0; j < m_; ++j) p(i, j) = std::exp((f(i) + g(j) - cost_(i, j)) / eps_);
    return p;
  }

  double row_error(const Matrix& p) const {
    return (p.rowwise().sum().array() - std::exp(log_a_)).abs().sum();
  }

  // Semi-dual objective, concave in f.
  double semi_dual(const Vector& f, const Vector& g) const {
    return std::exp(log_a_) * f.sum() + std::exp(log_b_) * g.sum();
  }

  // Damped Newton step on the semi-dual; returns the new f.
  Vector newton(const Vector& f, const Vector& g, const Matrix& p) const {
    Vector r = p.rowwise().sum();
    Vector grad = (Vector::Constant(n_, std::exp(log_a_)) - r);
    Matrix h = -(p * p.transpose()) * std::exp(-log_b_);
    h.diagonal() += r;
    h.diagonal().array() += 1e-14 * (1.0 + h.diagonal().maxCoeff());
    Vector step = eps_ * h.ldlt().solve(grad);
    double slope = grad.dot(step) / eps_;
    if (!(slope > 0.0)) step = eps_ * grad, slope = grad.squaredNorm();
    double base = semi_dual(f, g);
    double alpha = 1.0;
    for (int half = 0; half < 50; ++half) {
      Vector trial = f + alpha * step;
      if (semi_dual(trial, column_potential(trial)) >= base + 1e-4 * alpha * slope) return trial;
      alpha *= 0.5;
    }
    return f + alpha * step;
  }

 private:
  const Matrix& cost_;
  double eps_;
  Index n_;
  Index m_;
  double log_a_;
  double log_b_;
};

}  // namespace

double sinkhorn_cost(const Matrix& a, const Matrix& b, const SinkhornOptions& opts) {
  if (a.rows() == 0 || b.rows() == 0) throw Error("sinkhorn: empty point cloud");
  if (a.cols() != b.cols()) throw Error("sinkhorn: dimension mismatch");
  const Index n = a.rows();
  const Index m = b.rows();
  Matrix cost = (a.rowwise().squaredNorm() * Vector::Ones(m).transpose() +
                 Vector::Ones(n) * b.rowwise().squaredNorm().transpose() - 2.0 * a * b.transpose())
                    .cwiseMax(0.0);
  const double cmax = cost.maxCoeff();
  if (cmax <= 0.0) return 0.0;

  // Epsilon scaling: the regularization starts at the largest cost and halves
  // whenever the row marginals are within 1e-2, warm-starting from the
  // previous potentials. At the target epsilon, plain Sinkhorn sweeps run
  // until they stall and damped Newton steps on the semi-dual finish.
  double eps = std::max(opts.epsilon, cmax);
  EntropicTransport ot(cost, eps);
  Vector f = Vector::Zero(n);
  Vector g = ot.column_potential(f);
  Matrix plan = ot.plan(f, g);
  double err = ot.row_error(plan);
  double previous = std::numeric_limits<double>::infinity();
  int final_sweeps = 0;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    if (eps <= opts.epsilon && err <= opts.tol) break;
    if (eps <= opts.epsilon && final_sweeps >= 20 && err > 0.9 * previous) {
      f = ot.newton(f, g, plan);
    } else {
      f = ot.row_potential(g);
      if (eps <= opts.epsilon) ++final_sweeps;
    }
    g = ot.column_potential(f);
    plan = ot.plan(f, g);
    previous = err;
    err = ot.row_error(plan);
    if (eps > opts.epsilon && err <= 1e-2) {
      eps = std::max(opts.epsilon, 0.5 * eps);
      ot.set_eps(eps);
      g = ot.column_potential(f);
      plan = ot.plan(f, g);
      err = ot.row_error(plan);
      previous = std::numeric_limits<double>::infinity();
    }
  }
  if (err > opts.tol || eps > opts.epsilon) {
    std::ostringstream os;
    os << "sinkhorn: marginal error " << err << " after " << it << " iterations (epsilon " << eps
       << ", target " << opts.epsilon << ")";
    throw Error(os.str());
  }
  return plan.cwiseProduct(cost).sum();
}

double wasserstein_distance(const Matrix& design, const Vector& z, const SinkhornOptions& opts) {
  check_groups(design, z, "wasserstein");
  auto pick = [&](double g, std::uint64_t label) {
    auto rows = rows_where(z, g);
    if (static_cast<Index>(rows.size()) > opts.max_per_group) {
      Rng rng(derive_seed(opts.seed, {label}));
      auto idx = rng.sample_without_replacement(rows.size(), static_cast<std::size_t>(opts.max_per_group));
      std::sort(idx.begin(), idx.end());
      std::vector<Index> kept;
      for (auto k : idx) kept.push_back(rows[k]);
      rows = kept;
    }
    return select_rows(design, rows);
  };
  return sinkhorn_cost(pick(1.0, 1), pick(0.0, 0), opts);
}

double alignment_correlation(const Realization& r) {
  std::vector<Index> rows;
  for (Index i = 0; i < r.oracle.e.size(); ++i)
    if (r.oracle.e(i) > 0.0 && r.oracle.e(i) < 1.0) rows.push_back(i);
  if (rows.size() < 2) return 0.0;
  Vector e = select_rows(r.oracle.e, rows);
  if (e.maxCoeff() == e.minCoeff()) return 0.0;
  Vector l = e.unaryExpr([](double p) { return logit(p); });
  return std::clamp(correlation(l, select_rows(r.y, rows)), -1.0, 1.0);
}

double heterogeneity_sd(const Realization& r) {
  Vector tau = r.oracle.mu1 - r.oracle.mu0;
  if (tau.size() < 2 || tau.maxCoeff() == tau.minCoeff()) return 0.0;
  double sy = sd(r.y);
  return sy > 0.0 ? sd(tau) / sy : 0.0;
}

double nonoracle_alignment_proxy(const std::optional<Vector>& individual_effects, const Vector& propensity) {
  if (!individual_effects)
    throw Error("alignment proxy: individual effects are missing; flexible_rs supplies them");
  if (individual_effects->size() != propensity.size())
    throw Error("alignment proxy: effects and propensities must cover the same treated units");
  Matrix d = propensity;
  return r2_linear(*individual_effects, d);
}

double MetricVector::get(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e.value;
  throw Error("metric '" + name + "' is not present");
}

const std::vector<std::string>& observable_metric_names() {
  static const std::vector<std::string> names = {
      "r2_y", "propensity_r2", "alignment_proxy", "mahalanobis", "mean_imbalance", "wasserstein", "pct_treated",
  };
  return names;
}

const std::vector<std::string>& oracle_metric_names() {
  static const std::vector<std::string> names = {
      "oracle_treatment_model", "oracle_treatment_pct", "oracle_overlap", "oracle_response_model",
      "oracle_alignment", "oracle_heterogeneity", "oracle_alignment_corr", "oracle_mahalanobis",
      "oracle_mean_imbalance", "oracle_wasserstein", "oracle_r2_logit_e", "oracle_r2_tau",
      "oracle_r2_y_truth", "oracle_r2_ratio", "oracle_r2_y0", "oracle_r2_y0_truth",
      "oracle_r2_y1", "oracle_r2_y1_truth", "oracle_heterogeneity_sd",
  };
  return names;
}

namespace {

Matrix zscore(const Matrix& x) {
  Matrix out = x;
  for (Index j = 0; j < x.cols(); ++j) {
    double m = x.col(j).mean();
    double s = sd(Vector(x.col(j)));
    out.col(j).array() -= m;
    if (s > 0.0) out.col(j) /= s;
  }
  return out;
}

}  // namespace

std::vector<MetricEntry> observable_metrics(const EstimatorInput& in, const MetricOptions& opts,
                                            const std::optional<Vector>& individual_effects) {
  in.validate();
  std::optional<Vector> effects = individual_effects;
  if (!effects) {
    auto c = rows_where(in.z, 0.0);
    auto t = rows_where(in.z, 1.0);
    BoostingOptions bo = opts.boosting;
    bo.seed = derive_seed(opts.seed, {3});
    auto fit = fit_boosting_cv(select_rows(in.x, c), select_rows(in.y, c), bo);
    Matrix xt = select_rows(in.x, t);
    effects = Vector(select_rows(in.y, t) - fit.model.predict(xt));
  }
  Vector e = fit_propensity(in.x, in.z, 0.0);
  Vector et = select_rows(e, rows_where(in.z, 1.0));
  SinkhornOptions so = opts.sinkhorn;
  so.seed = derive_seed(opts.seed, {1});
  std::vector<double> v = {
      r2_linear(in.y, in.x),
      propensity_r2(in.z, in.x).value,
      nonoracle_alignment_proxy(effects, et),
      mahalanobis_counterfactual_distance(in.x, in.z),
      mean_imbalance(in.x, in.z),
      wasserstein_distance(in.x, in.z, so),
      in.z.mean(),
  };
  std::vector<MetricEntry> out;
  const auto& names = observable_metric_names();
  for (std::size_t k = 0; k < names.size(); ++k) out.push_back({names[k], v[k], false});
  return out;
}

Matrix oracle_design(const DgpSpec& spec, const Matrix& x) {
  Matrix basis = truth_basis(spec, x);
  Matrix out(x.rows(), x.cols() + basis.cols());
  out << x, basis;
  return out;
}

std::vector<MetricEntry> oracle_metrics(const DgpSpec& spec, const Realization& r, const MetricOptions& opts) {
  if (!r.design) throw Error("oracle metrics: realization has no design");
  const Matrix& x = r.design->values;
  Matrix truth = zscore(truth_basis(spec, x));
  Matrix full = oracle_design(spec, x);
  auto codes = knob_codes(spec.knobs);

  std::vector<Index> free_rows;
  for (Index i = 0; i < r.oracle.e.size(); ++i)
    if (r.oracle.e(i) > 0.0) free_rows.push_back(i);
  Vector le = select_rows(r.oracle.e, free_rows).unaryExpr([](double p) { return logit(p); });
  double r2_logit = free_rows.size() > static_cast<std::size_t>(x.cols()) + 2
                        ? r2_linear(le, select_rows(x, free_rows))
                        : 0.0;
  Vector tau = r.oracle.mu1 - r.oracle.mu0;
  double r2_obs = r2_linear(r.y, x);
  double r2_truth = r2_linear(r.y, full);
  SinkhornOptions so = opts.sinkhorn;
  so.seed = derive_seed(opts.seed, {2});

  std::vector<double> v(codes.begin(), codes.end());
  v.insert(v.end(), {
                        alignment_correlation(r),
                        mahalanobis_counterfactual_distance(truth, r.z),
                        mean_imbalance(truth, r.z),
                        wasserstein_distance(truth, r.z, so),
                        r2_logit,
                        r2_linear(tau, x),
                        r2_truth,
                        r2_truth > 0.0 ? std::min(1.0, r2_obs / r2_truth) : 0.0,
                        r2_linear(r.oracle.y0, x),
                        r2_linear(r.oracle.y0, full),
                        r2_linear(r.oracle.y1, x),
                        r2_linear(r.oracle.y1, full),
                        heterogeneity_sd(r),
                    });
  std::vector<MetricEntry> out;
  const auto& names = oracle_metric_names();
  if (v.size() != names.size()) throw Error("oracle metrics: internal column count mismatch");
  for (std::size_t k = 0; k < names.size(); ++k) out.push_back({names[k], v[k], true});
  return out;
}

}  // namespace ctb
