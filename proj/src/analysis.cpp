#include "causal_testbed/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "causal_testbed/error.hpp"

namespace ctb {

double pehe(const Vector& tau_hat, const Vector& tau) {
  if (tau_hat.size() != tau.size()) {
    std::ostringstream os;
    os << "pehe: " << tau_hat.size() << " estimated effects but " << tau.size() << " true effects";
    throw Error(os.str());
  }
  if (tau.size() == 0) throw Error("pehe: no treated units");
  return std::sqrt((tau_hat - tau).squaredNorm() / static_cast<double>(tau.size()));
}

namespace {

using CellKey = std::pair<int, int>;

std::map<CellKey, const TruthRow*> truth_index(const std::vector<TruthRow>& truths) {
  std::map<CellKey, const TruthRow*> idx;
  for (const auto& t : truths) idx[{t.setting, t.replication}] = &t;
  return idx;
}

const TruthRow& join(const std::map<CellKey, const TruthRow*>& idx, const EstimateRow& e) {
  auto it = idx.find({e.setting, e.replication});
  if (it == idx.end()) throw Error("internal: unjoined estimate row");
  return *it->second;
}

void check_orphans(const std::vector<EstimateRow>& estimates, const std::map<CellKey, const TruthRow*>& idx) {
  std::vector<std::string> orphans;
  std::set<CellKey> seen;
  for (const auto& e : estimates) {
    if (idx.count({e.setting, e.replication}) || !seen.insert({e.setting, e.replication}).second) continue;
    orphans.push_back("setting " + std::to_string(e.setting) + " replication " + std::to_string(e.replication));
  }
  if (orphans.empty()) return;
  std::string msg = "estimate rows without a truth row:";
  for (std::size_t k = 0; k < orphans.size() && k < 20; ++k) msg += (k ? "; " : " ") + orphans[k];
  if (orphans.size() > 20) msg += "; ... (" + std::to_string(orphans.size()) + " cells)";
  throw Error(msg);
}

double log_abs_bias(double err) { return std::log(std::abs(err) + kLogBiasFloor); }

}  // namespace

std::vector<MethodSummary> summarize(const std::vector<EstimateRow>& estimates, const std::vector<TruthRow>& truths) {
  auto idx = truth_index(truths);
  check_orphans(estimates, idx);
  std::map<std::string, std::vector<const EstimateRow*>> by_method;
  for (const auto& e : estimates) by_method[e.method].push_back(&e);
  std::vector<MethodSummary> out;
  for (const auto& [method, rows] : by_method) {
    MethodSummary s;
    s.method = method;
    std::vector<double> errs;
    double cover = 0.0;
    double length = 0.0;
    double time = 0.0;
    double pehe_sum = 0.0;
    int pehe_n = 0;
    for (const auto* e : rows) {
      if (!e->ok()) {
        ++s.failures;
        continue;
      }
      double truth = join(idx, *e).satt;
      errs.push_back(e->satt_hat - truth);
      cover += (e->lo <= truth && truth <= e->hi) ? 1.0 : 0.0;
      length += e->hi - e->lo;
      time += e->wall_time;
      if (!std::isnan(e->pehe)) pehe_sum += e->pehe, ++pehe_n;
    }
    s.cells = static_cast<int>(errs.size());
    if (s.cells > 0) {
      // Sums in sorted order so the result does not depend on row order.
      std::vector<double> sorted = errs;
      std::sort(sorted.begin(), sorted.end());
      double sum = 0.0;
      for (double v : sorted) sum += v;
      const double n = static_cast<double>(s.cells);
      s.bias = sum / n;
      std::vector<double> dev;
      for (double v : sorted) dev.push_back((v - s.bias) * (v - s.bias));
      std::sort(dev.begin(), dev.end());
      double ss = 0.0;
      for (double v : dev) ss += v;
      s.rmse = std::max(std::abs(s.bias), std::sqrt(s.bias * s.bias + ss / n));
      s.coverage = cover / n;
      s.mean_length = length / n;
      s.mean_time = time / n;
      s.bias_iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    }
    if (pehe_n > 0) s.pehe = pehe_sum / pehe_n;
    out.push_back(s);
  }
  return out;
}

std::vector<MethodSummary> rank_by_rmse(std::vector<MethodSummary> summary) {
  std::stable_sort(summary.begin(), summary.end(), [](const MethodSummary& a, const MethodSummary& b) {
    if (a.rmse != b.rmse) return a.rmse < b.rmse;
    return a.method < b.method;
  });
  return summary;
}

namespace {

Matrix zscore_columns(const Matrix& m) {
  Matrix out = m;
  for (Index j = 0; j < m.cols(); ++j) {
    double mu = m.col(j).mean();
    out.col(j).array() -= mu;
    double s = out.col(j).norm() / std::sqrt(std::max<double>(1.0, static_cast<double>(m.rows())));
    if (s > 0.0) out.col(j) /= s;
  }
  return out;
}

Matrix with_squares(const Matrix& m) {
  Matrix z = zscore_columns(m);
  Matrix out(m.rows(), 2 * m.cols());
  out << z, z.array().square().matrix();
  return out;
}

Matrix hstack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

}  // namespace

std::vector<ExplainRow> explain_performance(const std::vector<EstimateRow>& estimates,
                                            const std::vector<TruthRow>& truths, const MetricTable& metrics,
                                            int min_cells, bool skip_small) {
  auto idx = truth_index(truths);
  check_orphans(estimates, idx);
  std::map<CellKey, const MetricRow*> midx;
  for (const auto& r : metrics.rows) {
    if (r.values.size() != metrics.names.size()) throw Error("explain_performance: ragged metric row");
    midx[{r.setting, r.replication}] = &r;
  }
  std::vector<Index> observable_cols;
  for (std::size_t k = 0; k < metrics.names.size(); ++k)
    if (metrics.names[k].rfind("oracle_", 0) != 0) observable_cols.push_back(static_cast<Index>(k));

  std::map<std::string, std::vector<const EstimateRow*>> by_method;
  for (const auto& e : estimates)
    if (e.ok()) by_method[e.method].push_back(&e);

  std::vector<ExplainRow> out;
  for (auto& [method, rows] : by_method) {
    std::sort(rows.begin(), rows.end(), [](const EstimateRow* a, const EstimateRow* b) {
      return std::pair(a->setting, a->replication) < std::pair(b->setting, b->replication);
    });
    const Index n = static_cast<Index>(rows.size());
    if (n < min_cells && skip_small) {
      const double na = std::numeric_limits<double>::quiet_NaN();
      out.push_back({method, static_cast<int>(n), na, na, na, na, false});
      continue;
    }
    if (n < min_cells) {
      std::ostringstream os;
      os << "explain_performance: method " << method << " has " << n << " cells; at least " << min_cells
         << " are required";
      throw Error(os.str());
    }
    Vector y(n);
    Matrix all(n, static_cast<Index>(metrics.names.size()));
    std::vector<int> settings;
    for (Index i = 0; i < n; ++i) {
      const auto* e = rows[static_cast<std::size_t>(i)];
      y(i) = log_abs_bias(e->satt_hat - join(idx, *e).satt);
      auto it = midx.find({e->setting, e->replication});
      if (it == midx.end())
        throw Error("explain_performance: no metrics for setting " + std::to_string(e->setting) +
                    " replication " + std::to_string(e->replication));
      for (Index j = 0; j < all.cols(); ++j) all(i, j) = it->second->values[static_cast<std::size_t>(j)];
      settings.push_back(e->setting);
    }
    if (!all.allFinite()) throw Error("explain_performance: non-finite metric values");
    Matrix obs(n, static_cast<Index>(observable_cols.size()));
    for (std::size_t k = 0; k < observable_cols.size(); ++k) obs.col(static_cast<Index>(k)) = all.col(observable_cols[k]);

    std::vector<int> levels = settings;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    Matrix dummies = Matrix::Zero(n, std::max<Index>(0, static_cast<Index>(levels.size()) - 1));
    for (Index i = 0; i < n; ++i) {
      auto pos = std::lower_bound(levels.begin(), levels.end(), settings[static_cast<std::size_t>(i)]) - levels.begin();
      if (pos > 0) dummies(i, pos - 1) = 1.0;
    }

    ExplainRow row;
    row.method = method;
    row.cells = static_cast<int>(n);
    auto r2 = [&](const Matrix& design) {
      if (y.maxCoeff() == y.minCoeff()) return 0.0;
      auto fit = least_squares(with_intercept(design), y);
      row.rank_deficient = row.rank_deficient || fit.rank_deficient;
      return r_squared(y, fit.fitted);
    };
    Matrix obs_sq = with_squares(obs);
    Matrix all_sq = with_squares(all);
    row.nonoracle_metrics = r2(obs_sq);
    row.settings = r2(dummies);
    row.all_metrics = r2(all_sq);
    row.settings_and_metrics = std::max(row.settings, r2(hstack(dummies, all_sq)));
    out.push_back(row);
  }
  return out;
}

double VarianceComponents::share(double component) const { return total > 0.0 ? component / total : 0.0; }

VarianceComponents variance_components(const std::vector<Observation>& obs) {
  std::vector<std::string> methods;
  std::vector<int> settings;
  for (const auto& o : obs) {
    methods.push_back(o.method);
    settings.push_back(o.setting);
  }
  std::sort(methods.begin(), methods.end());
  methods.erase(std::unique(methods.begin(), methods.end()), methods.end());
  std::sort(settings.begin(), settings.end());
  settings.erase(std::unique(settings.begin(), settings.end()), settings.end());
  const std::size_t a = methods.size();
  const std::size_t b = settings.size();
  if (a < 1 || b < 2) throw Error("variance_components: need at least 2 settings");

  std::vector<double> sum(a * b, 0.0);
  std::vector<double> count(a * b, 0.0);
  auto cell = [&](const Observation& o) {
    std::size_t i = static_cast<std::size_t>(std::lower_bound(methods.begin(), methods.end(), o.method) - methods.begin());
    std::size_t j = static_cast<std::size_t>(std::lower_bound(settings.begin(), settings.end(), o.setting) - settings.begin());
    return i * b + j;
  };
  for (const auto& o : obs) {
    auto c = cell(o);
    sum[c] += o.value;
    count[c] += 1.0;
  }
  double inv = 0.0;
  for (std::size_t c = 0; c < a * b; ++c) {
    if (count[c] == 0.0) {
      throw Error("variance_components: method " + methods[c / b] + " has no value in setting " +
                  std::to_string(settings[c % b]));
    }
    inv += 1.0 / count[c];
  }
  const double nh = static_cast<double>(a * b) / inv;
  const double big_n = static_cast<double>(obs.size());
  if (big_n <= static_cast<double>(a * b)) throw Error("variance_components: need at least 2 replications in some cell");

  std::vector<double> m(a * b);
  for (std::size_t c = 0; c < a * b; ++c) m[c] = sum[c] / count[c];
  std::vector<double> mi(a, 0.0);
  std::vector<double> mj(b, 0.0);
  double grand = 0.0;
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      mi[i] += m[i * b + j] / static_cast<double>(b);
      mj[j] += m[i * b + j] / static_cast<double>(a);
      grand += m[i * b + j] / static_cast<double>(a * b);
    }
  double ss_a = 0.0;
  double ss_b = 0.0;
  double ss_ab = 0.0;
  for (std::size_t i = 0; i < a; ++i) ss_a += (mi[i] - grand) * (mi[i] - grand);
  for (std::size_t j = 0; j < b; ++j) ss_b += (mj[j] - grand) * (mj[j] - grand);
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < b; ++j) {
      double d = m[i * b + j] - mi[i] - mj[j] + grand;
      ss_ab += d * d;
    }
  double ss_e = 0.0;
  double total_mean = 0.0;
  for (const auto& o : obs) {
    double d = o.value - m[cell(o)];
    ss_e += d * d;
    total_mean += o.value;
  }
  total_mean /= big_n;
  double ss_t = 0.0;
  for (const auto& o : obs) ss_t += (o.value - total_mean) * (o.value - total_mean);

  const double da = static_cast<double>(a);
  const double db = static_cast<double>(b);
  const double ms_b = da * nh * ss_b / (db - 1.0);
  const double ms_e = ss_e / (big_n - da * db);

  VarianceComponents v;
  v.methods = static_cast<int>(a);
  v.settings = static_cast<int>(b);
  v.replications = nh;
  v.sample_variance = ss_t / (big_n - 1.0);
  if (a > 1) {
    const double ms_a = db * nh * ss_a / (da - 1.0);
    const double ms_ab = nh * ss_ab / ((da - 1.0) * (db - 1.0));
    v.raw_method = (ms_a - ms_ab) / (db * nh);
    v.raw_setting = (ms_b - ms_ab) / (da * nh);
    v.raw_interaction = (ms_ab - ms_e) / nh;
  } else {
    v.raw_setting = (ms_b - ms_e) / nh;
  }
  v.raw_realization = v.sample_variance - v.raw_method - v.raw_setting - v.raw_interaction;
  auto clip = [&v](double x) {
    if (x < 0.0) {
      v.truncated = true;
      return 0.0;
    }
    return x;
  };
  v.method = clip(v.raw_method);
  v.setting = clip(v.raw_setting);
  v.interaction = clip(v.raw_interaction);
  v.realization = clip(v.raw_realization);
  v.total = v.method + v.setting + v.interaction + v.realization;
  return v;
}

VarianceComponents variance_components(const std::vector<EstimateRow>& estimates,
                                       const std::vector<TruthRow>& truths) {
  auto idx = truth_index(truths);
  check_orphans(estimates, idx);
  std::vector<Observation> obs;
  for (const auto& e : estimates)
    if (e.ok()) obs.push_back({e.method, e.setting, log_abs_bias(e.satt_hat - join(idx, e).satt)});
  return variance_components(obs);
}

nlohmann::json to_json(const VarianceComponents& v) {
  return nlohmann::json{
      {"schema_version", 1},
      {"response", "log(|bias| + 1e-6)"},
      {"components",
       {{"method", v.method}, {"setting", v.setting}, {"interaction", v.interaction}, {"realization", v.realization}}},
      {"shares",
       {{"method", v.share(v.method)},
        {"setting", v.share(v.setting)},
        {"interaction", v.share(v.interaction)},
        {"realization", v.share(v.realization)}}},
      {"raw",
       {{"method", v.raw_method},
        {"setting", v.raw_setting},
        {"interaction", v.raw_interaction},
        {"realization", v.raw_realization}}},
      {"total", v.total},
      {"sample_variance", v.sample_variance},
      {"truncated", v.truncated},
      {"methods", v.methods},
      {"settings", v.settings},
      {"replications", v.replications},
  };
}

}  // namespace ctb
