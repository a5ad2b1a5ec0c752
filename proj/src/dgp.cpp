#include "causal_testbed/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "causal_testbed/error.hpp"
#include "causal_testbed/glm.hpp"
#include "causal_testbed/rng.hpp"

namespace ctb {

namespace {

constexpr double kGrid = 1099511627776.0;  // 2^40

// Snap to a dyadic grid so mu0 + tau and (mu0 + tau) - mu0 are exact.
double snap(double v) { return std::round(v * kGrid) / kGrid; }

const std::array<std::pair<TermKind, const char*>, 7> kTermNames = {{
    {TermKind::linear, "linear"},
    {TermKind::quadratic, "quadratic"},
    {TermKind::cubic, "cubic"},
    {TermKind::jump, "jump"},
    {TermKind::kink, "kink"},
    {TermKind::interaction, "interaction"},
    {TermKind::exponential, "exponential"},
}};

}  // namespace

std::string to_string(TermKind kind) {
  for (const auto& [k, name] : kTermNames)
    if (k == kind) return name;
  return "linear";
}

TermKind term_kind_from_string(const std::string& s) {
  for (const auto& [k, name] : kTermNames)
    if (s == name) return k;
  throw Error("unknown term kind '" + s + "'");
}

Vector FunctionTerm::basis(const Matrix& x) const {
  const Index n = x.rows();
  for (Index c : columns)
    if (c < 0 || c >= x.cols()) throw Error("function term refers to a missing design column");
  switch (kind) {
    case TermKind::linear: return x.col(columns.at(0));
    case TermKind::quadratic: return x.col(columns.at(0)).array().square();
    case TermKind::cubic: return x.col(columns.at(0)).array().cube();
    case TermKind::jump: {
      const double a = thresholds.at(0);
      return (x.col(columns.at(0)).array() <= a).cast<double>();
    }
    case TermKind::kink: {
      const double b = thresholds.at(0);
      const double c = thresholds.at(1);
      Vector out(n);
      for (Index i = 0; i < n; ++i) {
        double v = x(i, columns.at(0));
        out(i) = v <= c ? v - b : 0.0;
      }
      return out;
    }
    case TermKind::interaction: {
      Vector out = Vector::Ones(n);
      for (Index c : columns) out.array() *= x.col(c).array();
      return out;
    }
    case TermKind::exponential: {
      Vector sum = Vector::Zero(n);
      for (const auto& t : inner) sum += t.evaluate(x);
      return sum.array().exp();
    }
  }
  return Vector::Zero(n);
}

std::string FunctionTerm::signature() const {
  nlohmann::json j = *this;
  j.erase("coefficient");
  return j.dump();
}

std::vector<char> PenaltyRegion::membership(const Matrix& x) const {
  std::vector<char> in(static_cast<std::size_t>(x.rows()), 1);
  for (const auto& c : conditions) {
    for (Index i = 0; i < x.rows(); ++i) {
      double v = x(i, c.column);
      bool hit = c.upper ? v > c.cutoff : v <= c.cutoff;
      if (!hit) in[static_cast<std::size_t>(i)] = 0;
    }
  }
  return in;
}

// ---------------------------------------------------------------- evaluation

namespace {

Vector sum_terms(const std::vector<FunctionTerm>& terms, const Matrix& x) {
  Vector out = Vector::Zero(x.rows());
  for (const auto& t : terms) out += t.evaluate(x);
  return out;
}

}  // namespace

Vector DgpSpec::raw_assignment(const Matrix& x) const { return sum_terms(assignment_terms, x); }
Vector DgpSpec::raw_response(const Matrix& x) const { return sum_terms(response_terms, x); }
Vector DgpSpec::raw_heterogeneity(const Matrix& x) const { return sum_terms(heterogeneity_terms, x); }

std::vector<char> DgpSpec::penalized(const Matrix& x) const {
  std::vector<char> out(static_cast<std::size_t>(x.rows()), 0);
  for (const auto& region : penalties) {
    auto m = region.membership(x);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<char>(out[i] | m[i]);
  }
  return out;
}

Vector DgpSpec::logit(const Matrix& x) const {
  Vector eta = (logit_intercept + logit_scale * raw_assignment(x).array()).matrix();
  auto pen = penalized(x);
  for (Index i = 0; i < eta.size(); ++i)
    if (pen[static_cast<std::size_t>(i)]) eta(i) = -std::numeric_limits<double>::infinity();
  return eta;
}

Vector DgpSpec::propensity(const Matrix& x) const {
  Vector eta = logit(x);
  Vector e(eta.size());
  for (Index i = 0; i < eta.size(); ++i) e(i) = std::isinf(eta(i)) ? 0.0 : ctb::logistic(eta(i));
  return e;
}

Vector DgpSpec::mu0(const Matrix& x) const {
  Vector v = (response_shift + response_scale * raw_response(x).array()).matrix();
  return v.unaryExpr([](double a) { return snap(a); });
}

Vector DgpSpec::tau(const Matrix& x) const {
  Vector v = Vector::Constant(x.rows(), effect_shift);
  if (!heterogeneity_terms.empty()) v.array() += effect_scale * raw_heterogeneity(x).array();
  return v.unaryExpr([](double a) { return snap(a); });
}

Vector DgpSpec::mu1(const Matrix& x) const { return mu0(x) + tau(x); }

double DgpSpec::alignment_fraction() const {
  if (assignment_terms.empty()) return 0.0;
  return static_cast<double>(copied_terms) / static_cast<double>(assignment_terms.size());
}

// ------------------------------------------------------------- serialization

void to_json(nlohmann::json& j, const FunctionTerm& t) {
  j = nlohmann::json{{"kind", to_string(t.kind)},
                     {"columns", t.columns},
                     {"coefficient", t.coefficient},
                     {"thresholds", t.thresholds}};
  if (!t.inner.empty()) j["inner"] = t.inner;
}

void from_json(const nlohmann::json& j, FunctionTerm& t) {
  t = FunctionTerm{};
  t.kind = term_kind_from_string(j.at("kind").get<std::string>());
  t.columns = j.at("columns").get<std::vector<Index>>();
  t.coefficient = j.at("coefficient").get<double>();
  t.thresholds = j.at("thresholds").get<std::vector<double>>();
  if (j.contains("inner")) t.inner = j.at("inner").get<std::vector<FunctionTerm>>();
}

void to_json(nlohmann::json& j, const Condition& c) {
  j = nlohmann::json{{"column", c.column}, {"upper", c.upper}, {"quantile", c.quantile}, {"cutoff", c.cutoff}};
}

void from_json(const nlohmann::json& j, Condition& c) {
  c.column = j.at("column").get<Index>();
  c.upper = j.at("upper").get<bool>();
  c.quantile = j.at("quantile").get<double>();
  c.cutoff = j.at("cutoff").get<double>();
}

void to_json(nlohmann::json& j, const PenaltyRegion& r) { j = nlohmann::json{{"conditions", r.conditions}}; }

void from_json(const nlohmann::json& j, PenaltyRegion& r) {
  r.conditions = j.at("conditions").get<std::vector<Condition>>();
}

#define CTB_CONFIG_FIELDS(X)                                                              \
  X(term_count_mean) X(min_terms) X(coefficient_df) X(beta_prime_a) X(beta_prime_b)      \
  X(quadratic_prob) X(cubic_prob) X(interaction_mean) X(three_way_prob) X(logit_sd_min)  \
  X(logit_sd_max) X(penalty_share_min) X(penalty_share_max) X(noise_df)                  \
  X(noise_ratio_min) X(noise_ratio_max) X(heterogeneity_low) X(heterogeneity_high)       \
  X(effect_center) X(effect_spread) X(effect_df) X(treated_fraction_tol)                 \
  X(max_bisection_iterations)

void to_json(nlohmann::json& j, const DgpConfig& c) {
  j = nlohmann::json::object();
#define X(f) j[#f] = c.f;
  CTB_CONFIG_FIELDS(X)
#undef X
  if (c.fixed_target_effect) j["fixed_target_effect"] = *c.fixed_target_effect;
}

void from_json(const nlohmann::json& j, DgpConfig& c) {
  c = DgpConfig{};
#define X(f) \
  if (j.contains(#f)) j.at(#f).get_to(c.f);
  CTB_CONFIG_FIELDS(X)
#undef X
  if (j.contains("fixed_target_effect")) c.fixed_target_effect = j.at("fixed_target_effect").get<double>();
}

void to_json(nlohmann::json& j, const DgpSpec& s) {
  j = nlohmann::json{
      {"knobs", s.knobs},
      {"config", s.config},
      {"seed", s.seed},
      {"assignment",
       {{"terms", s.assignment_terms},
        {"penalties", s.penalties},
        {"copied_terms", s.copied_terms},
        {"logit_sd", s.logit_sd},
        {"intercept", s.logit_intercept},
        {"scale", s.logit_scale},
        {"rescaled", s.assignment_rescaled}}},
      {"response",
       {{"terms", s.response_terms},
        {"heterogeneity_terms", s.heterogeneity_terms},
        {"noise_ratio", s.noise_ratio},
        {"heterogeneity_amplitude", s.heterogeneity_amplitude},
        {"target_effect", s.target_effect},
        {"shift", s.response_shift},
        {"scale", s.response_scale},
        {"effect_shift", s.effect_shift},
        {"effect_scale", s.effect_scale},
        {"noise_scale", s.noise_scale},
        {"rescaled", s.response_rescaled}}},
  };
}

void from_json(const nlohmann::json& j, DgpSpec& s) {
  s = DgpSpec{};
  s.knobs = j.at("knobs").get<Knobs>();
  s.config = j.at("config").get<DgpConfig>();
  s.seed = j.at("seed").get<std::uint64_t>();
  const auto& a = j.at("assignment");
  s.assignment_terms = a.at("terms").get<std::vector<FunctionTerm>>();
  s.penalties = a.at("penalties").get<std::vector<PenaltyRegion>>();
  s.copied_terms = a.at("copied_terms").get<std::size_t>();
  s.logit_sd = a.at("logit_sd").get<double>();
  s.logit_intercept = a.at("intercept").get<double>();
  s.logit_scale = a.at("scale").get<double>();
  s.assignment_rescaled = a.at("rescaled").get<bool>();
  const auto& r = j.at("response");
  s.response_terms = r.at("terms").get<std::vector<FunctionTerm>>();
  s.heterogeneity_terms = r.at("heterogeneity_terms").get<std::vector<FunctionTerm>>();
  s.noise_ratio = r.at("noise_ratio").get<double>();
  s.heterogeneity_amplitude = r.at("heterogeneity_amplitude").get<double>();
  s.target_effect = r.at("target_effect").get<double>();
  s.response_shift = r.at("shift").get<double>();
  s.response_scale = r.at("scale").get<double>();
  s.effect_shift = r.at("effect_shift").get<double>();
  s.effect_scale = r.at("effect_scale").get<double>();
  s.noise_scale = r.at("noise_scale").get<double>();
  s.response_rescaled = r.at("rescaled").get<bool>();
}

// -------------------------------------------------------------------- build

namespace {

enum class Library { linear, polynomial, step };

class TermSampler {
 public:
  TermSampler(const StandardizedDesign& design, const DgpConfig& config, Rng& rng)
      : design_(design), config_(config), rng_(rng) {
    for (Index j = 0; j < design.cols(); ++j) {
      const auto col = design.values.col(j);
      if (col.maxCoeff() > col.minCoeff()) usable_.push_back(j);
    }
  }

  const std::vector<Index>& usable() const { return usable_; }

  // Count and shape columns have enough distinct values for powers and steps.
  bool graded(Index column) const {
    ColumnKind k = design_.kinds[static_cast<std::size_t>(column)];
    return k == ColumnKind::count || k == ColumnKind::continuous;
  }

  double coefficient() {
    double c = rng_.student_t(config_.coefficient_df);
    return c == 0.0 ? 1.0 : c;
  }

  double positive() { return rng_.beta_prime(config_.beta_prime_a, config_.beta_prime_b); }

  double threshold(Index column, double q) {
    const auto col = design_.values.col(column);
    return midpoint_quantile(std::vector<double>(col.data(), col.data() + col.size()), q);
  }

  std::vector<Index> draw_columns() {
    std::size_t k = 1 + static_cast<std::size_t>(rng_.poisson(config_.term_count_mean));
    k = std::clamp(k, config_.min_terms, usable_.size());
    auto picks = rng_.sample_without_replacement(usable_.size(), k);
    std::vector<Index> out;
    for (auto p : picks) out.push_back(usable_[p]);
    return out;
  }

  FunctionTerm single(TermKind kind, Index column) {
    FunctionTerm t;
    t.kind = kind;
    t.columns = {column};
    t.coefficient = coefficient();
    if (kind == TermKind::jump) {
      t.thresholds = {threshold(column, rng_.uniform(0.1, 0.9))};
    } else if (kind == TermKind::kink) {
      double c = threshold(column, rng_.uniform(0.1, 0.9));
      t.thresholds = {c, c};
    }
    return t;
  }

  std::vector<FunctionTerm> draw(Library lib) {
    std::vector<FunctionTerm> terms;
    std::vector<Index> cols = draw_columns();
    for (Index c : cols) {
      switch (lib) {
        case Library::linear: terms.push_back(single(TermKind::linear, c)); break;
        case Library::polynomial:
          terms.push_back(single(TermKind::linear, c));
          if (graded(c)) {
            if (rng_.bernoulli(config_.quadratic_prob)) terms.push_back(single(TermKind::quadratic, c));
            if (rng_.bernoulli(config_.cubic_prob)) terms.push_back(single(TermKind::cubic, c));
          }
          break;
        case Library::step:
          if (graded(c)) {
            terms.push_back(single(rng_.bernoulli(0.5) ? TermKind::jump : TermKind::kink, c));
            if (rng_.bernoulli(0.5)) terms.push_back(single(TermKind::linear, c));
          } else {
            terms.push_back(single(TermKind::linear, c));
          }
          break;
      }
    }
    if (lib != Library::linear) {
      int n_inter = rng_.poisson(config_.interaction_mean);
      for (int i = 0; i < n_inter; ++i) {
        std::size_t arity = rng_.bernoulli(config_.three_way_prob) ? 3 : 2;
        if (cols.size() < arity) continue;
        auto picks = rng_.sample_without_replacement(cols.size(), arity);
        FunctionTerm t;
        t.kind = TermKind::interaction;
        for (auto p : picks) t.columns.push_back(cols[p]);
        std::sort(t.columns.begin(), t.columns.end());
        t.coefficient = coefficient();
        terms.push_back(t);
      }
    }
    return terms;
  }

  FunctionTerm sub_function(Index column) {
    int shape = static_cast<int>(rng_.index(3));
    TermKind kind = TermKind::linear;
    if (shape == 1 && graded(column)) kind = TermKind::quadratic;
    if (shape == 2) kind = TermKind::jump;
    FunctionTerm t = single(kind, column);
    // Keep the exponent on the scale of the [-1, 1] covariates.
    t.coefficient = std::clamp(0.5 * t.coefficient, -1.5, 1.5);
    return t;
  }

  FunctionTerm exponential() {
    auto picks = rng_.sample_without_replacement(usable_.size(), 2);
    FunctionTerm t;
    t.kind = TermKind::exponential;
    t.columns = {usable_[picks[0]], usable_[picks[1]]};
    t.inner = {sub_function(t.columns[0]), sub_function(t.columns[1])};
    t.coefficient = (rng_.bernoulli(0.5) ? 1.0 : -1.0) * positive();
    return t;
  }

  PenaltyRegion penalty_region() {
    std::vector<Index> graded_cols;
    for (Index c : usable_) {
      if (!graded(c)) continue;
      const auto col = design_.values.col(c);
      std::set<double> distinct(col.data(), col.data() + col.size());
      if (distinct.size() >= 5) graded_cols.push_back(c);
    }
    if (graded_cols.empty()) graded_cols = usable_;
    const Matrix& x = design_.values;
    PenaltyRegion best;
    double best_gap = std::numeric_limits<double>::infinity();
    double target = 0.5 * (config_.penalty_share_min + config_.penalty_share_max);
    for (int attempt = 0; attempt < 50; ++attempt) {
      std::size_t k = 1 + rng_.index(std::min<std::size_t>(3, graded_cols.size()));
      auto picks = rng_.sample_without_replacement(graded_cols.size(), k);
      static const double tail_lo[] = {0.08, 0.25, 0.4};
      static const double tail_hi[] = {0.25, 0.5, 0.65};
      PenaltyRegion region;
      for (auto p : picks) {
        Condition c;
        c.column = graded_cols[p];
        c.upper = rng_.bernoulli(0.5);
        double tail = rng_.uniform(tail_lo[k - 1], tail_hi[k - 1]);
        c.quantile = c.upper ? 1.0 - tail : tail;
        c.cutoff = threshold(c.column, c.quantile);
        region.conditions.push_back(c);
      }
      auto m = region.membership(x);
      double share = 0.0;
      for (char v : m) share += v;
      share /= static_cast<double>(m.size());
      if (share <= 0.0) continue;
      if (share >= config_.penalty_share_min && share <= config_.penalty_share_max) return region;
      double gap = std::abs(share - target);
      if (gap < best_gap) {
        best_gap = gap;
        best = region;
      }
    }
    if (best.conditions.empty()) throw Error("build_dgp: could not place a nonempty penalty region");
    return best;
  }

 private:
  const StandardizedDesign& design_;
  const DgpConfig& config_;
  Rng& rng_;
  std::vector<Index> usable_;
};

Library library_for(TreatmentModel m) {
  switch (m) {
    case TreatmentModel::linear: return Library::linear;
    case TreatmentModel::polynomial: return Library::polynomial;
    case TreatmentModel::step: return Library::step;
  }
  return Library::linear;
}

Library library_for(ResponseModel m) {
  switch (m) {
    case ResponseModel::linear: return Library::linear;
    case ResponseModel::exponential: return Library::polynomial;
    case ResponseModel::step: return Library::step;
  }
  return Library::linear;
}

}  // namespace

DgpSpec build_raw_dgp(const Knobs& knobs, const StandardizedDesign& design, std::uint64_t seed,
                      const DgpConfig& config) {
  Rng rng(seed);
  TermSampler sampler(design, config, rng);
  if (sampler.usable().size() < config.min_terms) {
    std::ostringstream os;
    os << "build_dgp: design has " << sampler.usable().size()
       << " non-constant columns; at least " << config.min_terms << " are required";
    throw Error(os.str());
  }

  DgpSpec spec;
  spec.knobs = knobs;
  spec.config = config;
  spec.seed = seed;

  spec.assignment_terms = sampler.draw(library_for(knobs.treatment_model));
  if (knobs.overlap == Overlap::penalize) spec.penalties.push_back(sampler.penalty_region());

  // Alignment: copy round(p * T) assignment terms, chosen at random, so the
  // realized share is within 0.5 / T of p.
  const std::size_t n_assign = spec.assignment_terms.size();
  std::size_t n_copy = static_cast<std::size_t>(
      std::llround(knobs.alignment_probability() * static_cast<double>(n_assign)));
  spec.copied_terms = n_copy;
  auto copy_idx = rng.sample_without_replacement(n_assign, n_copy);
  std::sort(copy_idx.begin(), copy_idx.end());
  for (auto i : copy_idx) spec.response_terms.push_back(spec.assignment_terms[i]);

  auto own = sampler.draw(library_for(knobs.response_model));
  spec.response_terms.insert(spec.response_terms.end(), own.begin(), own.end());
  if (knobs.response_model == ResponseModel::exponential)
    spec.response_terms.push_back(sampler.exponential());

  // The response also carries the interaction of the penalty covariates.
  for (const auto& region : spec.penalties) {
    FunctionTerm t;
    t.kind = region.conditions.size() > 1 ? TermKind::interaction : TermKind::linear;
    for (const auto& c : region.conditions) t.columns.push_back(c.column);
    std::sort(t.columns.begin(), t.columns.end());
    t.coefficient = sampler.coefficient();
    spec.response_terms.push_back(t);
  }

  if (knobs.heterogeneity != Heterogeneity::none) {
    int count = knobs.heterogeneity == Heterogeneity::low ? 1 + rng.binomial(4, 0.5)
                                                          : 3 + rng.binomial(6, 0.5);
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(count), spec.response_terms.size());
    auto picks = rng.sample_without_replacement(spec.response_terms.size(), k);
    std::sort(picks.begin(), picks.end());
    for (auto p : picks) {
      FunctionTerm t = spec.response_terms[p];
      t.coefficient = sampler.coefficient();
      spec.heterogeneity_terms.push_back(t);
    }
    spec.heterogeneity_amplitude = knobs.heterogeneity == Heterogeneity::low ? config.heterogeneity_low
                                                                              : config.heterogeneity_high;
  }

  spec.logit_sd = rng.uniform(config.logit_sd_min, config.logit_sd_max);
  spec.noise_ratio = rng.uniform(config.noise_ratio_min, config.noise_ratio_max);
  double drawn_effect = config.effect_center + config.effect_spread * rng.student_t(config.effect_df);
  spec.target_effect = config.fixed_target_effect.value_or(drawn_effect);
  return spec;
}

DgpSpec build_dgp(const Knobs& knobs, const StandardizedDesign& design, std::uint64_t seed,
                  const DgpConfig& config) {
  DgpSpec spec = build_raw_dgp(knobs, design, seed, config);
  spec = rescale_assignment(std::move(spec), design);
  return rescale_response(std::move(spec), design);
}

DgpSpec rescale_assignment(DgpSpec spec, const StandardizedDesign& design) {
  const Matrix& x = design.values;
  const Vector raw = spec.raw_assignment(x);
  const auto pen = spec.penalized(x);
  std::vector<double> free_raw;
  for (Index i = 0; i < raw.size(); ++i)
    if (!pen[static_cast<std::size_t>(i)]) free_raw.push_back(raw(i));
  if (free_raw.empty()) throw Error("rescale_assignment: every row lies inside a penalty region");
  Vector v = Eigen::Map<const Vector>(free_raw.data(), static_cast<Index>(free_raw.size()));
  const double center = v.mean();
  const double spread = population_sd(v);
  const double target = spec.knobs.target_treated_fraction();
  const int budget = spec.config.max_bisection_iterations;

  double scale = spread > 0.0 ? spec.logit_sd / spread : 0.0;
  int iterations = 0;
  double achieved_mean = 0.0;
  double achieved_inside = 0.0;
  double intercept = 0.0;
  auto propensities = [&](double a, double s) -> Vector {
    return v.unaryExpr([a, s, center](double r) { return ctb::logistic(a + s * (r - center)); });
  };
  for (;;) {
    double lo = -30.0;
    double hi = 30.0;
    intercept = logit(target);
    if (scale > 0.0) {
      for (;;) {
        if (++iterations > budget) {
          std::ostringstream os;
          os << "rescale_assignment: no solution within " << budget
             << " bisection iterations (treated fraction " << achieved_mean
             << ", share in [0.1,0.9] " << achieved_inside << ")";
          throw Error(os.str());
        }
        intercept = 0.5 * (lo + hi);
        achieved_mean = propensities(intercept, scale).mean();
        if (std::abs(achieved_mean - target) <= spec.config.treated_fraction_tol) break;
        (achieved_mean < target ? lo : hi) = intercept;
      }
    }
    Vector e = propensities(intercept, scale);
    achieved_mean = e.mean();
    achieved_inside = (e.array() >= 0.1 && e.array() <= 0.9).cast<double>().mean();
    if (achieved_inside >= 0.9) break;
    scale *= 0.85;
  }
  spec.logit_scale = scale;
  spec.logit_intercept = intercept - scale * center;
  spec.assignment_rescaled = true;
  return spec;
}

DgpSpec rescale_response(DgpSpec spec, const StandardizedDesign& design) {
  const Matrix& x = design.values;
  const Index n = x.rows();
  const Vector raw_r = spec.raw_response(x);
  const double m_r = raw_r.mean();
  const double s_r = population_sd(raw_r);
  if (!(s_r > 1e-12 * (1.0 + std::abs(m_r))))
    throw Error("rescale_response: response surface has zero variance on the build sample");
  const Vector m0 = (raw_r.array() - m_r) / s_r;

  Vector h0 = Vector::Zero(n);
  double m_h = 0.0;
  double s_h = 0.0;
  if (!spec.heterogeneity_terms.empty()) {
    Vector raw_h = spec.raw_heterogeneity(x);
    m_h = raw_h.mean();
    s_h = population_sd(raw_h);
    if (s_h > 1e-12 * (1.0 + std::abs(m_h))) h0 = (raw_h.array() - m_h) / s_h;
  }
  const bool heterogeneous = s_h > 1e-12 * (1.0 + std::abs(m_h)) && !spec.heterogeneity_terms.empty();
  const double b = heterogeneous ? spec.heterogeneity_amplitude : 0.0;

  const Vector e = spec.propensity(x);
  const double sum_e = e.sum();
  const double eh = sum_e > 0.0 ? e.dot(h0) / sum_e : 0.0;
  const double df = spec.config.noise_df;
  const double noise_var_factor = df > 2.0 ? df / (df - 2.0) : 1.0;
  const double target = spec.target_effect;

  struct Moments {
    double mean;
    double var;
    double shift;
  };
  auto moments = [&](double s) {
    double delta = target - s * b * eh;
    Vector tau = (delta + s * b * h0.array()).matrix();
    Vector ey = s * m0 + e.cwiseProduct(tau);
    double mean_ey = ey.mean();
    double var = (ey.array() - mean_ey).square().mean();
    var += (e.array() * (1.0 - e.array()) * tau.array().square()).mean();
    var += s * s * spec.noise_ratio * spec.noise_ratio * noise_var_factor;
    return Moments{mean_ey, var, delta};
  };

  double lo = 0.0;
  double hi = 1.0;
  if (moments(0.0).var >= 1.0)
    throw Error("rescale_response: target effect alone exceeds the unit outcome variance");
  for (int i = 0; moments(hi).var < 1.0; ++i) {
    if (i > 60) throw Error("rescale_response: could not bracket the outcome scale");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    (moments(mid).var < 1.0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  const Moments mo = moments(s);

  spec.response_scale = s / s_r;
  spec.response_shift = -s * m_r / s_r - mo.mean;
  if (heterogeneous) {
    spec.effect_scale = s * b / s_h;
    spec.effect_shift = mo.shift - s * b * m_h / s_h;
  } else {
    spec.effect_scale = 0.0;
    spec.effect_shift = target;
  }
  spec.noise_scale = s * spec.noise_ratio;
  spec.response_rescaled = true;
  return spec;
}

Matrix truth_basis(const DgpSpec& spec, const Matrix& x) {
  std::vector<Vector> cols;
  std::set<std::string> seen;
  auto add = [&](const std::vector<FunctionTerm>& terms) {
    for (const auto& t : terms) {
      if (!seen.insert(t.signature()).second) continue;
      cols.push_back(t.basis(x));
    }
  };
  add(spec.assignment_terms);
  add(spec.response_terms);
  add(spec.heterogeneity_terms);
  for (const auto& region : spec.penalties) {
    auto m = region.membership(x);
    Vector ind(x.rows());
    for (Index i = 0; i < x.rows(); ++i) ind(i) = m[static_cast<std::size_t>(i)];
    cols.push_back(ind);
  }
  Matrix out(x.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Index>(j)) = cols[j];
  return out;
}

// ------------------------------------------------------------------ realize

Realization realize(const DgpSpec& spec, std::shared_ptr<const StandardizedDesign> design,
                    std::uint64_t assignment_seed, std::uint64_t noise_seed, const RealizeOptions& opts) {
  if (!spec.assignment_rescaled || !spec.response_rescaled)
    throw Error("realize: spec has not been rescaled");
  if (!design) throw Error("realize: missing design");
  const Matrix& x = design->values;
  const Index n = x.rows();
  Realization r;
  r.design = design;
  r.oracle.e = spec.propensity(x);
  r.oracle.penalized = spec.penalized(x);
  r.oracle.mu0 = spec.mu0(x);
  Vector tau = spec.tau(x);
  r.oracle.mu1 = r.oracle.mu0 + tau;

  Rng assign(assignment_seed);
  r.z.resize(n);
  for (Index i = 0; i < n; ++i) r.z(i) = assign.bernoulli(r.oracle.e(i)) ? 1.0 : 0.0;

  Rng noise(noise_seed);
  const double scale = opts.noiseless ? 0.0 : spec.noise_scale;
  r.oracle.y0.resize(n);
  r.oracle.y1.resize(n);
  for (Index i = 0; i < n; ++i) {
    double e0 = noise.student_t(spec.config.noise_df);
    double e1 = noise.student_t(spec.config.noise_df);
    r.oracle.y0(i) = r.oracle.mu0(i) + scale * e0;
    r.oracle.y1(i) = r.oracle.mu1(i) + scale * e1;
  }
  r.oracle.tau = r.oracle.y1 - r.oracle.y0;
  r.y.resize(n);
  for (Index i = 0; i < n; ++i) r.y(i) = r.z(i) == 1.0 ? r.oracle.y1(i) : r.oracle.y0(i);
  return r;
}

Realization realize(const DgpSpec& spec, std::shared_ptr<const StandardizedDesign> design,
                    std::uint64_t seed, const RealizeOptions& opts) {
  return realize(spec, std::move(design), derive_seed(seed, {1}), derive_seed(seed, {2}), opts);
}

double satt(const Realization& r) {
  double total = 0.0;
  Index treated = 0;
  for (Index i = 0; i < r.z.size(); ++i) {
    if (r.z(i) == 1.0) {
      total += r.oracle.tau(i);
      ++treated;
    }
  }
  if (treated == 0) throw Error("satt: realization has no treated units");
  return total / static_cast<double>(treated);
}

}  // namespace ctb
