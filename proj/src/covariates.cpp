#include "causal_testbed/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "causal_testbed/error.hpp"
#include "causal_testbed/rng.hpp"

namespace ctb {

std::string to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::binary: return "binary";
    case ColumnKind::count: return "count";
    case ColumnKind::continuous: return "continuous";
  }
  return "continuous";
}

ColumnKind column_kind_from_string(const std::string& s) {
  if (s == "categorical") return ColumnKind::categorical;
  if (s == "binary") return ColumnKind::binary;
  if (s == "count") return ColumnKind::count;
  if (s == "continuous") return ColumnKind::continuous;
  throw Error("unknown column kind '" + s + "'");
}

void ColumnSchema::validate() const {
  auto fail = [&](const std::string& why) { throw Error("column '" + name + "': " + why); };
  switch (kind) {
    case ColumnKind::categorical: {
      if (level_probs.size() < 3) fail("categorical needs at least 3 levels");
      double total = 0.0;
      for (double p : level_probs) {
        if (!(p > 0.0 && p < 1.0)) fail("level probabilities must lie in (0,1)");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) fail("level probabilities must sum to 1");
      break;
    }
    case ColumnKind::binary:
      if (!(prob > 0.0 && prob < 1.0)) fail("success probability must lie in (0,1)");
      break;
    case ColumnKind::count:
      if (!(rate > 0.0)) fail("rate must be positive");
      break;
    case ColumnKind::continuous:
      if (!(scale > 0.0)) fail("scale must be positive");
      break;
  }
}

double ColumnSchema::analytic_mean() const {
  switch (kind) {
    case ColumnKind::categorical: {
      double m = 0.0;
      for (std::size_t k = 0; k < level_probs.size(); ++k) m += static_cast<double>(k) * level_probs[k];
      return m;
    }
    case ColumnKind::binary: return prob;
    case ColumnKind::count: return rate;
    case ColumnKind::continuous:
      return log_normal ? std::exp(location + 0.5 * scale * scale) : location;
  }
  return 0.0;
}

double ColumnSchema::analytic_variance() const {
  switch (kind) {
    case ColumnKind::categorical: {
      double m = analytic_mean();
      double v = 0.0;
      for (std::size_t k = 0; k < level_probs.size(); ++k) {
        double d = static_cast<double>(k) - m;
        v += d * d * level_probs[k];
      }
      return v;
    }
    case ColumnKind::binary: return prob * (1.0 - prob);
    case ColumnKind::count: return rate;
    case ColumnKind::continuous:
      if (log_normal) {
        double s2 = scale * scale;
        return (std::exp(s2) - 1.0) * std::exp(2.0 * location + s2);
      }
      return scale * scale;
  }
  return 0.0;
}

void to_json(nlohmann::json& j, const ColumnSchema& c) {
  j = nlohmann::json{{"name", c.name}, {"kind", to_string(c.kind)}};
  switch (c.kind) {
    case ColumnKind::categorical: j["level_probs"] = c.level_probs; break;
    case ColumnKind::binary: j["prob"] = c.prob; break;
    case ColumnKind::count: j["rate"] = c.rate; break;
    case ColumnKind::continuous:
      j["location"] = c.location;
      j["scale"] = c.scale;
      j["log_normal"] = c.log_normal;
      break;
  }
}

void from_json(const nlohmann::json& j, ColumnSchema& c) {
  c = ColumnSchema{};
  c.name = j.at("name").get<std::string>();
  c.kind = column_kind_from_string(j.at("kind").get<std::string>());
  switch (c.kind) {
    case ColumnKind::categorical: c.level_probs = j.at("level_probs").get<std::vector<double>>(); break;
    case ColumnKind::binary: c.prob = j.at("prob").get<double>(); break;
    case ColumnKind::count: c.rate = j.at("rate").get<double>(); break;
    case ColumnKind::continuous:
      c.location = j.at("location").get<double>();
      c.scale = j.at("scale").get<double>();
      c.log_normal = j.at("log_normal").get<bool>();
      break;
  }
  c.validate();
}

namespace {

std::string numbered(const std::string& prefix, int i) {
  std::ostringstream os;
  os << prefix << (i < 10 ? "0" : "") << i;
  return os.str();
}

ColumnSchema categorical(int i, std::vector<double> probs) {
  ColumnSchema c;
  c.name = numbered("cat", i);
  c.kind = ColumnKind::categorical;
  c.level_probs = std::move(probs);
  return c;
}

ColumnSchema binary(int i, double p) {
  ColumnSchema c;
  c.name = numbered("bin", i);
  c.kind = ColumnKind::binary;
  c.prob = p;
  return c;
}

ColumnSchema count(int i, double rate) {
  ColumnSchema c;
  c.name = numbered("cnt", i);
  c.kind = ColumnKind::count;
  c.rate = rate;
  return c;
}

// Even-numbered continuous columns are Gaussian, odd ones lognormal.
ColumnSchema continuous(int i) {
  ColumnSchema c;
  c.name = numbered("con", i);
  c.kind = ColumnKind::continuous;
  if (i % 2 == 0) {
    c.location = 5.0 * static_cast<double>(i % 5);
    c.scale = 1.0 + 0.5 * static_cast<double>(i % 3);
  } else {
    c.log_normal = true;
    c.location = 0.5 * static_cast<double>(i % 3);
    c.scale = 0.25 + 0.15 * static_cast<double>(i % 4);
  }
  return c;
}

std::vector<ColumnSchema> build_schema(int n_cat, int n_bin, int n_cnt, int n_con) {
  static const std::vector<std::vector<double>> cat_levels = {
      {0.5, 0.3, 0.2}, {0.4, 0.3, 0.2, 0.1}, {0.3, 0.25, 0.2, 0.15, 0.1}};
  static const std::vector<double> bin_probs = {0.5, 0.3, 0.15, 0.7, 0.4};
  std::vector<ColumnSchema> out;
  for (int i = 0; i < n_cat; ++i)
    out.push_back(categorical(i + 1, cat_levels[static_cast<std::size_t>(i) % cat_levels.size()]));
  for (int i = 0; i < n_bin; ++i)
    out.push_back(binary(i + 1, bin_probs[static_cast<std::size_t>(i) % bin_probs.size()]));
  for (int i = 0; i < n_cnt; ++i) {
    double rate = n_cnt > 1 ? 1.0 + 19.0 * static_cast<double>(i) / static_cast<double>(n_cnt - 1) : 5.0;
    out.push_back(count(i + 1, rate));
  }
  for (int i = 0; i < n_con; ++i) out.push_back(continuous(i + 1));
  return out;
}

}  // namespace

std::vector<ColumnSchema> default_schema() { return build_schema(3, 5, 27, 23); }

std::vector<ColumnSchema> desk_schema() {
  auto out = build_schema(0, 2, 9, 8);
  out.insert(out.begin(), categorical(1, {0.4, 0.3, 0.2, 0.1}));
  return out;
}

Matrix block_correlation(std::size_t p, std::size_t num_blocks) {
  if (num_blocks == 0) num_blocks = std::max<std::size_t>(1, (p + 5) / 6);
  static const double block_loading[] = {0.2, 0.35, 0.5};
  const double global_loading = 0.1;
  Matrix c = Matrix::Identity(static_cast<Index>(p), static_cast<Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double r = global_loading;
      std::size_t bi = i % num_blocks;
      if (bi == j % num_blocks) r += block_loading[bi % 3];
      c(static_cast<Index>(i), static_cast<Index>(j)) = r;
      c(static_cast<Index>(j), static_cast<Index>(i)) = r;
    }
  }
  return c;
}

namespace {

bool is_integral(double v) { return std::floor(v) == v; }

void check_values(const std::vector<ColumnSchema>& columns, const Matrix& values) {
  for (Index j = 0; j < values.cols(); ++j) {
    const ColumnSchema& c = columns[static_cast<std::size_t>(j)];
    for (Index i = 0; i < values.rows(); ++i) {
      double v = values(i, j);
      bool ok = std::isfinite(v);
      switch (c.kind) {
        case ColumnKind::categorical:
          ok = ok && is_integral(v) && v >= 0.0 && v < static_cast<double>(c.level_probs.size());
          break;
        case ColumnKind::binary: ok = ok && (v == 0.0 || v == 1.0); break;
        case ColumnKind::count: ok = ok && is_integral(v) && v >= 0.0; break;
        case ColumnKind::continuous: break;
      }
      if (!ok) {
        std::ostringstream os;
        os << "invalid value " << v << " at row " << (i + 1) << ", column '" << c.name << "' ("
           << to_string(c.kind) << ")";
        throw Error(os.str());
      }
    }
  }
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double poisson_quantile(double u, double rate) {
  double pmf = std::exp(-rate);
  double cdf = pmf;
  int k = 0;
  const int cap = static_cast<int>(rate + 40.0 * std::sqrt(rate) + 50.0);
  while (cdf < u && k < cap) {
    ++k;
    pmf *= rate / static_cast<double>(k);
    cdf += pmf;
  }
  return static_cast<double>(k);
}

double inverse_marginal(const ColumnSchema& c, double z) {
  switch (c.kind) {
    case ColumnKind::categorical: {
      double u = normal_cdf(z);
      double cum = 0.0;
      for (std::size_t k = 0; k + 1 < c.level_probs.size(); ++k) {
        cum += c.level_probs[k];
        if (u < cum) return static_cast<double>(k);
      }
      return static_cast<double>(c.level_probs.size() - 1);
    }
    case ColumnKind::binary: return normal_cdf(z) >= 1.0 - c.prob ? 1.0 : 0.0;
    case ColumnKind::count: return poisson_quantile(normal_cdf(z), c.rate);
    case ColumnKind::continuous:
      return c.log_normal ? std::exp(c.location + c.scale * z) : c.location + c.scale * z;
  }
  return 0.0;
}

}  // namespace

CovariateTable::CovariateTable(std::vector<ColumnSchema> columns, Matrix values)
    : columns_(std::move(columns)), values_(std::move(values)) {
  if (values_.rows() == 0) throw Error("covariate table must have at least one row");
  if (static_cast<std::size_t>(values_.cols()) != columns_.size())
    throw Error("covariate table: column count does not match schema");
  for (const auto& c : columns_) c.validate();
  check_values(columns_, values_);
}

CovariateTable generate_covariates(const std::vector<ColumnSchema>& schema, Index n,
                                   const Matrix& correlation, std::uint64_t seed) {
  const auto p = static_cast<Index>(schema.size());
  if (n < 2) throw Error("generate_covariates: need n >= 2");
  if (correlation.rows() != p || correlation.cols() != p)
    throw Error("generate_covariates: correlation must be p x p");
  for (Index i = 0; i < p; ++i) {
    if (std::abs(correlation(i, i) - 1.0) > 1e-12)
      throw Error("generate_covariates: correlation must have unit diagonal");
    for (Index j = 0; j < i; ++j)
      if (std::abs(correlation(i, j) - correlation(j, i)) > 1e-12)
        throw Error("generate_covariates: correlation must be symmetric");
  }
  for (const auto& c : schema) c.validate();
  CholeskyResult chol = cholesky(correlation);
  if (chol.failed_minor) {
    std::ostringstream os;
    os << "generate_covariates: correlation is not positive definite (leading minor of order "
       << *chol.failed_minor << " is not positive)";
    throw Error(os.str());
  }
  Rng rng(seed);
  Matrix latent(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) latent(i, j) = rng.normal();
  latent = latent * chol.lower.transpose();
  Matrix values(n, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < n; ++i)
      values(i, j) = inverse_marginal(schema[static_cast<std::size_t>(j)], latent(i, j));
  return CovariateTable(schema, std::move(values));
}

Vector standardize_column(const Vector& column) {
  const Index n = column.size();
  if (n == 0) return column;
  std::vector<double> sorted(column.data(), column.data() + n);
  std::sort(sorted.begin(), sorted.end());
  // Order-statistic percentiles: the mapped percentiles land exactly on +-1,
  // so re-standardizing a standardized column is the identity.
  double pos = 0.01 * static_cast<double>(n - 1);
  double lo = sorted[static_cast<std::size_t>(std::floor(pos))];
  double hi = sorted[static_cast<std::size_t>(std::ceil(static_cast<double>(n - 1) - pos))];
  if (!(hi > lo)) {
    lo = sorted.front();
    hi = sorted.back();
  }
  if (!(hi > lo)) return Vector::Zero(n);
  double mid = 0.5 * (lo + hi);
  double half = 0.5 * (hi - lo);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = std::clamp((column(i) - mid) / half, -1.5, 1.5);
  return out;
}

StandardizedDesign standardize(const CovariateTable& table) {
  StandardizedDesign out;
  std::vector<Vector> cols;
  for (Index j = 0; j < table.cols(); ++j) {
    const ColumnSchema& c = table.columns()[static_cast<std::size_t>(j)];
    if (c.kind == ColumnKind::categorical) {
      for (std::size_t level = 1; level < c.level_probs.size(); ++level) {
        Vector ind = (table.values().col(j).array() == static_cast<double>(level)).cast<double>();
        cols.push_back(standardize_column(ind));
        out.names.push_back(c.name + "=" + std::to_string(level));
        out.kinds.push_back(c.kind);
        out.source.push_back(j);
      }
    } else {
      cols.push_back(standardize_column(table.values().col(j)));
      out.names.push_back(c.name);
      out.kinds.push_back(c.kind);
      out.source.push_back(j);
    }
  }
  out.values.resize(table.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.values.col(static_cast<Index>(j)) = cols[j];
  return out;
}

}  // namespace ctb
