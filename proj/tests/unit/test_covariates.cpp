#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "causal_testbed/covariates.hpp"
#include "causal_testbed/error.hpp"

using namespace ctb;

namespace {

ColumnSchema gaussian(const std::string& name, double loc, double scale) {
  ColumnSchema c;
  c.name = name;
  c.kind = ColumnKind::continuous;
  c.location = loc;
  c.scale = scale;
  return c;
}

ColumnSchema lognormal(const std::string& name, double loc, double scale) {
  ColumnSchema c = gaussian(name, loc, scale);
  c.log_normal = true;
  return c;
}

Matrix two_by_two(double rho) {
  Matrix m(2, 2);
  m << 1.0, rho, rho, 1.0;
  return m;
}

double pearson(const Vector& a, const Vector& b) {
  Vector da = a.array() - a.mean();
  Vector db = b.array() - b.mean();
  return da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm());
}

}  // namespace

TEST_CASE("default schema has the documented type counts") {
  auto s = default_schema();
  REQUIRE(s.size() == 58);
  int counts[4] = {0, 0, 0, 0};
  for (const auto& c : s) counts[static_cast<int>(c.kind)]++;
  CHECK(counts[0] == 3);
  CHECK(counts[1] == 5);
  CHECK(counts[2] == 27);
  CHECK(counts[3] == 23);
  CHECK(default_schema() == s);
  for (const auto& c : s) {
    if (c.kind != ColumnKind::categorical) continue;
    CHECK(c.level_probs.size() >= 3);
    CHECK(c.level_probs.size() <= 5);
  }
  for (const auto& c : s) {
    if (c.kind == ColumnKind::count) {
      CHECK(c.rate >= 1.0);
      CHECK(c.rate <= 20.0);
    }
  }
}

TEST_CASE("desk schema has 20 columns") { CHECK(desk_schema().size() == 20); }

TEST_CASE("schema validation rejects bad parameters") {
  ColumnSchema c;
  c.kind = ColumnKind::categorical;
  c.level_probs = {0.5, 0.5};
  CHECK_THROWS_AS(c.validate(), Error);
  c.level_probs = {0.5, 0.3, 0.3};
  CHECK_THROWS_AS(c.validate(), Error);
  ColumnSchema b;
  b.kind = ColumnKind::binary;
  b.prob = 1.0;
  CHECK_THROWS_AS(b.validate(), Error);
  ColumnSchema k;
  k.kind = ColumnKind::count;
  k.rate = 0.0;
  CHECK_THROWS_AS(k.validate(), Error);
}

TEST_CASE("schema JSON round trip") {
  for (const auto& c : default_schema()) {
    nlohmann::json j = c;
    CHECK(j.get<ColumnSchema>() == c);
  }
}

TEST_CASE("independent columns are uncorrelated") {
  std::vector<ColumnSchema> s = {gaussian("a", 0, 1), gaussian("b", 3, 2)};
  auto t = generate_covariates(s, 10000, Matrix::Identity(2, 2), 11);
  CHECK(std::abs(pearson(t.values().col(0), t.values().col(1))) <= 0.05);
}

TEST_CASE("generation is deterministic in the seed") {
  auto s = desk_schema();
  Matrix corr = block_correlation(s.size());
  auto a = generate_covariates(s, 500, corr, 7);
  auto b = generate_covariates(s, 500, corr, 7);
  auto c = generate_covariates(s, 500, corr, 8);
  CHECK(a.values() == b.values());
  CHECK(a.values() != c.values());
}

TEST_CASE("latent correlation carries through the copula") {
  std::vector<ColumnSchema> s = {gaussian("a", 0, 1), gaussian("b", 10, 3)};
  auto t = generate_covariates(s, 10000, two_by_two(0.6), 5);
  double r = pearson(t.values().col(0), t.values().col(1));
  CHECK(r >= 0.52);
  CHECK(r <= 0.68);

  // Lognormal pair; band from tests/oracles/copula_oracle.py.
  std::vector<ColumnSchema> l = {lognormal("a", 0.5, 0.4), lognormal("b", 0.0, 0.7)};
  auto u = generate_covariates(l, 10000, two_by_two(0.6), 6);
  double rl = pearson(u.values().col(0), u.values().col(1));
  CHECK(rl >= 0.5167);
  CHECK(rl <= 0.5879);
}

TEST_CASE("non positive definite correlation names the failing minor") {
  std::vector<ColumnSchema> s = {gaussian("a", 0, 1), gaussian("b", 0, 1), gaussian("c", 0, 1)};
  Matrix m(3, 3);
  m << 1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0;
  try {
    generate_covariates(s, 10, m, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("order 3") != std::string::npos);
  }
  CHECK_THROWS_AS(generate_covariates(s, 1, Matrix::Identity(3, 3), 1), Error);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.2;
  CHECK_THROWS_AS(generate_covariates(s, 10, asym, 1), Error);
}

TEST_CASE("block correlation is positive definite with the documented ranges") {
  for (std::size_t p : {20u, 58u}) {
    Matrix c = block_correlation(p);
    CHECK_FALSE(cholesky(c).failed_minor.has_value());
    for (Index i = 0; i < c.rows(); ++i)
      for (Index j = 0; j < i; ++j) {
        CHECK(c(i, j) >= 0.0);
        CHECK(c(i, j) <= 0.6 + 1e-12);
      }
  }
}

TEST_CASE("type closure and marginal fidelity") {
  for (const auto& schema : {desk_schema(), default_schema()}) {
    const Index n = 10000;
    auto t = generate_covariates(schema, n, block_correlation(schema.size()), 3);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& c = schema[j];
      Vector col = t.values().col(static_cast<Index>(j));
      for (Index i = 0; i < n; ++i) {
        double v = col(i);
        switch (c.kind) {
          case ColumnKind::binary:
            REQUIRE((v == 0.0 || v == 1.0));
            break;
          case ColumnKind::count:
            REQUIRE(v >= 0.0);
            REQUIRE(std::floor(v) == v);
            break;
          case ColumnKind::categorical:
            REQUIRE(v >= 0.0);
            REQUIRE(v < static_cast<double>(c.level_probs.size()));
            REQUIRE(std::floor(v) == v);
            break;
          case ColumnKind::continuous:
            REQUIRE(std::isfinite(v));
        }
      }
      double se = std::sqrt(c.analytic_variance() / static_cast<double>(n));
      INFO(c.name);
      CHECK(std::abs(col.mean() - c.analytic_mean()) <= 4.0 * se);
    }
  }
}

TEST_CASE("standardize on simple columns") {
  Vector v(300);
  for (Index i = 0; i < 300; ++i) v(i) = static_cast<double>(i % 3) - 1.0;
  Vector s = standardize_column(v);
  CHECK((s - v).cwiseAbs().maxCoeff() <= 1e-12);

  Vector c = Vector::Constant(50, 5.0);
  CHECK(standardize_column(c).cwiseAbs().maxCoeff() == 0.0);

  std::vector<ColumnSchema> schema = {gaussian("a", 10, 2)};
  auto t = generate_covariates(schema, 5000, Matrix::Identity(1, 1), 9);
  Vector g = standardize_column(t.values().col(0));
  double inside = (g.array().abs() <= 1.0).cast<double>().mean();
  CHECK(inside >= 0.98);
  CHECK(g.cwiseAbs().maxCoeff() <= 1.5);
}

TEST_CASE("standardized design is bounded and idempotent") {
  auto schema = desk_schema();
  auto t = generate_covariates(schema, 1000, block_correlation(schema.size()), 4);
  auto d = standardize(t);
  // cat01 has 4 levels -> 3 indicators.
  CHECK(d.cols() == 22);
  CHECK(d.names[0] == "cat01=1");
  CHECK(d.values.cwiseAbs().maxCoeff() <= 1.5);
  for (Index j = 0; j < d.cols(); ++j) {
    Vector col = d.values.col(j);
    Vector clipped = col.cwiseMax(-1.0).cwiseMin(1.0);
    Vector again = standardize_column(clipped);
    CHECK((again - clipped).cwiseAbs().maxCoeff() <= 1e-9);
  }
}
