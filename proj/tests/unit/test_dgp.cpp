#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "causal_testbed/covariates.hpp"
#include "causal_testbed/dgp.hpp"
#include "causal_testbed/error.hpp"
#include "causal_testbed/rng.hpp"

using namespace ctb;

namespace {

std::shared_ptr<const StandardizedDesign> desk_design(std::uint64_t seed = 1, Index n = 1000) {
  auto schema = desk_schema();
  auto t = generate_covariates(schema, n, block_correlation(schema.size()), seed);
  return std::make_shared<const StandardizedDesign>(standardize(t));
}

Knobs knobs(const std::string& s) { return knobs_from_string(s); }

}  // namespace

TEST_CASE("no heterogeneity gives a constant effect") {
  auto d = desk_design();
  Knobs k = canonical_setting(3);
  REQUIRE(to_string(k) == "linear/low/penalize/linear/high/none");
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto spec = build_dgp(k, *d, seed);
    Vector tau = spec.mu1(d->values) - spec.mu0(d->values);
    CHECK(tau.maxCoeff() == tau.minCoeff());
    auto r = realize(spec, d, seed + 100);
    Vector t2 = r.oracle.mu1 - r.oracle.mu0;
    CHECK(population_sd(t2) == 0.0);
  }
}

TEST_CASE("heterogeneity term counts") {
  auto d = desk_design();
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    auto low = build_raw_dgp(knobs("linear/low/full/linear/low/low"), *d, seed);
    CHECK(low.heterogeneity_terms.size() >= 1);
    CHECK(low.heterogeneity_terms.size() <= 5);
    auto high = build_raw_dgp(knobs("linear/low/full/linear/low/high"), *d, seed);
    CHECK(high.heterogeneity_terms.size() >= 3);
    auto none = build_raw_dgp(knobs("linear/low/full/linear/low/none"), *d, seed);
    CHECK(none.heterogeneity_terms.empty());
  }
}

TEST_CASE("build is deterministic and serializes losslessly") {
  auto d = desk_design();
  for (int s : {1, 2, 40, 77}) {
    auto a = build_dgp(canonical_setting(s), *d, 99);
    auto b = build_dgp(canonical_setting(s), *d, 99);
    CHECK(nlohmann::json(a).dump() == nlohmann::json(b).dump());
    auto back = nlohmann::json::parse(nlohmann::json(a).dump()).get<DgpSpec>();
    auto probe = desk_design(5, 300);
    const Matrix& x = probe->values;
    CHECK((back.mu0(x) - a.mu0(x)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.mu1(x) - a.mu1(x)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((back.propensity(x) - a.propensity(x)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(back == a);
  }
}

TEST_CASE("assignment rescaling hits the treated fraction") {
  auto d = desk_design();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (const char* k : {"linear/low/full/linear/low/none", "step/high/full/step/high/low",
                          "polynomial/low/penalize/exponential/low/high"}) {
      auto spec = build_dgp(knobs(k), *d, seed);
      Vector e = spec.propensity(d->values);
      auto pen = spec.penalized(d->values);
      double sum = 0.0;
      int free = 0;
      int inside = 0;
      for (Index i = 0; i < e.size(); ++i) {
        if (pen[static_cast<std::size_t>(i)]) {
          CHECK(e(i) == 0.0);
          continue;
        }
        sum += e(i);
        ++free;
        inside += (e(i) >= 0.1 && e(i) <= 0.9);
      }
      double target = spec.knobs.target_treated_fraction();
      CHECK(std::abs(sum / free - target) <= 0.02);
      CHECK(static_cast<double>(inside) / free >= 0.9);
    }
  }
}

TEST_CASE("all-zero raw assignment gives a constant propensity at the target") {
  auto d = desk_design();
  auto spec = build_raw_dgp(knobs("linear/low/full/linear/low/none"), *d, 3);
  for (auto& t : spec.assignment_terms) t.coefficient = 0.0;
  spec = rescale_assignment(spec, *d);
  Vector e = spec.propensity(d->values);
  CHECK(e.maxCoeff() == e.minCoeff());
  CHECK(e(0) == doctest::Approx(0.35).epsilon(1e-12));
}

TEST_CASE("response rescaling and the exponential term") {
  auto d = desk_design();
  int exp_specs = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto spec = build_dgp(knobs("linear/low/full/exponential/low/none"), *d, seed);
    int n_exp = 0;
    for (const auto& t : spec.response_terms) n_exp += t.kind == TermKind::exponential;
    CHECK(n_exp == 1);
    exp_specs += n_exp;
    for (const auto& t : spec.assignment_terms) CHECK(t.kind != TermKind::exponential);
  }
  CHECK(exp_specs == 10);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto spec = build_dgp(knobs("linear/low/full/linear/low/none"), *d, seed);
    for (const auto& t : spec.response_terms) CHECK(t.kind != TermKind::exponential);
  }
}

TEST_CASE("linear response outcome scale across seeds") {
  auto d = desk_design();
  int in_band = 0;
  const int reps = 100;
  double mean_sum = 0.0;
  for (int seed = 1; seed <= reps; ++seed) {
    auto spec = build_dgp(knobs("linear/low/full/linear/low/low"), *d, static_cast<std::uint64_t>(seed));
    auto r = realize(spec, d, static_cast<std::uint64_t>(seed) * 7);
    double s = sd(r.y);
    in_band += (s >= 0.7 && s <= 1.4);
    mean_sum += r.y.mean();
  }
  CHECK(in_band == reps);
  CHECK(std::abs(mean_sum / reps) <= 0.1);
}

TEST_CASE("zero target effect without heterogeneity gives zero SATT when noiseless") {
  auto d = desk_design();
  DgpConfig cfg;
  cfg.fixed_target_effect = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto spec = build_dgp(knobs("step/high/penalize/step/high/none"), *d, seed, cfg);
    RealizeOptions opts;
    opts.noiseless = true;
    auto r = realize(spec, d, seed, opts);
    CHECK(std::abs(satt(r)) <= 1e-10);
  }
}

TEST_CASE("penalty regions hold no treated units") {
  auto d = desk_design();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto spec = build_dgp(knobs("polynomial/low/penalize/step/low/low"), *d, seed);
    REQUIRE(!spec.penalties.empty());
    for (const auto& region : spec.penalties) {
      CHECK(region.conditions.size() >= 1);
      CHECK(region.conditions.size() <= 3);
    }
    auto r = realize(spec, d, seed);
    int in_region = 0;
    for (Index i = 0; i < r.z.size(); ++i) {
      if (!r.oracle.penalized[static_cast<std::size_t>(i)]) continue;
      ++in_region;
      CHECK(r.oracle.e(i) == 0.0);
      CHECK(r.z(i) == 0.0);
    }
    CHECK(in_region > 0);
    double min_e = 1.0;
    for (Index i = 0; i < r.z.size(); ++i)
      if (r.z(i) == 1.0) min_e = std::min(min_e, r.oracle.e(i));
    CHECK(min_e > 0.0);
  }
}

TEST_CASE("full overlap has no penalty regions") {
  auto d = desk_design();
  auto spec = build_dgp(knobs("polynomial/low/full/step/low/low"), *d, 4);
  CHECK(spec.penalties.empty());
}

TEST_CASE("realization identities") {
  auto d = desk_design();
  auto spec = build_dgp(canonical_setting(12), *d, 5);
  auto r = realize(spec, d, 77);
  for (Index i = 0; i < r.y.size(); ++i) {
    double expect = r.z(i) * r.oracle.y1(i) + (1.0 - r.z(i)) * r.oracle.y0(i);
    REQUIRE(r.y(i) == expect);
  }
  auto again = realize(spec, d, 77);
  CHECK(again.z == r.z);
  CHECK(again.y == r.y);
  // Same assignment stream, different noise stream: identical z.
  auto a = realize(spec, d, 1, 2);
  auto b = realize(spec, d, 1, 3);
  CHECK(a.z == b.z);
  CHECK(a.y != b.y);
}

TEST_CASE("alignment copies the documented share of terms") {
  auto d = desk_design();
  double high_total = 0.0;
  double low_total = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    auto high = build_raw_dgp(knobs("step/low/full/linear/high/none"), *d, seed);
    auto low = build_raw_dgp(knobs("step/low/full/linear/low/none"), *d, seed);
    auto none = build_raw_dgp(knobs("step/low/full/linear/none/none"), *d, seed);
    CHECK(std::abs(high.alignment_fraction() - 0.75) <= 0.15);
    CHECK(std::abs(low.alignment_fraction() - 0.25) <= 0.15);
    CHECK(none.copied_terms == 0);
    high_total += static_cast<double>(high.copied_terms);
    low_total += static_cast<double>(low.copied_terms);
  }
  CHECK(high_total > low_total);
}

TEST_CASE("satt arithmetic") {
  Realization r;
  r.z = Vector::Ones(4);
  r.oracle.y0 = Vector::Zero(4);
  r.oracle.y1 = Vector::Ones(4);
  r.oracle.tau = r.oracle.y1 - r.oracle.y0;
  CHECK(satt(r) == 1.0);
  r.z << 1, 0, 1, 0;
  r.oracle.tau << 0.5, 9.0, 1.5, -3.0;
  CHECK(satt(r) == 1.0);
  r.z.setZero();
  CHECK_THROWS_AS(satt(r), Error);
}

TEST_CASE("too few columns are rejected") {
  std::vector<ColumnSchema> schema;
  for (int j = 0; j < 3; ++j) {
    ColumnSchema c;
    c.name = "c" + std::to_string(j);
    schema.push_back(c);
  }
  auto t = generate_covariates(schema, 200, Matrix::Identity(3, 3), 1);
  auto d = standardize(t);
  CHECK_THROWS_AS(build_dgp(canonical_setting(1), d, 1), Error);
}

TEST_CASE("realize rejects an unscaled spec") {
  auto d = desk_design();
  auto raw = build_raw_dgp(canonical_setting(1), *d, 1);
  CHECK_THROWS_AS(realize(raw, d, 1), Error);
}

TEST_CASE("truth basis has one column per distinct term plus penalty indicators") {
  auto d = desk_design();
  auto spec = build_dgp(canonical_setting(1), *d, 2);
  Matrix b = truth_basis(spec, d->values);
  CHECK(b.rows() == d->rows());
  CHECK(b.cols() >= static_cast<Index>(spec.assignment_terms.size()));
  CHECK(b.allFinite());
}
