#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causal_testbed/analysis.hpp"
#include "causal_testbed/covariates.hpp"
#include "causal_testbed/dgp.hpp"
#include "causal_testbed/error.hpp"
#include "causal_testbed/knobs.hpp"
#include "causal_testbed/rng.hpp"

using namespace ctb;

namespace {

EstimateRow est(int s, int r, const std::string& m, double v, double lo, double hi) {
  EstimateRow e;
  e.setting = s;
  e.replication = r;
  e.method = m;
  e.satt_hat = v;
  e.lo = lo;
  e.hi = hi;
  return e;
}

TruthRow truth(int s, int r, double v) {
  TruthRow t;
  t.setting = s;
  t.replication = r;
  t.satt = v;
  t.n = 100;
  t.n_treated = 40;
  return t;
}

}  // namespace

TEST_CASE("pehe") {
  Vector tau(4);
  tau << 0.5, 1.0, -2.0, 3.0;
  CHECK(pehe(tau, tau) == 0.0);
  CHECK(pehe(tau.array() + 1.0, tau) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(pehe(Vector::Zero(3), tau), Error);

  // A constant estimate cannot beat the spread of tau among treated units.
  auto schema = desk_schema();
  auto tab = generate_covariates(schema, 600, block_correlation(schema.size()), 21);
  auto design = std::make_shared<const StandardizedDesign>(standardize(tab));
  Knobs k = canonical_setting(1);
  k.heterogeneity = Heterogeneity::high;
  auto spec = build_dgp(k, *design, 22);
  auto r = realize(spec, design, 23);
  auto t = rows_where(r.z, 1.0);
  Vector tt = select_rows(Vector(r.oracle.mu1 - r.oracle.mu0), t);
  for (double c : {-1.0, 0.0, mean(tt), 2.0}) {
    Vector hat = Vector::Constant(tt.size(), c);
    double brute = 0.0;
    for (Index i = 0; i < tt.size(); ++i) brute += (c - tt(i)) * (c - tt(i));
    brute = std::sqrt(brute / static_cast<double>(tt.size()));
    CHECK(pehe(hat, tt) == doctest::Approx(brute).epsilon(1e-12));
    CHECK(pehe(hat, tt) >= population_sd(tt) - 1e-12);
  }
}

TEST_CASE("summarize arithmetic") {
  std::vector<EstimateRow> e;
  std::vector<TruthRow> t;
  for (int s = 1; s <= 3; ++s)
    for (int r = 1; r <= 4; ++r) {
      double v = 0.3 * s - 0.1 * r;
      t.push_back(truth(s, r, v));
      e.push_back(est(s, r, "exact", v, v, v));
      e.push_back(est(s, r, "shifted", v + 0.1, v + 0.1, v + 0.1));
    }
  auto sum = summarize(e, t);
  REQUIRE(sum.size() == 2);
  CHECK(sum[0].method == "exact");
  CHECK(sum[0].bias == 0.0);
  CHECK(sum[0].rmse == 0.0);
  CHECK(sum[0].coverage == 1.0);
  CHECK(sum[0].mean_length == 0.0);
  CHECK(sum[0].cells == 12);
  CHECK(sum[1].bias == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sum[1].rmse == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(sum[1].rmse >= std::abs(sum[1].bias));
  CHECK(sum[1].coverage == 0.0);
  CHECK(std::isnan(sum[0].pehe));

  auto ranked = rank_by_rmse(sum);
  CHECK(ranked[0].method == "exact");

  std::vector<EstimateRow> orphan = e;
  orphan.push_back(est(9, 9, "exact", 0, 0, 0));
  try {
    summarize(orphan, t);
    FAIL("expected an error");
  } catch (const Error& err) {
    CHECK(std::string(err.what()).find("9") != std::string::npos);
  }

  // Failed rows are counted but do not enter the statistics.
  std::vector<EstimateRow> failed = e;
  failed.push_back(est(1, 1, "exact", std::nan(""), std::nan(""), std::nan("")));
  failed.back().status = "error: boom";
  auto fs = summarize(failed, t);
  CHECK(fs[0].failures == 1);
  CHECK(fs[0].cells == 12);
  CHECK(fs[0].rmse == 0.0);
}

TEST_CASE("summarize coverage of a calibrated Gaussian estimator") {
  Rng rng(31);
  std::vector<EstimateRow> e;
  std::vector<TruthRow> t;
  for (int r = 1; r <= 1000; ++r) {
    double v = rng.normal();
    double hat = v + 0.05 * rng.normal();
    t.push_back(truth(1, r, v));
    e.push_back(est(1, r, "gauss", hat, hat - 1.959964 * 0.05, hat + 1.959964 * 0.05));
  }
  auto sum = summarize(e, t);
  CHECK(sum[0].coverage >= 0.93);
  CHECK(sum[0].coverage <= 0.97);
  CHECK(sum[0].mean_length == doctest::Approx(2 * 1.959964 * 0.05).epsilon(1e-9));
  CHECK(sum[0].bias_iqr == doctest::Approx(2 * 0.6745 * 0.05).epsilon(0.1));

  // Row order does not matter.
  std::vector<EstimateRow> shuffled = e;
  Engine eng(5);
  for (std::size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[eng() % (i + 1)]);
  std::reverse(t.begin(), t.end());
  auto s2 = summarize(shuffled, t);
  CHECK(s2[0].bias == sum[0].bias);
  CHECK(s2[0].rmse == sum[0].rmse);
  CHECK(s2[0].coverage == sum[0].coverage);
  CHECK(s2[0].mean_length == sum[0].mean_length);
  CHECK(s2[0].bias_iqr == sum[0].bias_iqr);
}

TEST_CASE("rmse bounds bias in random tables") {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EstimateRow> e;
    std::vector<TruthRow> t;
    int n = 1 + static_cast<int>(rng.index(20));
    double off = rng.normal() * 1e3;
    for (int r = 1; r <= n; ++r) {
      t.push_back(truth(1, r, off));
      double v = off + 1e-3 * rng.normal() + 5.0;
      e.push_back(est(1, r, "m", v, v - 1, v + 1));
    }
    auto s = summarize(e, t);
    CHECK(s[0].rmse >= std::abs(s[0].bias));
    CHECK(s[0].coverage >= 0.0);
    CHECK(s[0].coverage <= 1.0);
  }
}

namespace {

// Grid of methods x settings x replications with log|bias| from `gen`.
template <class Gen>
void planted(int a, int b, int n, Gen gen, std::vector<EstimateRow>& e, std::vector<TruthRow>& t) {
  for (int s = 1; s <= b; ++s)
    for (int r = 1; r <= n; ++r) t.push_back(truth(s, r, 0.0));
  for (int m = 0; m < a; ++m)
    for (int s = 1; s <= b; ++s)
      for (int r = 1; r <= n; ++r) {
        double v = std::exp(gen(m, s, r));
        e.push_back(est(s, r, "m" + std::to_string(100 + m), v, v, v));
      }
}

}  // namespace

TEST_CASE("variance components") {
  SUBCASE("identical methods") {
    Rng rng(41);
    std::vector<double> cell(200);
    for (auto& v : cell) v = rng.normal();
    std::vector<EstimateRow> e;
    std::vector<TruthRow> t;
    planted(4, 10, 5, [&](int, int s, int r) { return cell[static_cast<std::size_t>((s - 1) * 5 + r - 1)] + 0.3 * s; }, e, t);
    auto vc = variance_components(e, t);
    // Zero up to rounding of the mean squares.
    CHECK(vc.method <= 1e-12 * vc.sample_variance);
    CHECK(vc.interaction <= 1e-12 * vc.sample_variance);
    CHECK(vc.setting > 0.0);
    CHECK(vc.methods == 4);
    CHECK(vc.settings == 10);
  }
  SUBCASE("planted method effect with unit-variance noise") {
    // Fixed method effects scaled to sample variance 1.
    const int a = 20;
    Rng rng(42);
    std::vector<double> eff(a);
    for (auto& v : eff) v = rng.normal();
    double m = std::accumulate(eff.begin(), eff.end(), 0.0) / a;
    double ss = 0.0;
    for (double v : eff) ss += (v - m) * (v - m);
    for (auto& v : eff) v = (v - m) / std::sqrt(ss / (a - 1));
    std::vector<EstimateRow> e;
    std::vector<TruthRow> t;
    planted(a, 20, 20, [&](int mm, int, int) { return eff[static_cast<std::size_t>(mm)] + rng.normal(); }, e, t);
    auto vc = variance_components(e, t);
    CHECK(std::abs(vc.share(vc.method) - 0.5) <= 0.05);
    CHECK(std::abs(vc.share(vc.setting)) <= 0.05);
    CHECK(std::abs(vc.share(vc.interaction)) <= 0.05);
    CHECK(std::abs(vc.share(vc.realization) - 0.5) <= 0.05);
    CHECK(vc.share(vc.method) + vc.share(vc.setting) + vc.share(vc.interaction) + vc.share(vc.realization) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("raw parts sum to the sample variance") {
    Rng rng(43);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<Observation> obs;
      int a = 2 + trial % 3, b = 2 + trial % 4;
      for (int m = 0; m < a; ++m)
        for (int s = 1; s <= b; ++s) {
          int reps = 2 + static_cast<int>(rng.index(4));
          for (int r = 0; r < reps; ++r) obs.push_back({"m" + std::to_string(m), s, rng.normal() * (1 + m)});
        }
      auto vc = variance_components(obs);
      double raw = vc.raw_method + vc.raw_setting + vc.raw_interaction + vc.raw_realization;
      CHECK(std::abs(raw - vc.sample_variance) <= 1e-9);
      CHECK(vc.method >= 0.0);
      CHECK(vc.setting >= 0.0);
      CHECK(vc.interaction >= 0.0);
      CHECK(vc.realization >= 0.0);
      CHECK(vc.total == doctest::Approx(vc.method + vc.setting + vc.interaction + vc.realization).epsilon(1e-12));
      bool neg = vc.raw_method < 0 || vc.raw_setting < 0 || vc.raw_interaction < 0 || vc.raw_realization < 0;
      CHECK(vc.truncated == neg);
    }
  }
  SUBCASE("single method") {
    std::vector<Observation> obs;
    Rng rng(44);
    for (int s = 1; s <= 5; ++s)
      for (int r = 0; r < 10; ++r) obs.push_back({"only", s, s + rng.normal()});
    auto vc = variance_components(obs);
    CHECK(vc.method == 0.0);
    CHECK(vc.interaction == 0.0);
    CHECK(vc.setting > 1.0);
  }
  SUBCASE("too small") {
    std::vector<Observation> obs = {{"a", 1, 0.0}, {"a", 1, 1.0}};
    CHECK_THROWS_AS(variance_components(obs), Error);
  }
}

TEST_CASE("explain_performance") {
  const int settings = 5, reps = 100;
  Rng rng(51);
  MetricTable mt;
  mt.names = {"overlap", "imbalance", "oracle_alignment"};
  std::vector<TruthRow> t;
  for (int s = 1; s <= settings; ++s)
    for (int r = 1; r <= reps; ++r) {
      mt.rows.push_back({s, r, {rng.normal(), rng.normal(), rng.normal()}});
      t.push_back(truth(s, r, 1.0));
    }
  std::vector<EstimateRow> e;
  for (const auto& row : mt.rows) {
    // planted: log|bias| is the first metric; oracle: the oracle metric; noise: independent.
    e.push_back(est(row.setting, row.replication, "planted", 1.0 + std::exp(row.values[0]), 0, 0));
    e.push_back(est(row.setting, row.replication, "oracle", 1.0 - std::exp(row.values[2]), 0, 0));
    e.push_back(est(row.setting, row.replication, "noise", 1.0 + std::exp(rng.normal()), 0, 0));
  }
  auto out = explain_performance(e, t, mt);
  REQUIRE(out.size() == 3);
  std::map<std::string, ExplainRow> by;
  for (const auto& r : out) by[r.method] = r;
  CHECK(by["planted"].nonoracle_metrics > 0.999);
  CHECK(by["planted"].all_metrics > 0.999);
  CHECK(by["planted"].settings_and_metrics > 0.999);
  CHECK(by["planted"].settings < 0.05);
  CHECK(by["oracle"].nonoracle_metrics < 0.05);
  CHECK(by["oracle"].all_metrics > 0.999);
  const auto& z = by["noise"];
  CHECK(z.cells == 500);
  for (double v : {z.nonoracle_metrics, z.settings, z.all_metrics, z.settings_and_metrics}) CHECK(v <= 0.05);
  for (const auto& r : out) {
    CHECK(r.settings_and_metrics >= r.settings);
    CHECK(r.settings >= 0.0);
    CHECK(r.all_metrics >= r.nonoracle_metrics - 1e-12);
  }

  // Too few cells.
  std::vector<EstimateRow> few(e.begin(), e.begin() + 30);
  CHECK_THROWS_AS(explain_performance(few, t, mt), Error);
  auto skipped = explain_performance(few, t, mt, 30, true);
  for (const auto& r : skipped) CHECK(std::isnan(r.all_metrics));

  // Duplicated metric column: minimum-norm fit with a rank flag.
  MetricTable dup = mt;
  dup.names.push_back("overlap_copy");
  for (auto& row : dup.rows) row.values.push_back(row.values[0]);
  auto d = explain_performance(e, t, dup);
  for (const auto& r : d) CHECK(r.rank_deficient);
}
