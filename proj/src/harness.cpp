#include "causal_testbed/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "causal_testbed/csv.hpp"
#include "causal_testbed/error.hpp"
#include "causal_testbed/rng.hpp"
#include "causal_testbed/storage.hpp"

namespace fs = std::filesystem;

namespace ctb {

// ------------------------------------------------------------------- config

namespace {

std::string to_string(IntervalKind k) { return k == IntervalKind::percentile ? "percentile" : "normal"; }

IntervalKind interval_from_string(const std::string& s) {
  if (s == "percentile") return IntervalKind::percentile;
  if (s == "normal") return IntervalKind::normal;
  throw Error("unknown interval kind '" + s + "' (percentile, normal)");
}

std::string to_string(PeheTruth t) { return t == PeheTruth::noiseless ? "noiseless" : "noisy"; }

PeheTruth pehe_truth_from_string(const std::string& s) {
  if (s == "noiseless") return PeheTruth::noiseless;
  if (s == "noisy") return PeheTruth::noisy;
  throw Error("unknown pehe_truth '" + s + "' (noiseless, noisy)");
}

nlohmann::json boosting_to_json(const BoostingOptions& b) {
  return {{"max_depth", b.max_depth}, {"shrinkage", b.shrinkage}, {"max_rounds", b.max_rounds},
          {"min_leaf", b.min_leaf},   {"max_bins", b.max_bins},   {"cv_folds", b.cv_folds},
          {"patience", b.patience}};
}

template <class T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw Error("unknown config key '" + k + "' in " + where);
}

std::vector<SettingSpec> settings_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_setting_list(j.get<std::string>());
  if (!j.is_array()) throw Error("config key 'settings' must be a string or an array");
  std::vector<SettingSpec> out;
  std::vector<Knobs> custom;
  for (const auto& item : j) {
    if (item.is_number_integer()) {
      int id = item.get<int>();
      out.push_back({id, canonical_setting(id)});
    } else if (item.is_string()) {
      custom.push_back(knobs_from_string(item.get<std::string>()));
    } else if (item.is_object() && item.contains("knobs")) {
      const auto& k = item.at("knobs");
      Knobs knobs = k.is_string() ? knobs_from_string(k.get<std::string>()) : k.get<Knobs>();
      if (item.contains("id")) {
        int id = item.at("id").get<int>();
        if (id <= kCanonicalSettings && !(canonical_setting(id) == knobs))
          throw Error("setting " + std::to_string(id) + " does not match the canonical knobs");
        out.push_back({id, knobs});
      } else {
        custom.push_back(knobs);
      }
    } else {
      throw Error("config 'settings' entries must be setting numbers, knob strings or objects");
    }
  }
  return append_custom_settings(out, custom);
}

}  // namespace

void GridConfig::validate() const {
  if (settings.empty()) throw Error("no settings selected");
  std::set<int> ids;
  for (const auto& s : settings) {
    if (s.id < 1) throw Error("setting ids must be positive (got " + std::to_string(s.id) + ")");
    if (s.id <= kCanonicalSettings && !(canonical_setting(s.id) == s.knobs))
      throw Error("setting " + std::to_string(s.id) + " does not match the canonical knobs");
    if (!ids.insert(s.id).second) throw Error("setting " + std::to_string(s.id) + " listed twice");
  }
  if (replications < 1) throw Error("replication count must be at least 1 (got " + std::to_string(replications) + ")");
  std::set<std::string> seen;
  for (const auto& m : methods) {
    find_estimator(m);
    if (!seen.insert(m).second) throw Error("method " + m + " listed twice");
  }
  if (methods.empty() && !include_oracle) throw Error("no methods selected");
  preset_schema(preset);
  if (rows && *rows < 50) throw Error("row count must be at least 50");
  if (estimator.bootstrap_reps < 2) throw Error("bootstrap_reps must be at least 2");
}

nlohmann::json config_to_json(const GridConfig& cfg) {
  nlohmann::json settings = nlohmann::json::array();
  for (const auto& s : cfg.settings) settings.push_back({{"id", s.id}, {"knobs", to_string(s.knobs)}});
  const auto& e = cfg.estimator;
  return {
      {"seed", cfg.master_seed},
      {"preset", cfg.preset},
      {"rows", cfg.rows ? nlohmann::json(*cfg.rows) : nlohmann::json(nullptr)},
      {"settings", settings},
      {"replications", cfg.replications},
      {"methods", cfg.methods},
      {"include_oracle", cfg.include_oracle},
      {"metrics", cfg.compute_metrics},
      {"oracle_metrics", cfg.oracle_metrics},
      {"record_time", cfg.record_time},
      {"pehe_truth", to_string(cfg.pehe_truth)},
      {"estimator",
       {{"bootstrap_reps", e.bootstrap_reps},
        {"interval", to_string(e.interval)},
        {"truncation", e.truncation},
        {"n_strata", e.n_strata},
        {"bootstrap_rounds", e.bootstrap_rounds},
        {"min_ess", e.min_ess},
        {"boosting", boosting_to_json(e.boosting)}}},
      {"dgp", cfg.dgp},
      {"sinkhorn",
       {{"epsilon", cfg.sinkhorn.epsilon},
        {"max_iter", cfg.sinkhorn.max_iter},
        {"tol", cfg.sinkhorn.tol},
        {"max_per_group", cfg.sinkhorn.max_per_group}}},
  };
}

GridConfig config_from_json(const nlohmann::json& j, GridConfig cfg) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  reject_unknown(j,
                 {"seed", "preset", "rows", "settings", "replications", "methods", "include_oracle", "metrics",
                  "oracle_metrics", "record_time", "pehe_truth", "estimator", "dgp", "sinkhorn", "threads"},
                 "config");
  take(j, "seed", cfg.master_seed);
  take(j, "preset", cfg.preset);
  if (j.contains("rows")) {
    if (j.at("rows").is_null())
      cfg.rows.reset();
    else
      cfg.rows = j.at("rows").get<Index>();
  }
  if (j.contains("settings")) cfg.settings = settings_from_json(j.at("settings"));
  take(j, "replications", cfg.replications);
  if (j.contains("methods")) {
    const auto& m = j.at("methods");
    if (m.is_string() && m.get<std::string>() == "all")
      cfg.methods = estimator_names();
    else
      take(j, "methods", cfg.methods);
  }
  take(j, "include_oracle", cfg.include_oracle);
  take(j, "metrics", cfg.compute_metrics);
  take(j, "oracle_metrics", cfg.oracle_metrics);
  take(j, "record_time", cfg.record_time);
  if (j.contains("pehe_truth")) cfg.pehe_truth = pehe_truth_from_string(j.at("pehe_truth").get<std::string>());
  take(j, "threads", cfg.threads);
  if (j.contains("estimator")) {
    const auto& e = j.at("estimator");
    reject_unknown(e, {"bootstrap_reps", "interval", "truncation", "n_strata", "bootstrap_rounds", "min_ess", "boosting"},
                   "estimator");
    take(e, "bootstrap_reps", cfg.estimator.bootstrap_reps);
    if (e.contains("interval")) cfg.estimator.interval = interval_from_string(e.at("interval").get<std::string>());
    take(e, "truncation", cfg.estimator.truncation);
    take(e, "n_strata", cfg.estimator.n_strata);
    take(e, "bootstrap_rounds", cfg.estimator.bootstrap_rounds);
    take(e, "min_ess", cfg.estimator.min_ess);
    if (e.contains("boosting")) {
      const auto& b = e.at("boosting");
      auto& o = cfg.estimator.boosting;
      reject_unknown(b, {"max_depth", "shrinkage", "max_rounds", "min_leaf", "max_bins", "cv_folds", "patience"},
                     "boosting");
      take(b, "max_depth", o.max_depth);
      take(b, "shrinkage", o.shrinkage);
      take(b, "max_rounds", o.max_rounds);
      take(b, "min_leaf", o.min_leaf);
      take(b, "max_bins", o.max_bins);
      take(b, "cv_folds", o.cv_folds);
      take(b, "patience", o.patience);
    }
  }
  if (j.contains("dgp")) {
    nlohmann::json merged = cfg.dgp;
    merged.merge_patch(j.at("dgp"));
    cfg.dgp = merged.get<DgpConfig>();
  }
  if (j.contains("sinkhorn")) {
    const auto& s = j.at("sinkhorn");
    reject_unknown(s, {"epsilon", "max_iter", "tol", "max_per_group"}, "sinkhorn");
    take(s, "epsilon", cfg.sinkhorn.epsilon);
    take(s, "max_iter", cfg.sinkhorn.max_iter);
    take(s, "tol", cfg.sinkhorn.tol);
    take(s, "max_per_group", cfg.sinkhorn.max_per_group);
  }
  return cfg;
}

std::vector<SettingSpec> parse_setting_list(const std::string& text) {
  std::vector<SettingSpec> out;
  if (text == "all") {
    for (int i = 1; i <= kCanonicalSettings; ++i) out.push_back({i, canonical_setting(i)});
    return out;
  }
  std::stringstream ss(text);
  std::string part;
  auto number = [&text](const std::string& s) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size()) throw Error("cannot parse setting list '" + text + "'");
    return v;
  };
  while (std::getline(ss, part, ',')) {
    auto dash = part.find('-', 1);
    int lo = number(dash == std::string::npos ? part : part.substr(0, dash));
    int hi = dash == std::string::npos ? lo : number(part.substr(dash + 1));
    if (hi < lo) throw Error("empty setting range '" + part + "'");
    for (int i = lo; i <= hi; ++i) out.push_back({i, canonical_setting(i)});
  }
  if (out.empty()) throw Error("empty setting list");
  return out;
}

std::vector<SettingSpec> append_custom_settings(std::vector<SettingSpec> settings, const std::vector<Knobs>& custom) {
  int next = kCanonicalSettings + 1;
  for (const auto& s : settings) next = std::max(next, s.id + 1);
  for (const auto& k : custom) settings.push_back({next++, k});
  return settings;
}

std::vector<ColumnSchema> preset_schema(const std::string& preset) {
  if (preset == "desk") return desk_schema();
  if (preset == "paper") return default_schema();
  throw Error("unknown preset '" + preset + "' (desk, paper)");
}

Index preset_rows(const GridConfig& cfg) {
  if (cfg.rows) return *cfg.rows;
  return cfg.preset == "paper" ? 4802 : 1000;
}

CovariateTable setting_covariates(const GridConfig& cfg, int setting) {
  auto schema = preset_schema(cfg.preset);
  Matrix corr = block_correlation(schema.size());
  return generate_covariates(schema, preset_rows(cfg), corr,
                             derive_seed(cfg.master_seed, {1, static_cast<std::uint64_t>(setting)}));
}

std::uint64_t dgp_seed(const GridConfig& cfg, int s, int r) {
  return derive_seed(cfg.master_seed, {2, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(r)});
}
std::uint64_t realization_seed(const GridConfig& cfg, int s, int r) {
  return derive_seed(cfg.master_seed, {3, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(r)});
}
std::uint64_t estimator_seed(const GridConfig& cfg, int s, int r) {
  return derive_seed(cfg.master_seed, {4, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(r)});
}
std::uint64_t metric_seed(const GridConfig& cfg, int s, int r) {
  return derive_seed(cfg.master_seed, {5, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(r)});
}

GeneratedCell generate_cell(const GridConfig& cfg, const SettingSpec& setting, int replication,
                            std::shared_ptr<const StandardizedDesign> design) {
  GeneratedCell c;
  c.spec = build_dgp(setting.knobs, *design, dgp_seed(cfg, setting.id, replication), cfg.dgp);
  c.realization = realize(c.spec, design, realization_seed(cfg, setting.id, replication));
  return c;
}

// -------------------------------------------------------------------- cells

bool CellResult::failed() const {
  if (!error.empty()) return true;
  return std::any_of(estimates.begin(), estimates.end(), [](const EstimateRow& e) { return !e.ok(); });
}

namespace {

nlohmann::json number(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }
double number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

nlohmann::json cell_to_json(const CellResult& c) {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : c.estimates)
    est.push_back({{"method", e.method},
                   {"satt_hat", number(e.satt_hat)},
                   {"lo", number(e.lo)},
                   {"hi", number(e.hi)},
                   {"wall_time", e.wall_time},
                   {"pehe", number(e.pehe)},
                   {"status", e.status}});
  nlohmann::json j = {{"schema_version", kSchemaVersion},
                      {"setting", c.setting},
                      {"replication", c.replication},
                      {"estimates", est},
                      {"error", c.error}};
  if (c.truth)
    j["truth"] = {{"satt", c.truth->satt}, {"n", c.truth->n}, {"n_treated", c.truth->n_treated}};
  if (c.metrics) {
    nlohmann::json v = nlohmann::json::array();
    for (double x : c.metrics->values) v.push_back(number(x));
    j["metrics"] = v;
  }
  return j;
}

CellResult cell_from_json(const nlohmann::json& j) {
  CellResult c;
  c.setting = j.at("setting").get<int>();
  c.replication = j.at("replication").get<int>();
  c.error = j.at("error").get<std::string>();
  for (const auto& e : j.at("estimates")) {
    EstimateRow r;
    r.setting = c.setting;
    r.replication = c.replication;
    r.method = e.at("method").get<std::string>();
    r.satt_hat = number(e.at("satt_hat"));
    r.lo = number(e.at("lo"));
    r.hi = number(e.at("hi"));
    r.wall_time = e.at("wall_time").get<double>();
    r.pehe = number(e.at("pehe"));
    r.status = e.at("status").get<std::string>();
    c.estimates.push_back(r);
  }
  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    c.truth = TruthRow{c.setting, c.replication, t.at("satt").get<double>(), t.at("n").get<int>(),
                       t.at("n_treated").get<int>()};
  }
  if (j.contains("metrics")) {
    MetricRow m{c.setting, c.replication, {}};
    for (const auto& v : j.at("metrics")) m.values.push_back(number(v));
    c.metrics = m;
  }
  return c;
}

namespace {

EstimateRow to_row(int s, int r, const EstimateResult& res, bool record_time) {
  EstimateRow row;
  row.setting = s;
  row.replication = r;
  row.method = res.method;
  row.satt_hat = res.satt_hat;
  row.lo = res.lo;
  row.hi = res.hi;
  row.wall_time = record_time ? res.wall_time : 0.0;
  return row;
}

Vector treated_values(const Vector& v, const Vector& z) {
  std::vector<double> out;
  for (Index i = 0; i < z.size(); ++i)
    if (z(i) == 1.0) out.push_back(v(i));
  return Eigen::Map<const Vector>(out.data(), static_cast<Index>(out.size()));
}

}  // namespace

CellResult estimate_cell(const GridConfig& cfg, int s, int r, const Realization& real) {
  CellResult cell;
  cell.setting = s;
  cell.replication = r;
  const Vector tau_all =
      cfg.pehe_truth == PeheTruth::noiseless ? Vector(real.oracle.mu1 - real.oracle.mu0) : real.oracle.tau;
  const Vector tau = treated_values(tau_all, real.z);

  TruthRow truth{s, r, satt(real), static_cast<int>(real.z.size()), static_cast<int>(tau.size())};
  cell.truth = truth;

  EstimatorInput in = observable_input(real);
  EstimatorOptions opts = cfg.estimator;
  opts.seed = estimator_seed(cfg, s, r);
  auto record = [&](const EstimateResult& res) {
    EstimateRow row = to_row(s, r, res, cfg.record_time);
    if (res.individual_effects) row.pehe = pehe(*res.individual_effects, tau);
    cell.estimates.push_back(row);
  };
  for (const auto& m : cfg.methods) {
    try {
      record(run_estimator(m, in, opts));
    } catch (const std::exception& e) {
      EstimateRow row;
      row.setting = s;
      row.replication = r;
      row.method = m;
      row.satt_hat = row.lo = row.hi = std::numeric_limits<double>::quiet_NaN();
      row.status = std::string("error: ") + e.what();
      cell.estimates.push_back(row);
    }
  }
  if (cfg.include_oracle) record(oracle_catt(real));
  return cell;
}

std::vector<std::string> metric_names(bool with_oracle) {
  std::vector<std::string> names = observable_metric_names();
  if (with_oracle) {
    const auto& o = oracle_metric_names();
    names.insert(names.end(), o.begin(), o.end());
  }
  return names;
}

MetricRow describe_cell(const GridConfig& cfg, int s, int r, const EstimatorInput& in, const DgpSpec* spec,
                        const Realization* real) {
  MetricOptions opts;
  opts.sinkhorn = cfg.sinkhorn;
  opts.boosting = cfg.estimator.boosting;
  opts.seed = metric_seed(cfg, s, r);
  MetricRow row{s, r, {}};
  for (const auto& e : observable_metrics(in, opts)) row.values.push_back(e.value);
  if (spec && real)
    for (const auto& e : oracle_metrics(*spec, *real, opts)) row.values.push_back(e.value);
  return row;
}

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<CellResult> run_cells(const std::vector<CellTask>& tasks,
                                  const std::function<CellResult(const CellTask&)>& fn, int threads,
                                  const std::string& cache_dir) {
  std::vector<CellResult> results(tasks.size());
  std::vector<char> done(tasks.size(), 0);
  if (!cache_dir.empty()) {
    fs::create_directories(cache_dir);
    for (std::size_t k = 0; k < tasks.size(); ++k) {
      fs::path p = fs::path(cache_dir) / (realization_name(tasks[k].setting, tasks[k].replication) + ".json");
      if (!fs::exists(p)) continue;
      CellResult c = cell_from_json(read_json(p.string()));
      if (c.setting != tasks[k].setting || c.replication != tasks[k].replication)
        throw Error(p.string() + ": cell file does not match its name");
      results[k] = std::move(c);
      done[k] = 1;
    }
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) return;
      if (done[k]) continue;
      CellResult c;
      try {
        c = fn(tasks[k]);
      } catch (const std::exception& e) {
        c = CellResult{};
        c.error = e.what();
      }
      c.setting = tasks[k].setting;
      c.replication = tasks[k].replication;
      if (!cache_dir.empty() && c.error.empty()) {
        fs::path p = fs::path(cache_dir) / (realization_name(c.setting, c.replication) + ".json");
        write_file_atomic(p.string(), cell_to_json(c).dump(1) + "\n");
      }
      results[k] = std::move(c);
    }
  };
  const int n = std::max(1, std::min<int>(resolve_threads(threads), static_cast<int>(tasks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

GridOutput collect(const std::vector<CellResult>& cells, const std::vector<std::string>& names) {
  GridOutput out;
  out.metrics.names = names;
  for (const auto& c : cells) {
    if (!c.error.empty()) {
      out.cell_errors.push_back("setting " + std::to_string(c.setting) + " replication " +
                                std::to_string(c.replication) + ": " + c.error);
      continue;
    }
    for (const auto& e : c.estimates) {
      out.estimates.push_back(e);
      if (!e.ok()) ++out.estimator_errors;
    }
    if (c.truth) out.truths.push_back(*c.truth);
    if (c.metrics) out.metrics.rows.push_back(*c.metrics);
  }
  return out;
}

void ensure_manifest(const std::string& dir, const std::string& kind, const nlohmann::json& config) {
  fs::create_directories(dir);
  fs::path p = fs::path(dir) / "manifest.json";
  nlohmann::json want = {{"schema_version", kSchemaVersion}, {"kind", kind}, {"config", config}};
  if (fs::exists(p)) {
    nlohmann::json have = read_json(p.string());
    if (have.value("schema_version", -1) != kSchemaVersion)
      throw Error(p.string() + ": unsupported schema_version");
    if (have.value("kind", std::string()) != kind)
      throw Error(p.string() + ": directory holds '" + have.value("kind", std::string()) + "' output, not '" + kind + "'");
    if (have.at("config") != config) {
      std::string keys;
      for (const auto& [k, v] : config.items())
        if (!have.at("config").contains(k) || have.at("config").at(k) != v) keys += (keys.empty() ? "" : ", ") + k;
      throw Error(p.string() + ": existing run used a different configuration (" + keys +
                  "); choose another output directory");
    }
    return;
  }
  write_json(p.string(), want);
}

GridOutput run_grid(const GridConfig& cfg, const std::string& output_dir) {
  cfg.validate();
  if (!output_dir.empty()) ensure_manifest(output_dir, "grid", config_to_json(cfg));

  // Covariates and design are built on first use and shared by the setting's replications.
  struct SettingData {
    std::once_flag once;
    std::shared_ptr<const StandardizedDesign> design;
  };
  std::vector<std::unique_ptr<SettingData>> data;
  for (std::size_t k = 0; k < cfg.settings.size(); ++k) data.push_back(std::make_unique<SettingData>());

  std::vector<CellTask> tasks;
  std::vector<std::size_t> setting_of;
  for (std::size_t k = 0; k < cfg.settings.size(); ++k)
    for (int r = 1; r <= cfg.replications; ++r) {
      tasks.push_back({cfg.settings[k].id, r});
      setting_of.push_back(k);
    }
  auto index_of = [&](const CellTask& t) {
    for (std::size_t k = 0; k < cfg.settings.size(); ++k)
      if (cfg.settings[k].id == t.setting) return k;
    throw Error("internal: unknown setting");
  };
  const bool oracle = cfg.compute_metrics && cfg.oracle_metrics;
  auto fn = [&](const CellTask& t) {
    std::size_t k = index_of(t);
    SettingData& d = *data[k];
    std::call_once(d.once, [&] {
      d.design = std::make_shared<const StandardizedDesign>(standardize(setting_covariates(cfg, t.setting)));
    });
    GeneratedCell g = generate_cell(cfg, cfg.settings[k], t.replication, d.design);
    CellResult c = estimate_cell(cfg, t.setting, t.replication, g.realization);
    if (cfg.compute_metrics)
      c.metrics = describe_cell(cfg, t.setting, t.replication, observable_input(g.realization),
                                oracle ? &g.spec : nullptr, oracle ? &g.realization : nullptr);
    return c;
  };
  auto cells =
      run_cells(tasks, fn, cfg.threads, output_dir.empty() ? "" : (fs::path(output_dir) / "cells").string());
  GridOutput out = collect(cells, cfg.compute_metrics ? metric_names(oracle) : std::vector<std::string>{});
  if (!output_dir.empty()) {
    write_estimates((fs::path(output_dir) / "estimates.csv").string(), out.estimates);
    write_truths((fs::path(output_dir) / "truths.csv").string(), out.truths);
    if (cfg.compute_metrics) write_metrics((fs::path(output_dir) / "metrics.csv").string(), out.metrics);
  }
  return out;
}

// ------------------------------------------------------------------- tables

namespace {

std::string clean(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

void require_header(const CsvTable& t, const std::vector<std::string>& want) {
  for (const auto& w : want) t.column(w);
}

}  // namespace

void write_estimates(const std::string& path, const std::vector<EstimateRow>& rows) {
  CsvTable t;
  t.header = {"setting", "replication", "method", "satt_hat", "lo", "hi", "wall_time", "pehe", "status"};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.setting), std::to_string(r.replication), r.method, format_double(r.satt_hat),
                      format_double(r.lo), format_double(r.hi), format_double(r.wall_time), format_double(r.pehe),
                      clean(r.status)});
  write_csv(path, t);
}

std::vector<EstimateRow> read_estimates(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, {"setting", "replication", "method", "satt_hat", "lo", "hi", "wall_time", "pehe", "status"});
  std::vector<EstimateRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EstimateRow r;
    r.setting = static_cast<int>(parse_int(t, i, t.column("setting")));
    r.replication = static_cast<int>(parse_int(t, i, t.column("replication")));
    r.method = t.rows[i][t.column("method")];
    r.satt_hat = parse_double(t, i, t.column("satt_hat"));
    r.lo = parse_double(t, i, t.column("lo"));
    r.hi = parse_double(t, i, t.column("hi"));
    r.wall_time = parse_double(t, i, t.column("wall_time"));
    r.pehe = parse_double(t, i, t.column("pehe"));
    r.status = t.rows[i][t.column("status")];
    out.push_back(r);
  }
  return out;
}

void write_truths(const std::string& path, const std::vector<TruthRow>& rows) {
  CsvTable t;
  t.header = {"setting", "replication", "satt", "n", "n_treated"};
  for (const auto& r : rows)
    t.rows.push_back({std::to_string(r.setting), std::to_string(r.replication), format_double(r.satt),
                      std::to_string(r.n), std::to_string(r.n_treated)});
  write_csv(path, t);
}

std::vector<TruthRow> read_truths(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, {"setting", "replication", "satt", "n", "n_treated"});
  std::vector<TruthRow> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out.push_back({static_cast<int>(parse_int(t, i, t.column("setting"))),
                   static_cast<int>(parse_int(t, i, t.column("replication"))), parse_double(t, i, t.column("satt")),
                   static_cast<int>(parse_int(t, i, t.column("n"))),
                   static_cast<int>(parse_int(t, i, t.column("n_treated")))});
  return out;
}

void write_metrics(const std::string& path, const MetricTable& table) {
  CsvTable t;
  t.header = {"setting", "replication"};
  t.header.insert(t.header.end(), table.names.begin(), table.names.end());
  for (const auto& r : table.rows) {
    if (r.values.size() != table.names.size()) throw Error("write_metrics: row width differs from the names");
    std::vector<std::string> row = {std::to_string(r.setting), std::to_string(r.replication)};
    for (double v : r.values) row.push_back(format_double(v));
    t.rows.push_back(std::move(row));
  }
  write_csv(path, t);
}

MetricTable read_metrics(const std::string& path) {
  CsvTable t = read_csv(path);
  require_header(t, {"setting", "replication"});
  if (t.header[0] != "setting" || t.header[1] != "replication")
    throw Error(path + ": first columns must be setting, replication");
  MetricTable m;
  m.names.assign(t.header.begin() + 2, t.header.end());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    MetricRow r{static_cast<int>(parse_int(t, i, 0)), static_cast<int>(parse_int(t, i, 1)), {}};
    for (std::size_t j = 2; j < t.header.size(); ++j) r.values.push_back(parse_double(t, i, j));
    m.rows.push_back(std::move(r));
  }
  return m;
}

void write_summary(const std::string& path, const std::vector<MethodSummary>& rows) {
  CsvTable t;
  t.header = {"method", "cells", "failures", "bias", "rmse", "coverage", "mean_length", "pehe", "mean_time", "bias_iqr"};
  for (const auto& s : rows)
    t.rows.push_back({s.method, std::to_string(s.cells), std::to_string(s.failures), format_double(s.bias),
                      format_double(s.rmse), format_double(s.coverage), format_double(s.mean_length),
                      format_double(s.pehe), format_double(s.mean_time), format_double(s.bias_iqr)});
  write_csv(path, t);
}

void write_r2_table(const std::string& path, const std::vector<ExplainRow>& rows) {
  CsvTable t;
  t.header = {"method", "cells", "nonoracle_metrics", "settings", "all_metrics", "settings_and_metrics", "rank_deficient"};
  for (const auto& r : rows)
    t.rows.push_back({r.method, std::to_string(r.cells), format_double(r.nonoracle_metrics), format_double(r.settings),
                      format_double(r.all_metrics), format_double(r.settings_and_metrics),
                      r.rank_deficient ? "1" : "0"});
  write_csv(path, t);
}

std::string format_report(const std::vector<MethodSummary>& ranked) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-4s %-20s %6s %10s %10s %9s %10s %10s\n", "rank", "method", "cells", "rmse",
                "bias", "coverage", "length", "pehe");
  os << line;
  int rank = 0;
  for (const auto& s : ranked) {
    char pehe_buf[32];
    std::snprintf(pehe_buf, sizeof pehe_buf, "%.4f", s.pehe);
    std::string pehe_text = std::isnan(s.pehe) ? "-" : pehe_buf;
    std::snprintf(line, sizeof line, "%-4d %-20s %6d %10.4f %10.4f %9.3f %10.4f %10s\n", ++rank, s.method.c_str(),
                  s.cells, s.rmse, s.bias, s.coverage, s.mean_length, pehe_text.c_str());
    os << line;
  }
  return os.str();
}

}  // namespace ctb
