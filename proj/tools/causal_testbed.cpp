#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causal_testbed/csv.hpp"
#include "causal_testbed/error.hpp"
#include "causal_testbed/harness.hpp"
#include "causal_testbed/storage.hpp"

namespace fs = std::filesystem;
using namespace ctb;

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string preset;
  long rows = 0;
  std::string settings;
  std::vector<std::string> knobs;
  int reps = 0;
  std::string methods;
  int bootstrap = 0;
  bool no_oracle_method = false;
  bool record_time = false;
  bool allow_partial = false;
  std::string pehe_truth;

  // The same flag name is registered on several subcommands.
  std::multimap<std::string, CLI::Option*> opt;

  void reg(const std::string& name, CLI::Option* o) { opt.emplace(name, o); }
  bool given(const std::string& name) const {
    auto [lo, hi] = opt.equal_range(name);
    for (auto it = lo; it != hi; ++it)
      if (it->second->count() > 0) return true;
    return false;
  }
};

void add_selection(CLI::App* cmd, Flags& f) {
  f.reg("config", cmd->add_option("--config", f.config, "JSON config file; flags override it"));
  f.reg("seed", cmd->add_option("--seed", f.seed, "master seed (overrides CAUSAL_TESTBED_SEED)"));
  f.reg("preset", cmd->add_option("--preset", f.preset, "covariate preset: desk (n=1000, p=20) or paper (n=4802, p=58)"));
  f.reg("rows", cmd->add_option("--rows", f.rows, "override the preset's row count"));
  f.reg("setting", cmd->add_option("--setting", f.settings, "canonical settings, e.g. 2 or 1-5,9 or all"));
  f.reg("knobs", cmd->add_option("--knobs", f.knobs,
                                   "custom setting as treatment/pct/overlap/response/alignment/heterogeneity; repeatable"));
  f.reg("reps", cmd->add_option("--reps", f.reps, "replications per setting"));
}

void add_estimation(CLI::App* cmd, Flags& f) {
  f.reg("methods", cmd->add_option("--methods", f.methods, "comma-separated estimator names or all"));
  f.reg("bootstrap", cmd->add_option("--bootstrap", f.bootstrap, "bootstrap replicates B"));
  f.reg("no-oracle-method", cmd->add_flag("--no-oracle-method", f.no_oracle_method, "omit oracle_catt rows"));
  f.reg("record-time", cmd->add_flag("--record-time", f.record_time, "record wall time (output no longer reproducible)"));
  f.reg("pehe-truth", cmd->add_option("--pehe-truth", f.pehe_truth, "noiseless (mu1 - mu0) or noisy (y1 - y0)"));
  cmd->add_flag("--allow-partial", f.allow_partial, "exit 0 even when some estimators failed");
}

void add_threads(CLI::App* cmd, Flags& f) {
  f.reg("threads", cmd->add_option("--threads", f.threads, "worker threads (default: all cores)"));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ','))
    if (!part.empty()) out.push_back(part);
  return out;
}

GridConfig defaults() {
  GridConfig cfg;
  cfg.settings = parse_setting_list("all");
  cfg.methods = estimator_names();
  return cfg;
}

/// config file < CAUSAL_TESTBED_SEED < flags
GridConfig apply(const Flags& f, GridConfig cfg) {
  if (f.given("config")) cfg = config_from_json(read_json(f.config), cfg);
  if (const char* env = std::getenv("CAUSAL_TESTBED_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      cfg.master_seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw Error(std::string("CAUSAL_TESTBED_SEED is not an unsigned integer: '") + env + "'");
    }
  }
  if (f.given("seed")) cfg.master_seed = f.seed;
  if (f.given("threads")) cfg.threads = f.threads;
  if (f.given("preset")) cfg.preset = f.preset;
  if (f.given("rows")) cfg.rows = static_cast<Index>(f.rows);
  if (f.given("setting") || f.given("knobs")) {
    std::vector<SettingSpec> s = f.given("setting") ? parse_setting_list(f.settings) : std::vector<SettingSpec>{};
    std::vector<Knobs> custom;
    for (const auto& k : f.knobs) custom.push_back(knobs_from_string(k));
    cfg.settings = append_custom_settings(s, custom);
  }
  if (f.given("reps")) cfg.replications = f.reps;
  if (f.given("methods")) cfg.methods = f.methods == "all" ? estimator_names() : split_list(f.methods);
  if (f.given("bootstrap")) cfg.estimator.bootstrap_reps = f.bootstrap;
  if (f.no_oracle_method) cfg.include_oracle = false;
  if (f.record_time) cfg.record_time = true;
  if (f.given("pehe-truth")) {
    if (f.pehe_truth == "noiseless")
      cfg.pehe_truth = PeheTruth::noiseless;
    else if (f.pehe_truth == "noisy")
      cfg.pehe_truth = PeheTruth::noisy;
    else
      throw Error("--pehe-truth must be noiseless or noisy");
  }
  cfg.validate();
  return cfg;
}

/// What a data directory's content depends on.
nlohmann::json data_config(const GridConfig& cfg) {
  nlohmann::json full = config_to_json(cfg);
  nlohmann::json out;
  for (const char* k : {"seed", "preset", "rows", "settings", "replications", "dgp"}) out[k] = full.at(k);
  return out;
}

GridConfig read_data_config(const std::string& data) {
  fs::path p = fs::path(data) / "manifest.json";
  if (!fs::exists(p)) throw Error("missing " + p.string());
  nlohmann::json m = read_json(p.string());
  if (m.value("kind", std::string()) != "data") throw Error(p.string() + ": not a data directory manifest");
  GridConfig cfg = defaults();
  return config_from_json(m.at("config"), cfg);
}

struct DataCell {
  int setting = 0;
  int replication = 0;
  std::string dir;
};

std::vector<DataCell> list_realizations(const std::string& data) {
  if (!fs::is_directory(data)) throw Error("missing data directory " + data);
  static const std::regex name(R"(s\d+_r\d+)");
  std::vector<DataCell> out;
  for (const auto& entry : fs::directory_iterator(data)) {
    if (!entry.is_directory() || !std::regex_match(entry.path().filename().string(), name)) continue;
    fs::path meta = entry.path() / "meta.json";
    if (!fs::exists(meta)) throw Error("missing " + meta.string());
    nlohmann::json m = read_json(meta.string());
    out.push_back({m.at("setting").get<int>(), m.at("replication").get<int>(), entry.path().string()});
  }
  std::sort(out.begin(), out.end(), [](const DataCell& a, const DataCell& b) {
    return std::pair(a.setting, a.replication) < std::pair(b.setting, b.replication);
  });
  if (out.empty()) throw Error("no realization directories in " + data);
  return out;
}

std::vector<CellTask> tasks_of(const std::vector<DataCell>& cells) {
  std::vector<CellTask> t;
  for (const auto& c : cells) t.push_back({c.setting, c.replication});
  return t;
}

int finish(const GridOutput& out, bool allow_partial) {
  for (const auto& e : out.cell_errors) std::cerr << "error: " << e << "\n";
  for (const auto& e : out.estimates)
    if (!e.ok())
      std::cerr << "estimator failure: setting " << e.setting << " replication " << e.replication << " " << e.method
                << ": " << e.status << "\n";
  if (!out.cell_errors.empty()) return 1;
  if (out.estimator_errors > 0 && !allow_partial) return 2;
  return 0;
}

int cmd_generate(const Flags& f, const std::string& out_dir) {
  GridConfig cfg = apply(f, defaults());
  ensure_manifest(out_dir, "data", data_config(cfg));
  std::map<int, const SettingSpec*> by_id;
  for (const auto& s : cfg.settings) by_id[s.id] = &s;
  struct Shared {
    std::once_flag once;
    std::shared_ptr<const CovariateTable> table;
    std::shared_ptr<const StandardizedDesign> design;
  };
  std::map<int, Shared> shared;
  std::vector<CellTask> tasks;
  for (const auto& s : cfg.settings) {
    shared[s.id];
    for (int r = 1; r <= cfg.replications; ++r) tasks.push_back({s.id, r});
  }
  std::atomic<int> written{0};
  auto fn = [&](const CellTask& t) {
    std::string dir = (fs::path(out_dir) / realization_name(t.setting, t.replication)).string();
    CellResult c;
    if (realization_complete(dir)) {
      ObservableRealization obs = read_observable(dir);
      c.truth = TruthRow{t.setting, t.replication, satt(read_oracle(dir, obs).realization), 0, 0};
      return c;
    }
    Shared& sh = shared.at(t.setting);
    std::call_once(sh.once, [&] {
      sh.table = std::make_shared<const CovariateTable>(setting_covariates(cfg, t.setting));
      sh.design = std::make_shared<const StandardizedDesign>(standardize(*sh.table));
    });
    GeneratedCell g = generate_cell(cfg, *by_id.at(t.setting), t.replication, sh.design);
    if (fs::exists(dir)) fs::remove_all(dir);
    write_realization(dir, {t.setting, t.replication}, *sh.table, g.spec, g.realization);
    ++written;
    c.truth = TruthRow{t.setting, t.replication, satt(g.realization), 0, 0};
    return c;
  };
  GridOutput out = collect(run_cells(tasks, fn, cfg.threads), {});
  if (out.cell_errors.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& t : out.truths)
      list.push_back({{"setting", t.setting},
                      {"replication", t.replication},
                      {"dir", realization_name(t.setting, t.replication)},
                      {"seed", realization_seed(cfg, t.setting, t.replication)},
                      {"satt", t.satt}});
    fs::path p = fs::path(out_dir) / "manifest.json";
    nlohmann::json m = read_json(p.string());
    m["realizations"] = list;
    write_json(p.string(), m);
  }
  std::cout << "generated " << written << " realizations in " << out_dir << " (" << tasks.size() - written
            << " already present)\n";
  return finish(out, false);
}

int cmd_describe(const Flags& f, const std::string& data, std::string out_path, bool no_oracle) {
  GridConfig cfg = apply(f, read_data_config(data));
  auto cells = list_realizations(data);
  if (out_path.empty()) out_path = (fs::path(data) / "metrics.csv").string();
  auto fn = [&](const CellTask& t) {
    const auto& dc = *std::find_if(cells.begin(), cells.end(), [&](const DataCell& d) {
      return d.setting == t.setting && d.replication == t.replication;
    });
    ObservableRealization obs = read_observable(dc.dir);
    EstimatorInput in{obs.design->values, obs.z, obs.y};
    CellResult c;
    if (no_oracle) {
      c.metrics = describe_cell(cfg, t.setting, t.replication, in, nullptr, nullptr);
    } else {
      OracleRealization o = read_oracle(dc.dir, obs);
      c.metrics = describe_cell(cfg, t.setting, t.replication, in, &o.spec, &o.realization);
    }
    return c;
  };
  GridOutput out = collect(run_cells(tasks_of(cells), fn, cfg.threads), metric_names(!no_oracle));
  if (!out.cell_errors.empty()) return finish(out, false);
  write_metrics(out_path, out.metrics);
  std::cout << "wrote " << out_path << " (" << out.metrics.rows.size() << " realizations, "
            << out.metrics.names.size() << " metrics)\n";
  return 0;
}

int cmd_estimate(const Flags& f, const std::string& data, std::string out_dir) {
  GridConfig cfg = apply(f, read_data_config(data));
  auto cells = list_realizations(data);
  if (out_dir.empty()) out_dir = data;
  fs::create_directories(out_dir);
  auto fn = [&](const CellTask& t) {
    const auto& dc = *std::find_if(cells.begin(), cells.end(), [&](const DataCell& d) {
      return d.setting == t.setting && d.replication == t.replication;
    });
    ObservableRealization obs = read_observable(dc.dir);
    OracleRealization o = read_oracle(dc.dir, obs);
    return estimate_cell(cfg, t.setting, t.replication, o.realization);
  };
  GridOutput out = collect(run_cells(tasks_of(cells), fn, cfg.threads), {});
  if (!out.cell_errors.empty()) return finish(out, f.allow_partial);
  write_estimates((fs::path(out_dir) / "estimates.csv").string(), out.estimates);
  write_truths((fs::path(out_dir) / "truths.csv").string(), out.truths);
  std::cout << "wrote " << out.estimates.size() << " estimate rows to " << out_dir << "\n";
  return finish(out, f.allow_partial);
}

std::string require_file(const fs::path& p) {
  if (!fs::exists(p)) throw Error("missing input " + p.string());
  return p.string();
}

int cmd_evaluate(const std::string& in_dir, std::string metrics_path, std::string out_dir) {
  if (out_dir.empty()) out_dir = in_dir;
  auto estimates = read_estimates(require_file(fs::path(in_dir) / "estimates.csv"));
  auto truths = read_truths(require_file(fs::path(in_dir) / "truths.csv"));
  fs::create_directories(out_dir);
  write_summary((fs::path(out_dir) / "summary.csv").string(), rank_by_rmse(summarize(estimates, truths)));

  std::vector<EstimateRow> submitted;
  for (const auto& e : estimates)
    if (e.method != kOracleMethod) submitted.push_back(e);

  if (metrics_path.empty()) metrics_path = (fs::path(in_dir) / "metrics.csv").string();
  MetricTable metrics = read_metrics(require_file(metrics_path));
  write_r2_table((fs::path(out_dir) / "r2_table.csv").string(),
                 explain_performance(submitted, truths, metrics, 30, true));

  nlohmann::json vc;
  try {
    vc = to_json(variance_components(submitted, truths));
  } catch (const Error& e) {
    vc = {{"schema_version", kSchemaVersion}, {"available", false}, {"reason", e.what()}};
    std::cerr << "note: variance components unavailable: " << e.what() << "\n";
  }
  write_json((fs::path(out_dir) / "varcomp.json").string(), vc);
  std::cout << "wrote summary.csv, r2_table.csv and varcomp.json to " << out_dir << "\n";
  return 0;
}

int cmd_report(const std::string& in_dir) {
  auto estimates = read_estimates(require_file(fs::path(in_dir) / "estimates.csv"));
  auto truths = read_truths(require_file(fs::path(in_dir) / "truths.csv"));
  std::string text = format_report(rank_by_rmse(summarize(estimates, truths)));
  write_file_atomic((fs::path(in_dir) / "report.txt").string(), text);
  std::cout << text;
  return 0;
}

int cmd_run(const Flags& f, const std::string& out_dir) {
  GridConfig cfg = apply(f, defaults());
  GridOutput out = run_grid(cfg, out_dir);
  int code = finish(out, f.allow_partial);
  if (code == 1) return code;
  if (!cfg.compute_metrics) throw Error("run needs metrics for evaluate");
  cmd_evaluate(out_dir, "", out_dir);
  cmd_report(out_dir);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation testbed for treatment-effect estimators"};
  app.require_subcommand(1);
  Flags f;
  std::string out_dir = "data";
  std::string data_dir;
  std::string metrics_out;
  std::string in_dir = ".";
  std::string metrics_in;
  std::string eval_out;
  bool no_oracle = false;

  auto* gen = app.add_subcommand("generate", "write realization directories");
  add_selection(gen, f);
  add_threads(gen, f);
  gen->add_option("--out", out_dir, "data directory")->capture_default_str();

  auto* desc = app.add_subcommand("describe", "compute dataset metrics for a data directory");
  desc->add_option("--data", data_dir, "data directory")->required();
  desc->add_option("--out", metrics_out, "metrics file (default: <data>/metrics.csv)");
  desc->add_flag("--no-oracle", no_oracle, "observable metrics only; truth files are never read");
  f.reg("config", desc->add_option("--config", f.config, "JSON config file (sinkhorn and boosting keys)"));
  add_threads(desc, f);

  auto* est = app.add_subcommand("estimate", "run estimators on a data directory");
  est->add_option("--data", data_dir, "data directory")->required();
  std::string est_out;
  est->add_option("--out", est_out, "output directory (default: the data directory)");
  f.reg("config", est->add_option("--config", f.config, "JSON config file"));
  add_estimation(est, f);
  add_threads(est, f);

  auto* eval = app.add_subcommand("evaluate", "summary, R2 table and variance components");
  eval->add_option("--in", in_dir, "directory with estimates.csv and truths.csv")->capture_default_str();
  eval->add_option("--metrics", metrics_in, "metrics file (default: <in>/metrics.csv)");
  eval->add_option("--out", eval_out, "output directory (default: --in)");

  auto* rep = app.add_subcommand("report", "plain-text leaderboard ranked by RMSE");
  rep->add_option("--in", in_dir, "directory with estimates.csv and truths.csv")->capture_default_str();

  auto* run = app.add_subcommand("run", "generate, estimate, describe, evaluate and report in one pass");
  add_selection(run, f);
  add_estimation(run, f);
  add_threads(run, f);
  std::string run_out = "results";
  run->add_option("--out", run_out, "output directory; rerunning resumes")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return cmd_generate(f, out_dir);
    if (*desc) return cmd_describe(f, data_dir, metrics_out, no_oracle);
    if (*est) return cmd_estimate(f, data_dir, est_out);
    if (*eval) return cmd_evaluate(in_dir, metrics_in, eval_out);
    if (*rep) return cmd_report(in_dir);
    if (*run) return cmd_run(f, run_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
