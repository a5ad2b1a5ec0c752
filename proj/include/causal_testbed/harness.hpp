#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causal_testbed/analysis.hpp"
#include "causal_testbed/covariates.hpp"
#include "causal_testbed/dgp.hpp"
#include "causal_testbed/estimators.hpp"
#include "causal_testbed/knobs.hpp"
#include "causal_testbed/metrics.hpp"

namespace ctb {

/// Canonical settings keep their 1..77 index; custom knob tuples get ids from 78.
struct SettingSpec {
  int id = 0;
  Knobs knobs;

  bool operator==(const SettingSpec&) const = default;
};

enum class PeheTruth { noiseless, noisy };

struct GridConfig {
  std::uint64_t master_seed = 1;
  std::string preset = "desk";  // "desk" (n=1000, p=20) or "paper" (n=4802, p=58)
  std::optional<Index> rows;    // overrides the preset's row count
  std::vector<SettingSpec> settings;
  int replications = 1;
  std::vector<std::string> methods;  // observable estimators
  bool include_oracle = true;        // adds oracle_catt rows
  bool compute_metrics = true;
  bool oracle_metrics = true;
  bool record_time = false;  // wall_time column is 0 otherwise
  PeheTruth pehe_truth = PeheTruth::noiseless;
  EstimatorOptions estimator;
  DgpConfig dgp;
  SinkhornOptions sinkhorn;
  int threads = 0;  // 0: hardware concurrency; never affects output

  /// Throws on an invalid selection (setting ids, replication count, method names).
  void validate() const;
};

/// Everything that determines output; excludes the thread count.
nlohmann::json config_to_json(const GridConfig& cfg);
/// Starts from `base` and overrides every key present in `j`.
GridConfig config_from_json(const nlohmann::json& j, GridConfig base = {});

/// Parses "1-3,7" or "all" into canonical settings.
std::vector<SettingSpec> parse_setting_list(const std::string& s);
/// Ids for custom knob tuples continue after 77 in the given order.
std::vector<SettingSpec> append_custom_settings(std::vector<SettingSpec> settings,
                                                const std::vector<Knobs>& custom);

std::vector<ColumnSchema> preset_schema(const std::string& preset);
Index preset_rows(const GridConfig& cfg);

/// Covariates are drawn once per setting and shared by its replications.
CovariateTable setting_covariates(const GridConfig& cfg, int setting);

std::uint64_t dgp_seed(const GridConfig& cfg, int setting, int replication);
std::uint64_t realization_seed(const GridConfig& cfg, int setting, int replication);
std::uint64_t estimator_seed(const GridConfig& cfg, int setting, int replication);
std::uint64_t metric_seed(const GridConfig& cfg, int setting, int replication);

struct GeneratedCell {
  DgpSpec spec;
  Realization realization;
};
GeneratedCell generate_cell(const GridConfig& cfg, const SettingSpec& setting, int replication,
                            std::shared_ptr<const StandardizedDesign> design);

/// Outcome of one (setting, replication) cell.
struct CellResult {
  int setting = 0;
  int replication = 0;
  std::vector<EstimateRow> estimates;
  std::optional<TruthRow> truth;
  std::optional<MetricRow> metrics;
  std::string error;  // cell-level failure (generation, I/O); estimator errors live in the rows

  bool failed() const;  // cell error or any estimator error
};

nlohmann::json cell_to_json(const CellResult& c);
CellResult cell_from_json(const nlohmann::json& j);

/// Runs the configured estimators; estimator exceptions become error rows.
/// PEHE is filled from the realization's truth.
CellResult estimate_cell(const GridConfig& cfg, int setting, int replication, const Realization& r);

/// Observable metrics, plus oracle metrics when `spec` is given.
MetricRow describe_cell(const GridConfig& cfg, int setting, int replication, const EstimatorInput& in,
                        const DgpSpec* spec, const Realization* r);

std::vector<std::string> metric_names(bool with_oracle);

struct CellTask {
  int setting = 0;
  int replication = 0;
};

/// Runs `fn` over the tasks on a worker pool. Results come back in task
/// order. With a cache directory, finished cells are stored as JSON and
/// reused on the next call.
std::vector<CellResult> run_cells(const std::vector<CellTask>& tasks,
                                  const std::function<CellResult(const CellTask&)>& fn, int threads,
                                  const std::string& cache_dir = "");

int resolve_threads(int threads);

struct GridOutput {
  std::vector<EstimateRow> estimates;
  std::vector<TruthRow> truths;
  MetricTable metrics;
  std::vector<std::string> cell_errors;  // "setting s replication r: message"
  int estimator_errors = 0;
};

/// Generates, estimates and describes every cell in memory. With an output
/// directory, writes manifest.json, cells/, estimates.csv, truths.csv and
/// metrics.csv there and resumes from completed cells; a manifest whose
/// config differs from `cfg` is an error.
GridOutput run_grid(const GridConfig& cfg, const std::string& output_dir = "");

GridOutput collect(const std::vector<CellResult>& cells, const std::vector<std::string>& names);

// Table files.
void write_estimates(const std::string& path, const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> read_estimates(const std::string& path);
void write_truths(const std::string& path, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truths(const std::string& path);
void write_metrics(const std::string& path, const MetricTable& table);
MetricTable read_metrics(const std::string& path);
void write_summary(const std::string& path, const std::vector<MethodSummary>& rows);
void write_r2_table(const std::string& path, const std::vector<ExplainRow>& rows);

/// Plain-text leaderboard, ascending RMSE.
std::string format_report(const std::vector<MethodSummary>& ranked);

/// Writes or checks `dir`/manifest.json: {"schema_version", "kind", "config"}.
void ensure_manifest(const std::string& dir, const std::string& kind, const nlohmann::json& config);

}  // namespace ctb
