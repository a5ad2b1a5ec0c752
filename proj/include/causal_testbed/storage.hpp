#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "causal_testbed/covariates.hpp"
#include "causal_testbed/dgp.hpp"

namespace ctb {

inline constexpr int kSchemaVersion = 1;

/// x.csv (raw covariates, header = column names) and schema.json.
void write_covariates(const std::string& dir, const CovariateTable& table);
CovariateTable read_covariates(const std::string& dir);

struct RealizationMeta {
  int setting = 0;
  int replication = 0;
};

/// "s002_r001"
std::string realization_name(int setting, int replication);

/// Writes meta.json, x.csv, schema.json, zy.csv, truth.csv and spec.json into
/// a temporary directory and renames it to `dir`.
void write_realization(const std::string& dir, const RealizationMeta& meta, const CovariateTable& table,
                       const DgpSpec& spec, const Realization& r);

/// True when every file of a realization directory is present.
bool realization_complete(const std::string& dir);

/// What estimators and observable metrics may see. Reads meta.json, x.csv,
/// schema.json and zy.csv only.
struct ObservableRealization {
  RealizationMeta meta;
  std::shared_ptr<const StandardizedDesign> design;
  Vector z;
  Vector y;
};
ObservableRealization read_observable(const std::string& dir);

/// Adds truth.csv and spec.json.
struct OracleRealization {
  DgpSpec spec;
  Realization realization;
};
OracleRealization read_oracle(const std::string& dir, const ObservableRealization& obs);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace ctb
