#include "causal_testbed/storage.hpp"

#include <cstdio>
#include <filesystem>

#include "causal_testbed/csv.hpp"
#include "causal_testbed/error.hpp"

namespace fs = std::filesystem;

namespace ctb {

namespace {

const char* const kFiles[] = {"meta.json", "x.csv", "schema.json", "zy.csv", "truth.csv", "spec.json"};

std::string join(const std::string& dir, const char* file) { return (fs::path(dir) / file).string(); }

}  // namespace

nlohmann::json read_json(const std::string& path) {
  std::string text = read_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": invalid JSON: " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void write_covariates(const std::string& dir, const CovariateTable& table) {
  CsvTable t;
  for (const auto& c : table.columns()) t.header.push_back(c.name);
  for (Index i = 0; i < table.rows(); ++i) {
    std::vector<std::string> row;
    for (Index j = 0; j < table.cols(); ++j) row.push_back(format_double(table.values()(i, j)));
    t.rows.push_back(std::move(row));
  }
  write_csv(join(dir, "x.csv"), t);
  write_json(join(dir, "schema.json"),
             nlohmann::json{{"schema_version", kSchemaVersion}, {"columns", table.columns()}});
}

CovariateTable read_covariates(const std::string& dir) {
  auto schema_json = read_json(join(dir, "schema.json"));
  auto columns = schema_json.at("columns").get<std::vector<ColumnSchema>>();
  CsvTable t = read_csv(join(dir, "x.csv"));
  if (t.header.size() != columns.size())
    throw Error(t.source + ": " + std::to_string(t.header.size()) + " columns but the schema has " +
                std::to_string(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    if (t.header[j] != columns[j].name)
      throw Error(t.source + ": column " + std::to_string(j + 1) + " is '" + t.header[j] + "', schema says '" +
                  columns[j].name + "'");
  Matrix values = numeric_matrix(t);
  try {
    return CovariateTable(std::move(columns), std::move(values));
  } catch (const Error& e) {
    throw Error(t.source + ": " + e.what());
  }
}

std::string realization_name(int setting, int replication) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%03d_r%03d", setting, replication);
  return buf;
}

void write_realization(const std::string& dir, const RealizationMeta& meta, const CovariateTable& table,
                       const DgpSpec& spec, const Realization& r) {
  std::string tmp = dir + ".partial";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp);
  write_json(join(tmp, "meta.json"), nlohmann::json{{"schema_version", kSchemaVersion},
                                                    {"setting", meta.setting},
                                                    {"replication", meta.replication},
                                                    {"n", r.z.size()}});
  write_covariates(tmp, table);

  CsvTable zy;
  zy.header = {"z", "y"};
  for (Index i = 0; i < r.z.size(); ++i) zy.rows.push_back({r.z(i) == 1.0 ? "1" : "0", format_double(r.y(i))});
  write_csv(join(tmp, "zy.csv"), zy);

  CsvTable truth;
  truth.header = {"e", "mu0", "mu1", "y0", "y1", "tau", "penalized"};
  const auto& o = r.oracle;
  for (Index i = 0; i < r.z.size(); ++i)
    truth.rows.push_back({format_double(o.e(i)), format_double(o.mu0(i)), format_double(o.mu1(i)),
                          format_double(o.y0(i)), format_double(o.y1(i)), format_double(o.tau(i)),
                          o.penalized[static_cast<std::size_t>(i)] ? "1" : "0"});
  write_csv(join(tmp, "truth.csv"), truth);
  write_json(join(tmp, "spec.json"), nlohmann::json{{"schema_version", kSchemaVersion}, {"dgp", spec}});

  fs::remove_all(dir, ec);
  fs::rename(tmp, dir, ec);
  if (ec) throw Error("cannot move " + tmp + " to " + dir + ": " + ec.message());
}

bool realization_complete(const std::string& dir) {
  for (const char* f : kFiles)
    if (!fs::exists(join(dir, f))) return false;
  return true;
}

ObservableRealization read_observable(const std::string& dir) {
  ObservableRealization out;
  auto meta = read_json(join(dir, "meta.json"));
  out.meta.setting = meta.at("setting").get<int>();
  out.meta.replication = meta.at("replication").get<int>();
  auto table = read_covariates(dir);
  out.design = std::make_shared<const StandardizedDesign>(standardize(table));
  CsvTable zy = read_csv(join(dir, "zy.csv"));
  if (static_cast<Index>(zy.rows.size()) != table.rows())
    throw Error(zy.source + ": row count differs from x.csv");
  auto zc = zy.column("z");
  auto yc = zy.column("y");
  out.z.resize(static_cast<Index>(zy.rows.size()));
  out.y.resize(static_cast<Index>(zy.rows.size()));
  for (std::size_t i = 0; i < zy.rows.size(); ++i) {
    double z = parse_double(zy, i, zc);
    if (z != 0.0 && z != 1.0) throw Error(zy.source + ": row " + std::to_string(i + 1) + ": z must be 0 or 1");
    out.z(static_cast<Index>(i)) = z;
    out.y(static_cast<Index>(i)) = parse_double(zy, i, yc);
  }
  return out;
}

OracleRealization read_oracle(const std::string& dir, const ObservableRealization& obs) {
  OracleRealization out;
  auto spec_json = read_json(join(dir, "spec.json"));
  out.spec = spec_json.at("dgp").get<DgpSpec>();
  CsvTable t = read_csv(join(dir, "truth.csv"));
  const Index n = obs.z.size();
  if (static_cast<Index>(t.rows.size()) != n) throw Error(t.source + ": row count differs from zy.csv");
  auto& r = out.realization;
  r.design = obs.design;
  r.z = obs.z;
  r.y = obs.y;
  auto& o = r.oracle;
  Vector* cols[] = {&o.e, &o.mu0, &o.mu1, &o.y0, &o.y1};
  const char* names[] = {"e", "mu0", "mu1", "y0", "y1"};
  for (int k = 0; k < 5; ++k) {
    auto c = t.column(names[k]);
    cols[k]->resize(n);
    for (Index i = 0; i < n; ++i) (*cols[k])(i) = parse_double(t, static_cast<std::size_t>(i), c);
  }
  auto pc = t.column("penalized");
  o.penalized.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) o.penalized[static_cast<std::size_t>(i)] = parse_int(t, static_cast<std::size_t>(i), pc) != 0;
  o.tau = o.y1 - o.y0;
  return out;
}

}  // namespace ctb
