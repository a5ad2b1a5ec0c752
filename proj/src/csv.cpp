#include "causal_testbed/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "causal_testbed/error.hpp"

namespace ctb {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string field_error(const CsvTable& t, std::size_t row, std::size_t col, const std::string& what) {
  std::ostringstream os;
  os << t.source << ": row " << row + 1 << ", column " << col + 1;
  if (col < t.header.size()) os << " (" << t.header[col] << ")";
  os << ": " << what;
  return os.str();
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return k;
  throw Error(source + ": missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  CsvTable t;
  t.source = path;
  std::string line;
  if (!std::getline(in, line)) throw Error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split(line);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != t.header.size()) {
      std::ostringstream os;
      os << path << ": row " << t.rows.size() + 1 << " has " << fields.size() << " fields, expected "
         << t.header.size();
      throw Error(os.str());
    }
    t.rows.push_back(std::move(fields));
  }
  return t;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::string out;
  auto append = [&out](const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) out += ',';
      out += fields[k];
    }
    out += '\n';
  };
  append(table.header);
  for (const auto& r : table.rows) append(r);
  write_file_atomic(path, out);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows.at(row).at(col);
  if (s == "NA") return std::nan("");
  if (s.empty()) throw Error(field_error(table, row, col, "empty field"));
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  // Underflow to a subnormal sets ERANGE but reads back exactly; overflow gives inf.
  if (end != s.c_str() + s.size() || !std::isfinite(v))
    throw Error(field_error(table, row, col, "not a finite number: '" + s + "'"));
  return v;
}

long long parse_int(const CsvTable& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows.at(row).at(col);
  char* end = nullptr;
  errno = 0;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE)
    throw Error(field_error(table, row, col, "not an integer: '" + s + "'"));
  return v;
}

Matrix numeric_matrix(const CsvTable& table) {
  Matrix m(static_cast<Index>(table.rows.size()), static_cast<Index>(table.header.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    for (std::size_t j = 0; j < table.header.size(); ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = parse_double(table, i, j);
  return m;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << content;
    if (!out) throw Error("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot move " + tmp + " to " + path + ": " + ec.message());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace ctb
