#pragma once

#include <string>
#include <vector>

#include "causal_testbed/linalg.hpp"

namespace ctb {

/// Plain comma-separated table: one header line, no quoting.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws naming the file when absent.
  std::size_t column(const std::string& name) const;
  std::string source;  // path, for messages
};

/// Throws on a missing file or a row whose field count differs from the
/// header (naming the 1-based data row).
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

/// Shortest text that reads back to the same double ("%.17g"); NaN as "NA".
std::string format_double(double v);

/// Parses a field, throwing "<file>: row r, column c: ..." on failure. "NA"
/// reads as NaN.
double parse_double(const CsvTable& table, std::size_t row, std::size_t col);
long long parse_int(const CsvTable& table, std::size_t row, std::size_t col);

/// Numeric matrix from every column of the table.
Matrix numeric_matrix(const CsvTable& table);

/// Writes `content` to a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace ctb
