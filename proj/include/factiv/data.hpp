#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace factiv {

// One unit's record: outcome, the two takeup indicators, the two assignment
// indicators, and a nonnegative weight.
struct Observation {
  double y = 0.0;
  int d_a = 0;
  int d_b = 0;
  int z_a = 0;
  int z_b = 0;
  double weight = 1.0;
};

struct Dataset {
  std::vector<Observation> rows;
  std::size_t dropped_missing_outcome = 0;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

// Maps logical fields to CSV column names. The weight column is optional.
struct ColumnMap {
  std::string y = "y";
  std::string d_a = "d_a";
  std::string d_b = "d_b";
  std::string z_a = "z_a";
  std::string z_b = "z_b";
  std::string weight = "weight";
};

struct IngestOptions {
  ColumnMap columns;
  // When set, {"1","true","yes"} / {"0","false","no"} (case-insensitive) are
  // accepted for the binary columns; otherwise only literal 0/1.
  bool lenient_binary = false;
};

// A parsed CSV: header plus string cells, row-major.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// Validates rows against the column map. Rows with a missing outcome are
// dropped and counted; any other malformed cell raises SchemaError naming the
// row and column. Throws SchemaError if no usable rows remain.
Dataset ingest(const CsvTable& table, const IngestOptions& opts = {});

Dataset ingest_csv_file(const std::string& path, const IngestOptions& opts = {});

void write_csv(std::ostream& out, const Dataset& data);
void write_csv_file(const std::string& path, const Dataset& data);

}  // namespace factiv
