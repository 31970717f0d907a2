#include "factiv/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "factiv/errors.hpp"

namespace factiv {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

bool is_missing(const std::string& raw) {
  std::string v = lower(trim(raw));
  return v.empty() || v == "na" || v == "n/a" || v == "nan" || v == ".";
}

double parse_real(const std::string& raw, std::size_t row, const std::string& col) {
  std::string v = trim(raw);
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw SchemaError("row " + std::to_string(row) + ", column '" + col +
                      "': cannot parse '" + raw + "' as a number");
  }
}

int parse_binary(const std::string& raw, std::size_t row, const std::string& col,
                 bool lenient) {
  std::string v = trim(raw);
  if (v == "0") return 0;
  if (v == "1") return 1;
  if (lenient) {
    std::string l = lower(v);
    if (l == "true" || l == "yes") return 1;
    if (l == "false" || l == "no") return 0;
  }
  throw SchemaError("row " + std::to_string(row) + ", column '" + col +
                    "': expected a 0/1 value, got '" + raw + "'");
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;
    auto cells = split_line(line);
    if (first) {
      for (auto& c : cells) table.header.push_back(trim(c));
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  return read_csv(in);
}

Dataset ingest(const CsvTable& table, const IngestOptions& opts) {
  if (table.header.empty() || table.rows.empty())
    throw SchemaError("input is empty");

  auto col_index = [&](const std::string& name, bool required) -> int {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
      if (required) throw SchemaError("required column '" + name + "' not found");
      return -1;
    }
    return static_cast<int>(it - table.header.begin());
  };

  const auto& cm = opts.columns;
  int iy = col_index(cm.y, true);
  int ida = col_index(cm.d_a, true);
  int idb = col_index(cm.d_b, true);
  int iza = col_index(cm.z_a, true);
  int izb = col_index(cm.z_b, true);
  int iw = col_index(cm.weight, false);

  Dataset data;
  data.rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t row_no = r + 2;  // 1-based, after the header
    auto cell = [&](int idx, const std::string& col) -> const std::string& {
      if (idx < 0 || static_cast<std::size_t>(idx) >= cells.size())
        throw SchemaError("row " + std::to_string(row_no) + ": missing column '" +
                          col + "'");
      return cells[static_cast<std::size_t>(idx)];
    };

    if (is_missing(cell(iy, cm.y))) {
      ++data.dropped_missing_outcome;
      continue;
    }

    Observation obs;
    obs.y = parse_real(cell(iy, cm.y), row_no, cm.y);
    if (!std::isfinite(obs.y))
      throw SchemaError("row " + std::to_string(row_no) + ", column '" + cm.y +
                        "': outcome is not finite");
    obs.d_a = parse_binary(cell(ida, cm.d_a), row_no, cm.d_a, opts.lenient_binary);
    obs.d_b = parse_binary(cell(idb, cm.d_b), row_no, cm.d_b, opts.lenient_binary);
    obs.z_a = parse_binary(cell(iza, cm.z_a), row_no, cm.z_a, opts.lenient_binary);
    obs.z_b = parse_binary(cell(izb, cm.z_b), row_no, cm.z_b, opts.lenient_binary);
    if (iw >= 0) {
      obs.weight = parse_real(cell(iw, cm.weight), row_no, cm.weight);
      if (!(obs.weight >= 0.0))
        throw SchemaError("row " + std::to_string(row_no) + ", column '" +
                          cm.weight + "': weight must be nonnegative");
    }
    data.rows.push_back(obs);
  }

  if (data.rows.empty())
    throw SchemaError("no usable rows (" +
                      std::to_string(data.dropped_missing_outcome) +
                      " dropped for missing outcome)");
  return data;
}

Dataset ingest_csv_file(const std::string& path, const IngestOptions& opts) {
  return ingest(read_csv_file(path), opts);
}

void write_csv(std::ostream& out, const Dataset& data) {
  out << "y,d_a,d_b,z_a,z_b,weight\n";
  out.precision(17);
  for (const auto& r : data.rows) {
    out << r.y << ',' << r.d_a << ',' << r.d_b << ',' << r.z_a << ',' << r.z_b
        << ',' << r.weight << '\n';
  }
}

void write_csv_file(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write '" + path + "'");
  write_csv(out, data);
}

}  // namespace factiv
