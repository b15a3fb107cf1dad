#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cemb/common.hpp"

namespace cemb {

// Columnar table admitting missing cells. Provenance (index of the source
// part from a concatenation) is carried in memory alongside the rows.
struct Dataset {
  using Cell = std::optional<double>;
  using Row = std::vector<Cell>;

  std::vector<VariableId> columns;
  std::vector<Row> rows;
  std::vector<int> provenance;  // empty, or one source index per row

  std::size_t column_index(const VariableId& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    fail(ErrorKind::UnknownColumn, "dataset has no column '" + name + "'");
  }

  bool has_column(const VariableId& name) const {
    for (const auto& c : columns)
      if (c == name) return true;
    return false;
  }

  std::size_t missing_count() const {
    std::size_t n = 0;
    for (const auto& r : rows)
      for (const auto& c : r)
        if (!c.has_value()) ++n;
    return n;
  }

  void check_rectangular() const {
    for (const auto& r : rows)
      if (r.size() != columns.size())
        fail(ErrorKind::SchemaMismatch, "row width does not match column count");
  }
};

// CSV with a header row; an empty field encodes a missing cell.
inline std::string dataset_to_csv(const Dataset& d) {
  std::string out = join_strings(d.columns, ",") + "\n";
  for (const auto& row : d.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      if (row[i].has_value()) out += format_number(*row[i]);
    }
    out += '\n';
  }
  return out;
}

inline void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  f << dataset_to_csv(d);
}

inline Dataset dataset_from_csv(std::istream& in) {
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::ParseError, "empty CSV input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) d.columns.push_back(field);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.eof()) break;
    Dataset::Row row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (cell.empty()) {
        row.push_back(std::nullopt);
      } else {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception&) {
          fail(ErrorKind::ParseError, "bad numeric cell '" + cell + "' in CSV");
        }
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (row.size() != d.columns.size())
      fail(ErrorKind::ParseError, "CSV row has " + std::to_string(row.size()) +
                                      " cells, expected " + std::to_string(d.columns.size()));
    d.rows.push_back(std::move(row));
  }
  return d;
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot open dataset: " + path);
  return dataset_from_csv(f);
}

}  // namespace cemb
