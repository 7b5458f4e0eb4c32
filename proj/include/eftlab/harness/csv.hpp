#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "eftlab/errors.hpp"

namespace eftlab {

// Deterministic CSV cell formatting: shortest lossless roundtrip for doubles,
// plain decimal for integers. Infinities print as inf/-inf.
inline std::string csv_format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_format(long v) { return std::to_string(v); }
inline std::string csv_format(int v) { return std::to_string(v); }
inline std::string csv_format(std::uint64_t v) { return std::to_string(v); }
inline std::string csv_format(const std::string& v) { return v; }
inline std::string csv_format(const char* v) { return v; }

// Header-first CSV writer with a fixed column order.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : path_(path), n_columns_(columns.size()), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    if (sizeof...(fields) != n_columns_)
      throw ShapeError("csv row width mismatch in '" + path_ + "'");
    std::size_t i = 0;
    ((out_ << (i++ ? "," : "") << csv_format(fields)), ...);
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& fields) {
    if (fields.size() != n_columns_)
      throw ShapeError("csv row width mismatch in '" + path_ + "'");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

  void close() {
    out_.flush();
    if (!out_) throw IoError("failed writing '" + path_ + "'");
    out_.close();
  }

 private:
  std::string path_;
  std::size_t n_columns_;
  std::ofstream out_;
};

// Simple reader for the harness' own CSV outputs (no quoting/escapes).
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw ParseError("csv column '" + name + "' not found");
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  CsvTable table;
  std::string line;
  bool header = true;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (header) {
      table.columns = std::move(fields);
      header = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  }
  return table;
}

}  // namespace eftlab
