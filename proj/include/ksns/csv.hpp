#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksns {

// Doubles are printed with %.17g so a parse -> print round trip is exact and
// repeated runs produce byte-identical files.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
public:
  CsvWriter() = default;

  CsvWriter(const std::string& path, const std::vector<std::string>& columns)
      : columns_(columns.size()) {
    out_.open(path, std::ios::binary);  // binary: no platform newline games
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
    for (size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void write_row(const std::vector<double>& vals) {
    if (vals.size() != columns_)
      throw std::invalid_argument("CsvWriter: row width mismatch");
    for (size_t i = 0; i < vals.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_double(vals[i]);
    }
    out_ << '\n';
  }

  void flush() { out_.flush(); }
  bool is_open() const { return out_.is_open(); }

private:
  std::ofstream out_;
  size_t columns_ = 0;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw std::invalid_argument("CsvTable: no column named " + name);
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_csv: cannot open " + path);
  CsvTable t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    if (header) {
      while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
      header = false;
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.columns.size())
      throw std::runtime_error("read_csv: ragged row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace ksns
