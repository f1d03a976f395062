#pragma once

// Minimal CSV plumbing: numeric input tables and fixed-column output with
// 17-significant-digit numbers.

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sublab/carnot.hpp"
#include "sublab/format.hpp"

namespace sublab::app {

inline std::vector<std::vector<double>> read_csv_numbers(std::istream& in, bool header) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (header && lineno == 1)) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw std::runtime_error("line " + std::to_string(lineno) + ": '" + cell + "' is not a number");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Rows are buffered in a string so the caller decides when bytes hit disk.
class CsvTable {
 public:
  explicit CsvTable(const std::vector<std::string>& columns) : columns_(columns.size()) {
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  CsvTable& cell(double v) { return put(format_double(v)); }
  CsvTable& cell(int v) { return put(std::to_string(v)); }
  CsvTable& cell(std::size_t v) { return put(std::to_string(v)); }
  CsvTable& cell(bool v) { return put(v ? "1" : "0"); }
  CsvTable& cell(const std::string& s) { return put(s); }
  CsvTable& cell(const char* s) { return put(s); }
  CsvTable& cells(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) cell(v(i));
    return *this;
  }
  void end_row() {
    if (filled_ != columns_) throw std::logic_error("csv row has the wrong number of cells");
    out_ << '\n';
    filled_ = 0;
  }

  [[nodiscard]] std::string str() const { return out_.str(); }

 private:
  CsvTable& put(const std::string& s) {
    out_ << (filled_ ? "," : "") << s;
    ++filled_;
    return *this;
  }

  std::size_t columns_;
  std::size_t filled_ = 0;
  std::ostringstream out_;
};

/// "x1", ..., "xn" style headers.
inline std::vector<std::string> numbered(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace sublab::app
