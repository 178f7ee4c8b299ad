#pragma once

// Deterministic CSV emission. Cells are rendered with the shortest
// representation that round-trips the double, so identical results produce
// byte-identical files regardless of locale or stream state.

#include <fstream>
#include <string>
#include <vector>

#include "echoisac/common.hpp"
#include "echoisac/ini.hpp"

namespace echoisac {

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  CsvTable& begin_row() {
    rows_.emplace_back();
    rows_.back().reserve(columns_.size());
    return *this;
  }

  CsvTable& cell(double v) {
    rows_.back().push_back(format_double(v));
    return *this;
  }

  CsvTable& cell(int v) {
    rows_.back().push_back(std::to_string(v));
    return *this;
  }

  CsvTable& cell(long long v) {
    rows_.back().push_back(std::to_string(v));
    return *this;
  }

  CsvTable& cell(const std::string& v) {
    rows_.back().push_back(v);
    return *this;
  }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      if (i) out += ',';
      out += columns_[i];
    }
    out += '\n';
    for (const auto& row : rows_) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += row[i];
      }
      out += '\n';
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open for writing: " + path);
    const std::string s = to_string();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw config_error("write failed: " + path);
  }

  std::size_t n_rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace echoisac
