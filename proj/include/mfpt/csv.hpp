// Copyright 2026 The mfpt-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mfpt {

/// Shortest lossless decimal form ("%.17g"); NaN is written as "nan" and -0 as 0.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_number(std::optional<double> v) {
  return v ? format_number(*v) : std::string("nan");
}

/// Minimal CSV writer: fixed column list, numeric or string cells. A column
/// name that repeats an earlier one is dropped together with its cells.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> columns) : os_(os) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
      bool repeated = false;
      for (const auto& c : columns_) repeated = repeated || c == columns[i];
      if (repeated) continue;
      keep_.push_back(i);
      columns_.push_back(columns[i]);
    }
    write_row(columns_);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    row_cells(cells);
  }

  void row_cells(const std::vector<std::string>& cells) {
    std::vector<std::string> kept;
    kept.reserve(keep_.size());
    for (std::size_t i : keep_) kept.push_back(i < cells.size() ? cells[i] : std::string());
    write_row(kept);
  }

  std::size_t column_count() const { return columns_.size(); }

 private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

  std::ostream& os_;
  std::vector<std::string> columns_;
  std::vector<std::size_t> keep_;
};

}  // namespace mfpt
