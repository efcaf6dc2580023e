// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace lumisec {

/// Shortest round-trip decimal form of a double via std::to_chars. Output is
/// deterministic, so identical data reproduces byte-identical files.
std::string format_double(double value);

/// Buffered CSV output: one provenance comment line, optional extra comment
/// lines, a header row, then data rows in insertion order. write() goes
/// through a temp file in the target directory and renames into place.
class CsvWriter {
 public:
  CsvWriter(std::string header, std::string provenance);

  void add_comment(std::string line);
  void add_row(std::string row);
  std::size_t row_count() const { return rows_.size(); }

  void write(const std::filesystem::path& path) const;

 private:
  std::string header_;
  std::string provenance_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};

}  // namespace lumisec
