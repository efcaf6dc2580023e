// SPDX-License-Identifier: Apache-2.0

#include "lumisec/csv.hpp"

#include <charconv>
#include <fstream>
#include <system_error>
#include <utility>

#include "lumisec/errors.hpp"

namespace lumisec {

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("failed to format a double");
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::string header, std::string provenance)
    : header_(std::move(header)), provenance_(std::move(provenance)) {}

void CsvWriter::add_comment(std::string line) {
  comments_.push_back(std::move(line));
}

void CsvWriter::add_row(std::string row) { rows_.push_back(std::move(row)); }

void CsvWriter::write(const std::filesystem::path& path) const {
  const std::filesystem::path dir =
      path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot open output file: " + tmp.string());
    out << "# " << provenance_ << "\n";
    for (const std::string& c : comments_) out << "# " << c << "\n";
    out << header_ << "\n";
    for (const std::string& r : rows_) out << r << "\n";
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace lumisec
