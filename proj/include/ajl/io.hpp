#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ajl {

/// Shortest round-trip decimal form ("%.17g", '.' decimal point).
std::string format_double(double value);

/// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string read_file(const std::filesystem::path& path);

/// Content hash of a file as 16 hex digits (FNV-1a 64).
std::string file_hash(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;
};

/// Comma-separated numeric table with a header line.
CsvTable read_csv(const std::filesystem::path& path);

/// Writes a numeric table with a header; LF line endings.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

}  // namespace ajl
