#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace pinnebm {

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Comma-separated writer with a fixed header; every row must match its width.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  CsvWriter& operator<<(std::string_view cell);
  CsvWriter& operator<<(double cell);
  CsvWriter& operator<<(long cell);
  CsvWriter& operator<<(int cell) { return *this << static_cast<long>(cell); }
  CsvWriter& operator<<(std::size_t cell) { return *this << static_cast<long>(cell); }
  /// Terminates the current row.
  void end_row();
  void close();

  std::size_t columns() const { return header_.size(); }

 private:
  void put(std::string_view text);

  std::filesystem::path path_;
  std::vector<std::string> header_;
  std::ofstream out_;
  std::size_t cell_ = 0;
};

/// Rows of a CSV file with a header; fields split on ','.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace pinnebm
