#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fockmetro::cli {

// %.17g; non-finite values become an empty cell
std::string format_number(double v);
std::string format_number(std::optional<double> v);
std::string format_bool(bool b);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  void add_row(std::vector<std::string> cells);

  std::string to_string() const;
  // write to path via a temporary file and rename
  void write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

std::string escape_cell(const std::string& cell);

// atomic text file write
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fockmetro::cli
