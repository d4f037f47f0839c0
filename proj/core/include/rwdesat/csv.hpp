#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rwdesat {

/// 17-significant-digit decimal for a double ("nan", "inf", "-inf" for specials).
std::string format_double(double v);

/// Parses what format_double writes. Throws rwdesat::Error on malformed input.
double parse_double(std::string_view s);

/// Minimal comma-separated writer. Doubles are written so they re-parse bit-exactly.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names);
  CsvWriter& field(double v);
  CsvWriter& field(int v);
  CsvWriter& field(std::string_view v);
  void end_row();

 private:
  void sep();
  std::ostream& os_;
  bool first_ = true;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index by name; throws rwdesat::Error if absent.
  std::size_t column(std::string_view name) const;
};

/// Reads a header line plus data rows. No quoting support (none is written).
CsvTable read_csv(std::istream& is);

std::vector<std::string> split_line(std::string_view line, char sep = ',');

}  // namespace rwdesat
