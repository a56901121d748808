#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace exmap::csv {

/// Streaming reader for comma-separated text with optional double-quoted
/// fields. Quoted fields may contain delimiters and doubled quotes but not
/// line breaks. A UTF-8 byte order mark on the first line is dropped.
class Reader {
 public:
  explicit Reader(std::istream& in, char delimiter = ',');

  /// Reads the header row. Throws ParseError when the stream is empty or a
  /// required column is missing.
  void read_header(std::span<const std::string_view> required);

  /// Next data row; std::nullopt at end of stream. Blank lines are skipped.
  /// Rows whose width differs from the header raise ParseError.
  bool next();

  std::size_t line() const noexcept { return line_; }
  bool has_column(std::string_view name) const;
  const std::string& field(std::string_view column) const;
  const std::vector<std::string>& header() const noexcept { return header_; }

  // Typed accessors; all raise ParseError tagged with the current line.
  std::string text(std::string_view column) const;
  long long integer(std::string_view column) const;
  double real(std::string_view column) const;
  std::optional<double> optional_real(std::string_view column) const;
  std::vector<std::string> list(std::string_view column, char separator = ';') const;

 private:
  std::size_t index_of(std::string_view column) const;
  std::vector<std::string> split(const std::string& line) const;

  std::istream& in_;
  char delimiter_;
  std::size_t line_ = 0;
  std::vector<std::string> header_;
  std::vector<std::string> fields_;
};

std::string escape(std::string_view field, char delimiter = ',');
void write_row(std::ostream& out, std::span<const std::string> fields, char delimiter = ',');
/// Shortest text that parses back to the same double.
std::string format_real(double value);

}  // namespace exmap::csv
