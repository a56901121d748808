#include "exmap/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "exmap/error.hpp"

namespace exmap::csv {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

}  // namespace

Reader::Reader(std::istream& in, char delimiter) : in_(in), delimiter_(delimiter) {}

std::vector<std::string> Reader::split(const std::string& line) const {
  std::vector<std::string> out;
  std::string current;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == delimiter_) {
      out.push_back(was_quoted ? current : trim(current));
      current.clear();
      was_quoted = false;
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_, "unterminated quoted field");
  out.push_back(was_quoted ? current : trim(current));
  return out;
}

void Reader::read_header(std::span<const std::string_view> required) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    header_ = split(line);
    for (auto name : required) {
      if (!has_column(name)) {
        throw ParseError(line_, "missing required column '" + std::string(name) + "'");
      }
    }
    return;
  }
  throw ParseError(line_, "missing header row");
}

bool Reader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (trim(line).empty()) continue;
    fields_ = split(line);
    if (fields_.size() != header_.size()) {
      throw ParseError(line_, "expected " + std::to_string(header_.size()) + " fields, found " +
                                  std::to_string(fields_.size()));
    }
    return true;
  }
  return false;
}

bool Reader::has_column(std::string_view name) const {
  for (const auto& h : header_) {
    if (h == name) return true;
  }
  return false;
}

std::size_t Reader::index_of(std::string_view column) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == column) return i;
  }
  throw ParseError(line_, "unknown column '" + std::string(column) + "'");
}

const std::string& Reader::field(std::string_view column) const {
  return fields_.at(index_of(column));
}

std::string Reader::text(std::string_view column) const {
  const auto& value = field(column);
  if (value.empty()) throw ParseError(line_, "empty field '" + std::string(column) + "'");
  return value;
}

long long Reader::integer(std::string_view column) const {
  const auto& value = text(column);
  long long out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ParseError(line_, "field '" + std::string(column) + "' is not an integer: " + value);
  }
  return out;
}

double Reader::real(std::string_view column) const {
  const auto& value = text(column);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ParseError(line_, "field '" + std::string(column) + "' is not a number: " + value);
  }
  return out;
}

std::optional<double> Reader::optional_real(std::string_view column) const {
  if (!has_column(column) || field(column).empty()) return std::nullopt;
  return real(column);
}

std::vector<std::string> Reader::list(std::string_view column, char separator) const {
  std::vector<std::string> out;
  const auto& value = field(column);
  std::size_t start = 0;
  while (start <= value.size()) {
    auto end = value.find(separator, start);
    if (end == std::string::npos) end = value.size();
    auto item = trim(std::string_view(value).substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = end + 1;
  }
  return out;
}

std::string escape(std::string_view field, char delimiter) {
  bool needs_quotes = field.find(delimiter) != std::string_view::npos ||
                      field.find('"') != std::string_view::npos ||
                      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, std::span<const std::string> fields, char delimiter) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << delimiter;
    out << escape(fields[i], delimiter);
  }
  out << '\n';
}

std::string format_real(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw NumericError("cannot format value");
  return std::string(buffer, ptr);
}

}  // namespace exmap::csv
