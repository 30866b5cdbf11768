#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace skillscale::csv {

// Locale-independent number formatting: shortest round-trip representation,
// '.' as decimal separator.
std::string format(double value);
std::string format(std::int64_t value);
std::string format(std::uint64_t value);
inline std::string format(int value) { return format(static_cast<std::int64_t>(value)); }

double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

/// Splits one unquoted CSV record. Fields may not contain commas.
std::vector<std::string_view> split(std::string_view line);

/// Reads a full CSV stream; throws ConfigError when the header does not match.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
Table read(std::istream& in, const std::vector<std::string>& expected_header);

/// Writes `\n`-terminated records.
class Writer {
 public:
  Writer(std::ostream& out, const std::vector<std::string>& header);

  template <typename... Fields>
  void row(const Fields&... fields) {
    std::string line;
    bool first = true;
    ((append(line, first, to_field(fields))), ...);
    write_line(line);
  }

 private:
  static std::string to_field(const std::string& s) { return s; }
  static std::string to_field(const char* s) { return s; }
  static std::string to_field(std::string_view s) { return std::string(s); }
  static std::string to_field(double v) { return format(v); }
  static std::string to_field(int v) { return format(v); }
  static std::string to_field(long v) { return format(static_cast<std::int64_t>(v)); }
  static std::string to_field(long long v) { return format(static_cast<std::int64_t>(v)); }
  static std::string to_field(unsigned long v) { return format(static_cast<std::uint64_t>(v)); }
  static std::string to_field(unsigned long long v) {
    return format(static_cast<std::uint64_t>(v));
  }
  static void append(std::string& line, bool& first, const std::string& field) {
    if (!first) line.push_back(',');
    line += field;
    first = false;
  }
  void write_line(const std::string& line);

  std::ostream& out_;
  std::size_t columns_;
};

}  // namespace skillscale::csv
