#include "skillscale/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <system_error>

#include "skillscale/error.hpp"

namespace skillscale::csv {

std::string format(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw NumericError("cannot format floating-point value");
  return std::string(buf, ptr);
}

std::string format(std::int64_t value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

std::string format(std::uint64_t value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError("not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

Table read(std::istream& in, const std::vector<std::string>& expected_header) {
  Table table;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV stream");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  for (auto f : split(line)) table.header.emplace_back(f);
  if (table.header != expected_header) {
    throw ConfigError("unexpected CSV header: '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line);
    if (fields.size() != expected_header.size()) {
      throw ConfigError("CSV line " + std::to_string(lineno) + ": expected " +
                        std::to_string(expected_header.size()) + " fields");
    }
    std::vector<std::string> row;
    row.reserve(fields.size());
    for (auto f : fields) row.emplace_back(f);
    table.rows.push_back(std::move(row));
  }
  return table;
}

Writer::Writer(std::ostream& out, const std::vector<std::string>& header)
    : out_(out), columns_(header.size()) {
  std::string line;
  bool first = true;
  for (const auto& h : header) append(line, first, h);
  write_line(line);
}

void Writer::write_line(const std::string& line) {
  out_ << line << '\n';
}

}  // namespace skillscale::csv
