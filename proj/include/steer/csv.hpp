// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal CSV helpers shared by the grid, lookup-table and results files:
// comma separated, LF line endings, '.' decimal separator, '#' comments.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "steer/errors.hpp"

namespace steer::csv {

/// Shortest decimal text that parses back to the identical double.
inline std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }
inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("cannot parse number '" + std::string(field) + "'", line);
  }
  return v;
}

inline std::int64_t parse_int(std::string_view field, std::size_t line) {
  field = trim(field);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
    throw ParseError("cannot parse integer '" + std::string(field) + "'", line);
  }
  return v;
}

/// One physical line of a CSV file with its 1-based line number.
struct Line {
  std::string text;
  std::size_t number = 0;
};

/// Reads the next line; returns false at end of stream. Strips a trailing CR.
inline bool next_line(std::istream& in, Line& line) {
  if (!std::getline(in, line.text)) return false;
  ++line.number;
  if (!line.text.empty() && line.text.back() == '\r') line.text.pop_back();
  return true;
}

/// Parses "# key=value" comment lines; returns false if the comment carries
/// no metadata.
inline bool parse_metadata(std::string_view comment, std::string& key, std::string& value) {
  comment.remove_prefix(1);
  comment = trim(comment);
  const auto eq = comment.find('=');
  if (eq == std::string_view::npos) return false;
  key = std::string(trim(comment.substr(0, eq)));
  value = std::string(trim(comment.substr(eq + 1)));
  return !key.empty();
}

}  // namespace steer::csv
