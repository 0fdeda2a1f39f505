#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace mmdr {

/// Malformed input file; carries the 1-based offending line (0 when not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, const std::string& where = "")
      : std::runtime_error(render(message, line, where)), message_(message), line_(line) {}

  std::size_t line() const { return line_; }
  const std::string& message() const { return message_; }

  /// Same error located in `where` (a file name), rendered as where:line: message.
  ParseError in(const std::string& where) const { return ParseError(message_, line_, where); }

 private:
  static std::string render(const std::string& message, std::size_t line, const std::string& where) {
    std::string loc = where;
    if (line > 0) loc += (where.empty() ? "line " : ":") + std::to_string(line);
    return loc.empty() ? message : loc + ": " + message;
  }

  std::string message_;
  std::size_t line_;
};

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("cannot parse number '" + std::string(text) + "'", line);
  return v;
}

inline std::uint64_t parse_uint(std::string_view text, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("cannot parse non-negative integer '" + std::string(text) + "'", line);
  return v;
}

inline bool parse_bool(std::string_view text, std::size_t line) {
  if (text == "1" || text == "true" || text == "on") return true;
  if (text == "0" || text == "false" || text == "off") return false;
  throw ParseError("cannot parse boolean '" + std::string(text) + "'", line);
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

/// `key = value` lines; blank lines and lines starting with '#' are skipped.
inline std::vector<KeyValue> read_key_values(std::istream& in) {
  std::vector<KeyValue> out;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line);
    KeyValue kv{std::string(trim(text.substr(0, eq))), std::string(trim(text.substr(eq + 1))), line};
    if (kv.key.empty()) throw ParseError("empty key", line);
    if (auto it = seen.find(kv.key); it != seen.end())
      throw ParseError("duplicate key '" + kv.key + "' (first on line " +
                           std::to_string(it->second) + ")",
                       line);
    seen[kv.key] = line;
    out.push_back(std::move(kv));
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view text, std::size_t line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
    if (!piece.empty()) out.push_back(parse_double(piece, line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace mmdr
