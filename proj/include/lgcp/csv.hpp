#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lgcp/error.hpp"

namespace lgcp {

/// Result of parsing one CSV cell.
template <typename T>
struct Parsed {
  std::optional<T> value;

  template <typename MessageFn>
  T value_or_throw(MessageFn&& message) const {
    if (!value) throw InputError(message());
    return *value;
  }
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline Parsed<std::int64_t> parse_integer(std::string_view s) {
  s = trim(s);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return {};
  return {v};
}

inline Parsed<double> parse_real(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return {};
  return {v};
}

/// Minimal comma-separated reader: no quoting, skips blank lines and lines
/// starting with '#', tracks 1-based line numbers.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  bool next(std::vector<std::string>& cells) {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      const auto body = trim(text);
      if (body.empty() || body.front() == '#') continue;
      cells.clear();
      std::size_t start = 0;
      while (true) {
        const auto comma = body.find(',', start);
        cells.emplace_back(trim(body.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
      }
      return true;
    }
    return false;
  }

  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_ = 0;
};

}  // namespace lgcp
