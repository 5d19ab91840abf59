#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fpchain/error.hpp"

namespace fpchain::detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::pair<std::string_view, std::string_view> split_key_value(std::string_view token) {
  const auto eq = token.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorCode::Parse, "expected key=value, got '" + std::string(token) + "'");
  }
  return {trim(token.substr(0, eq)), trim(token.substr(eq + 1))};
}

inline std::int64_t parse_int(std::string_view s, const char* what) {
  s = trim(s);
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    fail(ErrorCode::Parse, std::string("invalid integer for ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s, const char* what) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    fail(ErrorCode::Parse, std::string("invalid unsigned integer for ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

inline double parse_double(std::string_view s, const char* what) {
  const std::string copy(trim(s));
  try {
    std::size_t used = 0;
    const double v = std::stod(copy, &used);
    if (used != copy.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::Parse, std::string("invalid number for ") + what + ": '" + copy + "'");
  }
}

}  // namespace fpchain::detail
