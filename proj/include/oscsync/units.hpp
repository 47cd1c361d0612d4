#pragma once

// Parsing of command-line quantities: frequencies with Hz/kHz/MHz/GHz
// suffixes, durations with s/ms/us/ns/ps suffixes, lists and ranges.

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oscsync {

namespace detail {

struct UnitScale {
  std::string_view suffix;
  double scale;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

inline double parse_scaled(std::string_view text, std::initializer_list<UnitScale> units,
                           const char* what) {
  std::string_view s = trim(text);
  double scale = 1.0;
  // longest suffix first, so "MHz" is not read as "Hz"
  std::size_t best = 0;
  for (const auto& u : units)
    if (u.suffix.size() > best && s.size() > u.suffix.size() && s.ends_with(u.suffix)) {
      best = u.suffix.size();
      scale = u.scale;
    }
  s = trim(s.substr(0, s.size() - best));
  const std::string number(s);
  char* end = nullptr;
  const double v = std::strtod(number.c_str(), &end);
  if (number.empty() || end != number.c_str() + number.size() || !std::isfinite(v))
    throw std::invalid_argument(std::string("invalid ") + what + " '" + std::string(text) + "'");
  return v * scale;
}

}  // namespace detail

/// "600e6", "600MHz", "600 MHz", "0.6GHz" -> Hz.
inline double parse_frequency(std::string_view text) {
  return detail::parse_scaled(text, {{"Hz", 1.0}, {"kHz", 1e3}, {"MHz", 1e6}, {"GHz", 1e9}},
                              "frequency");
}

/// "5e-7", "0.5us", "0.5µs", "500ns" -> seconds.
inline double parse_duration(std::string_view text) {
  return detail::parse_scaled(
      text, {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"µs", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}},
      "duration");
}

inline double parse_plain(std::string_view text) { return detail::parse_scaled(text, {}, "number"); }

/// Comma-separated list, or an inclusive range "start:stop:step".
template <class Parse>
std::vector<double> parse_values(std::string_view text, Parse parse) {
  std::vector<double> out;
  if (text.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i)
      if (i == text.size() || text[i] == ':') {
        parts.push_back(text.substr(start, i - start));
        start = i + 1;
      }
    if (parts.size() != 3) throw std::invalid_argument("range must be start:stop:step");
    const double a = parse(parts[0]), b = parse(parts[1]), step = parse(parts[2]);
    if (!(step > 0.0) || b < a) throw std::invalid_argument("range needs step > 0 and stop >= start");
    const double span = (b - a) / step;
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    if (n > 10'000'000) throw std::invalid_argument("range has too many points");
    for (std::size_t i = 0; i < n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i)
    if (i == text.size() || text[i] == ',') {
      out.push_back(parse(text.substr(start, i - start)));
      start = i + 1;
    }
  return out;
}

/// "200x200" -> {200, 200}; "50" -> {50, 50}.
inline std::pair<std::size_t, std::size_t> parse_grid(std::string_view text) {
  auto count = [&](std::string_view s) {
    const double v = parse_plain(s);
    if (!(v >= 1.0) || v != std::floor(v)) throw std::invalid_argument("grid size must be a positive integer");
    return static_cast<std::size_t>(v);
  };
  const auto x = text.find('x');
  if (x == std::string_view::npos) {
    const std::size_t n = count(text);
    return {n, n};
  }
  return {count(text.substr(0, x)), count(text.substr(x + 1))};
}

}  // namespace oscsync
