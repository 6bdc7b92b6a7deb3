#include "vinevi/time_util.hpp"

#include <cmath>
#include <cstdlib>

#include "vinevi/errors.hpp"

namespace vinevi {

std::chrono::nanoseconds parse_duration(std::string_view text) {
  if (text.empty()) throw ConfigError("empty duration");

  size_t i = 0;
  while (i < text.size() &&
         (std::isdigit((unsigned char)text[i]) || text[i] == '.' || text[i] == '-'))
    ++i;
  const std::string number(text.substr(0, i));
  const std::string_view unit = text.substr(i);

  char* end = nullptr;
  const double v = std::strtod(number.c_str(), &end);
  if (number.empty() || end != number.c_str() + number.size() || !(v >= 0))
    throw ConfigError("bad duration: " + std::string(text));

  double scale = 1e9;  // bare number = seconds
  if (unit == "ns") scale = 1;
  else if (unit == "us") scale = 1e3;
  else if (unit == "ms") scale = 1e6;
  else if (unit == "s" || unit.empty()) scale = 1e9;
  else if (unit == "m") scale = 60e9;
  else if (unit == "h") scale = 3600e9;
  else throw ConfigError("bad duration unit in: " + std::string(text));

  return std::chrono::nanoseconds(llround(v * scale));
}

std::string format_duration(std::chrono::nanoseconds d) {
  const auto ns = d.count();
  if (ns % 1000000000 == 0) return std::to_string(ns / 1000000000) + "s";
  if (ns % 1000000 == 0) return std::to_string(ns / 1000000) + "ms";
  if (ns % 1000 == 0) return std::to_string(ns / 1000) + "us";
  return std::to_string(ns) + "ns";
}

}  // namespace vinevi
