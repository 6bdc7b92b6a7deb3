#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace vinevi {

// Parses "250ms", "10s", "1.5m", "2h", "100us", "50ns" into nanoseconds.
// A bare number is taken as seconds. Throws ConfigError on anything else.
std::chrono::nanoseconds parse_duration(std::string_view text);

std::string format_duration(std::chrono::nanoseconds d);

}  // namespace vinevi
