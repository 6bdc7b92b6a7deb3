#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace vinevi {

// The seven application classes, in wire-name (alphabetical) order.
enum class TrafficClass : int {
  bittorrent = 0,
  browsing,
  dns,
  iot,
  rdp,
  ssh,
  voip,
};

inline constexpr int kTrafficClassCount = 7;

inline constexpr std::array<std::string_view, kTrafficClassCount> kTrafficClassNames = {
    "bittorrent", "browsing", "dns", "iot", "rdp", "ssh", "voip"};

constexpr std::string_view to_string(TrafficClass c) {
  return kTrafficClassNames[int(c)];
}

constexpr std::optional<TrafficClass> traffic_class_from_name(std::string_view name) {
  for (int i = 0; i < kTrafficClassCount; ++i)
    if (kTrafficClassNames[i] == name) return TrafficClass(i);
  return std::nullopt;
}

}  // namespace vinevi
