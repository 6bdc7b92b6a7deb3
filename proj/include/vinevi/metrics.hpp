#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vinevi/traffic_class.hpp"

namespace vinevi::metrics {

struct Sample {
  std::vector<std::pair<std::string, std::string>> labels;  // sorted by key, value
  double value = 0.0;
};

// One gauge family: HELP/TYPE comments plus its samples.
struct Family {
  std::string name;
  std::string help;
  std::vector<Sample> samples;
};

bool valid_metric_name(std::string_view name);
std::string escape_label_value(std::string_view raw);
// Shortest decimal that round-trips; integral values render without a point.
std::string format_value(double v);

// Text exposition format 0.0.4. Families are emitted in alphabetical
// order, each as "# HELP", "# TYPE ... gauge", then one line per sample.
std::string render_exposition(std::vector<Family> families);

struct HostMetrics {
  double cpu_percent = 0.0;
  uint64_t mem_total = 0;
  uint64_t mem_available = 0;
};

// Per-class tumbling-window counters plus host gauges, internally
// synchronized: classification workers record() while scrape and push
// readers take snapshots.
class GaugeRegistry {
 public:
  using clock = std::chrono::steady_clock;

  GaugeRegistry(std::chrono::nanoseconds window, clock::time_point start);

  void record(TrafficClass cls, uint64_t bytes, clock::time_point now);
  void add_dropped(uint64_t n = 1);
  void enable_push_metrics();
  void record_push_result(bool ok);
  void set_host_metrics(std::optional<HostMetrics> host);

  // Force-closes the current window (graceful-shutdown flush).
  void close_window(clock::time_point now);

  struct ClassCounts {
    std::array<uint64_t, kTrafficClassCount> packets{};
    std::array<uint64_t, kTrafficClassCount> bytes{};
  };
  struct Snapshot {
    ClassCounts closed;  // most recently closed window
    uint64_t dropped = 0;
    bool push_enabled = false;
    uint64_t push_failures = 0;
    std::optional<HostMetrics> host;
  };

  Snapshot snapshot(clock::time_point now);
  std::string render(clock::time_point now);
  std::chrono::nanoseconds window() const { return window_; }

 private:
  void roll_locked(clock::time_point now);

  mutable std::mutex mu_;
  std::chrono::nanoseconds window_;
  clock::time_point window_start_;
  ClassCounts current_, previous_;
  uint64_t dropped_ = 0;
  bool push_enabled_ = false;
  uint64_t push_failures_ = 0;
  std::optional<HostMetrics> host_;
};

std::vector<Family> build_families(const GaugeRegistry::Snapshot& snap);

}  // namespace vinevi::metrics
