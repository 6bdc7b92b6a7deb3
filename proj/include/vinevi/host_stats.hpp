#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

#include "vinevi/errors.hpp"
#include "vinevi/metrics.hpp"

namespace vinevi::metrics {

// Aggregate jiffy counters from the "cpu " line of /proc/stat.
struct CpuTimes {
  uint64_t busy = 0;
  uint64_t total = 0;
};

std::optional<CpuTimes> parse_cpu_line(std::string_view proc_stat_text);

// 100 * (busy_b - busy_a) / (total_b - total_a), clamped to [0, 100].
double cpu_percent(const CpuTimes& a, const CpuTimes& b);

struct MemInfo {
  uint64_t total_bytes = 0;
  uint64_t available_bytes = 0;
};

std::optional<MemInfo> parse_meminfo(std::string_view meminfo_text);

// Two /proc/stat samples `spacing` apart plus /proc/meminfo. Throws
// Unsupported when the procfs files are missing or unreadable.
HostMetrics collect_host(const std::filesystem::path& proc_root = "/proc",
                         std::chrono::milliseconds spacing = std::chrono::milliseconds(100));

// Process CPU clock (utime+stime of /proc/self/stat), for the benchmark's
// sustained-load sampling.
struct ProcessCpuSample {
  uint64_t ticks = 0;
  std::chrono::steady_clock::time_point at{};
};

std::optional<ProcessCpuSample> sample_process_cpu(
    const std::filesystem::path& proc_root = "/proc");

// Share of a single core, in [0, 100].
double process_cpu_percent(const ProcessCpuSample& a, const ProcessCpuSample& b,
                           long ticks_per_second);

}  // namespace vinevi::metrics
