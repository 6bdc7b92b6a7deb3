#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vinevi/vision.hpp"

namespace vinevi::bench {

struct LatencyStats {
  std::string name;
  int n = 0;
  double mean_ms = 0.0;
  double std_ms = 0.0;  // sample standard deviation
  double min_ms = 0.0;
  double max_ms = 0.0;
  double ci95_half_width_ms = 0.0;  // 1.96 * std / sqrt(n)
};

// Closed-form stats over a sample list; needs n >= 2.
LatencyStats latency_stats_from(std::string name, const std::vector<double>& samples_ms);

using PredictFn = std::function<void(const vision::PacketImage&)>;

struct LatencyRun {
  LatencyStats stats;
  std::vector<double> raw_ms;
};

// `warmup` unmeasured predictions, then `iterations` timed ones, cycling
// through the image set on a monotonic clock.
LatencyRun measure_latency(const PredictFn& predict,
                           const std::vector<vision::PacketImage>& images,
                           int iterations, int warmup, std::string name = {});

struct CpuReport {
  std::string name;
  double duration_s = 0.0;
  double mean_cpu_percent = 0.0;
  std::vector<std::pair<double, double>> samples;  // (seconds since start, percent)
};

// Runs the predictor in a sustained loop while sampling this process's
// CPU share of one core every sample_period. duration >= 2 * period.
CpuReport measure_cpu(const PredictFn& predict,
                      const std::vector<vision::PacketImage>& images,
                      std::chrono::nanoseconds duration,
                      std::chrono::nanoseconds sample_period,
                      const std::filesystem::path& proc_root = "/proc",
                      std::string name = {});

struct ModelRow {
  std::string path;
  std::string name;
  std::string error;  // empty when the model loaded and ran

  long long params = 0;
  long long flops = 0;
  double last_layer_percent = 0.0;

  LatencyRun forward;     // transform-exclusive (pre-built image)
  LatencyRun end_to_end;  // transform-inclusive (bytes -> image -> scores)
};

struct CompareReport {
  int iterations = 0;
  int warmup = 0;
  std::vector<ModelRow> rows;  // sorted by forward mean, errors last
};

// Loads every model and measures both latencies against the given packet
// payloads. Per-model load errors become error rows; the run continues.
CompareReport compare_models(const std::vector<std::string>& model_paths,
                             const std::vector<std::vector<uint8_t>>& packets,
                             int iterations, int warmup);

nlohmann::json to_json(const CompareReport& report);
std::string to_table(const CompareReport& report);
std::string timings_csv(const CompareReport& report);

}  // namespace vinevi::bench
