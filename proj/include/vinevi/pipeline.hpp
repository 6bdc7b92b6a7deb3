#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "vinevi/classification.hpp"
#include "vinevi/metrics.hpp"
#include "vinevi/sampling.hpp"
#include "vinevi/traffic_class.hpp"

namespace vinevi::pcap {
class PacketSource;
}

namespace vinevi::pipeline {

struct PipelineConfig {
  // Exactly one source.
  std::string pcap_path;
  bool pace_replay = false;
  std::string live_interface;

  // Exactly one classifier.
  std::string model_path;
  bool use_heuristic = false;

  SamplingPolicy sampling = SamplingPolicy::all();
  std::chrono::nanoseconds window = std::chrono::seconds(10);
  uint64_t limit = 0;  // stop after this many sampled packets; 0 = no cap

  std::string listen;  // "host:port"; empty disables the endpoint
  std::string push_url;
  std::string push_job = "vinevi";
  std::chrono::nanoseconds push_interval = std::chrono::seconds(10);

  int workers = 1;
  size_t queue_capacity = 64;
  double min_confidence = 0.0;

  void validate() const;  // throws ConfigError
};

struct RunSummary {
  uint64_t packets_seen = 0;
  uint64_t packets_sampled = 0;
  std::array<uint64_t, kTrafficClassCount> class_counts{};
  double mean_latency_ms = 0.0;
  double max_latency_ms = 0.0;
  bool truncated = false;  // the source died mid-stream; counts are partial
};

// Source -> sampler -> bounded queue -> classification workers -> gauge
// registry. The scrape endpoint, pusher and host sampler start with run()
// and keep serving afterwards (daemon behavior) until stop_services() or
// destruction.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);
  ~Pipeline();

  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  // Consumes the source to exhaustion (or until shutdown). Each sampled
  // packet is classified and recorded exactly once. `on_result` is called
  // serially per classified packet when provided.
  RunSummary run(
      std::function<void(uint64_t index, const cls::ClassificationResult&)> on_result = {});

  // Graceful drain; idempotent; a no-op unless a run is in progress.
  void shutdown();

  // Stops endpoint/pusher/host sampler if they are up.
  void stop_services();

  metrics::GaugeRegistry& registry() { return *registry_; }
  const PipelineConfig& config() const { return cfg_; }
  int endpoint_port() const;  // -1 when no endpoint is serving

 private:
  struct Services;

  PipelineConfig cfg_;
  std::unique_ptr<metrics::GaugeRegistry> registry_;
  std::unique_ptr<Services> services_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stop_requested_{false};
  pcap::PacketSource* active_source_ = nullptr;
  std::mutex source_mu_;
};

}  // namespace vinevi::pipeline
