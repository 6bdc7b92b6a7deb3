#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "vinevi/errors.hpp"
#include "vinevi/metrics.hpp"

namespace vinevi::metrics {

inline constexpr const char* kExpositionContentType = "text/plain; version=0.0.4";

// Serves GET /metrics (rendered exposition) and GET /healthz on a
// background thread. start() throws BindError if the address is taken.
class MetricsServer {
 public:
  MetricsServer(GaugeRegistry& registry, std::string host, int port);
  ~MetricsServer();

  MetricsServer(const MetricsServer&) = delete;
  MetricsServer& operator=(const MetricsServer&) = delete;

  void start();
  void stop();
  bool running() const;
  // Actual port after start(); pass port 0 to bind any free port.
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct PushTarget {
  std::string host;
  int port = 9091;
  std::string base_path;  // usually empty
};

// Accepts "http://host[:port][/base]" or bare "host[:port]".
PushTarget parse_push_url(const std::string& url);

// PUTs the exposition body to <url>/metrics/job/<job> once immediately
// and then every interval. Failures bump the registry's failure gauge and
// the next interval retries; nothing is buffered.
class MetricsPusher {
 public:
  MetricsPusher(GaugeRegistry& registry, std::string url, std::string job,
                std::chrono::milliseconds interval);
  ~MetricsPusher();

  MetricsPusher(const MetricsPusher&) = delete;
  MetricsPusher& operator=(const MetricsPusher&) = delete;

  void start();
  void stop();
  uint64_t attempts() const;
  uint64_t failures() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vinevi::metrics
