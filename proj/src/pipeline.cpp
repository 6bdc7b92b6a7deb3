#include "vinevi/pipeline.hpp"

#include <condition_variable>
#include <thread>
#include <vector>

#include "vinevi/bounded_queue.hpp"
#include "vinevi/exposer.hpp"
#include "vinevi/host_stats.hpp"
#include "vinevi/packet_source.hpp"

namespace vinevi::pipeline {

void PipelineConfig::validate() const {
  const int sources = int(!pcap_path.empty()) + int(!live_interface.empty());
  if (sources != 1)
    throw ConfigError("exactly one packet source (pcap file or interface) is required");
  const int classifiers = int(!model_path.empty()) + int(use_heuristic);
  if (classifiers != 1)
    throw ConfigError("exactly one classifier (model file or heuristic) is required");
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  if (window <= std::chrono::nanoseconds::zero())
    throw ConfigError("window length must be positive");
  if (min_confidence < 0.0 || min_confidence > 1.0)
    throw ConfigError("min confidence must be within [0, 1]");
}

namespace {

// Refreshes host gauges in the background; collect_host itself blocks for
// its sampling spacing.
struct HostSampler {
  metrics::GaugeRegistry& registry;
  std::thread thread;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;

  explicit HostSampler(metrics::GaugeRegistry& reg) : registry(reg) {
    thread = std::thread([this] { loop(); });
  }
  ~HostSampler() {
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    cv.notify_all();
    thread.join();
  }
  void loop() {
    while (true) {
      try {
        registry.set_host_metrics(metrics::collect_host());
      } catch (const Unsupported&) {
        registry.set_host_metrics(std::nullopt);
        return;  // no procfs here; the host families stay absent
      }
      std::unique_lock lock(mu);
      if (cv.wait_for(lock, std::chrono::seconds(2), [this] { return stopping; }))
        return;
    }
  }
};

}  // namespace

struct Pipeline::Services {
  std::unique_ptr<metrics::MetricsServer> server;
  std::unique_ptr<metrics::MetricsPusher> pusher;
  std::unique_ptr<HostSampler> host_sampler;
};

Pipeline::Pipeline(PipelineConfig cfg)
    : cfg_(std::move(cfg)), services_(std::make_unique<Services>()) {
  cfg_.validate();
  registry_ = std::make_unique<metrics::GaugeRegistry>(
      cfg_.window, metrics::GaugeRegistry::clock::now());
}

Pipeline::~Pipeline() { stop_services(); }

int Pipeline::endpoint_port() const {
  if (!services_->server || !services_->server->running()) return -1;
  return services_->server->port();
}

void Pipeline::stop_services() {
  if (services_->pusher) services_->pusher->stop();
  services_->host_sampler.reset();
  if (services_->server) services_->server->stop();
}

namespace {
struct QueuedPacket {
  uint64_t index = 0;
  pcap::RawPacket pkt;
};
}  // namespace

RunSummary Pipeline::run(
    std::function<void(uint64_t, const cls::ClassificationResult&)> on_result) {
  stop_requested_.store(false);
  running_.store(true);
  struct RunningGuard {
    std::atomic<bool>& flag;
    ~RunningGuard() { flag.store(false); }
  } guard{running_};

  // Source and classifier problems surface here, before any thread starts.
  std::unique_ptr<pcap::PacketSource> source;
  const bool file_source = !cfg_.pcap_path.empty();
  if (file_source)
    source = std::make_unique<pcap::FileReplaySource>(cfg_.pcap_path, cfg_.pace_replay);
  else
    source = pcap::open_live_capture(cfg_.live_interface);
  {
    std::lock_guard lock(source_mu_);
    active_source_ = source.get();
  }

  std::unique_ptr<cls::Classifier> classifier;
  if (!cfg_.model_path.empty())
    classifier = std::make_unique<cls::ModelClassifier>(nn::load_model(cfg_.model_path));
  else
    classifier = std::make_unique<cls::HeuristicClassifier>(source->link_type());

  if (!cfg_.listen.empty() && !services_->server) {
    const size_t colon = cfg_.listen.rfind(':');
    if (colon == std::string::npos)
      throw ConfigError("listen address must be host:port");
    int port = 0;
    try {
      port = std::stoi(cfg_.listen.substr(colon + 1));
    } catch (...) {
      throw ConfigError("bad listen port in " + cfg_.listen);
    }
    services_->server = std::make_unique<metrics::MetricsServer>(
        *registry_, cfg_.listen.substr(0, colon), port);
    services_->server->start();
    services_->host_sampler = std::make_unique<HostSampler>(*registry_);
  }

  if (!cfg_.push_url.empty() && !services_->pusher) {
    services_->pusher = std::make_unique<metrics::MetricsPusher>(
        *registry_, cfg_.push_url, cfg_.push_job,
        std::chrono::duration_cast<std::chrono::milliseconds>(cfg_.push_interval));
    services_->pusher->start();
  }

  BoundedQueue<QueuedPacket> queue(cfg_.queue_capacity);
  RunSummary summary;

  std::mutex result_mu;
  double latency_sum_ms = 0.0;

  auto worker_fn = [&] {
    while (auto item = queue.pop()) {
      const auto res = classifier->classify(item->pkt);
      const auto now = metrics::GaugeRegistry::clock::now();
      if (res.confidence >= cfg_.min_confidence)
        registry_->record(res.cls, item->pkt.original_len, now);

      const double ms = std::chrono::duration<double, std::milli>(res.latency).count();
      std::lock_guard lock(result_mu);
      summary.class_counts[int(res.cls)] += 1;
      latency_sum_ms += ms;
      summary.max_latency_ms = std::max(summary.max_latency_ms, ms);
      if (on_result) on_result(item->index, res);
    }
  };

  std::vector<std::thread> workers;
  workers.reserve(size_t(cfg_.workers));
  for (int i = 0; i < cfg_.workers; ++i) workers.emplace_back(worker_fn);

  // Reader loop. Sampling time comes from capture timestamps for files so
  // pool policies follow the trace, and from the steady clock for live.
  const auto ts_unit = source->ts_unit();
  const auto live_epoch = std::chrono::steady_clock::now();
  Sampler sampler(cfg_.sampling);
  uint64_t index = 0;

  try {
    while (!stop_requested_.load(std::memory_order_relaxed)) {
      auto pkt = source->next();
      if (!pkt) break;
      summary.packets_seen += 1;

      const std::chrono::nanoseconds now =
          file_source
              ? std::chrono::nanoseconds(pcap::packet_time_ns(*pkt, ts_unit))
              : std::chrono::steady_clock::now() - live_epoch;

      if (sampler.should_sample(index, now)) {
        if (file_source) {
          if (!queue.push({index, std::move(*pkt)})) break;  // queue closed
          summary.packets_sampled += 1;
        } else {
          if (queue.try_push({index, std::move(*pkt)}))
            summary.packets_sampled += 1;
          else
            registry_->add_dropped();
        }
        if (cfg_.limit != 0 && summary.packets_sampled >= cfg_.limit) break;
      }
      ++index;
    }
  } catch (const Truncated&) {
    summary.truncated = true;
  }

  queue.close();
  for (std::thread& w : workers) w.join();
  {
    std::lock_guard lock(source_mu_);
    active_source_ = nullptr;
  }

  // Close the final window so its counts become scrapeable immediately.
  registry_->close_window(metrics::GaugeRegistry::clock::now());

  uint64_t classified = 0;
  for (uint64_t c : summary.class_counts) classified += c;
  if (classified > 0) summary.mean_latency_ms = latency_sum_ms / double(classified);
  return summary;
}

void Pipeline::shutdown() {
  if (!running_.load()) return;
  stop_requested_.store(true);
  std::lock_guard lock(source_mu_);
  if (active_source_) active_source_->interrupt();
}

}  // namespace vinevi::pipeline
