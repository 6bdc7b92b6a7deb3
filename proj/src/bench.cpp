#include "vinevi/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include <unistd.h>

#include "vinevi/classification.hpp"
#include "vinevi/host_stats.hpp"
#include "vinevi/model.hpp"

namespace vinevi::bench {

LatencyStats latency_stats_from(std::string name, const std::vector<double>& samples) {
  if (samples.size() < 2)
    throw ConfigError("latency statistics need at least 2 samples");

  LatencyStats s;
  s.name = std::move(name);
  s.n = int(samples.size());

  double sum = 0.0;
  s.min_ms = samples[0];
  s.max_ms = samples[0];
  for (double v : samples) {
    sum += v;
    s.min_ms = std::min(s.min_ms, v);
    s.max_ms = std::max(s.max_ms, v);
  }
  s.mean_ms = sum / double(s.n);

  double sq = 0.0;
  for (double v : samples) sq += (v - s.mean_ms) * (v - s.mean_ms);
  s.std_ms = std::sqrt(sq / double(s.n - 1));
  s.ci95_half_width_ms = 1.96 * s.std_ms / std::sqrt(double(s.n));
  return s;
}

LatencyRun measure_latency(const PredictFn& predict,
                           const std::vector<vision::PacketImage>& images,
                           int iterations, int warmup, std::string name) {
  if (iterations < 2) throw ConfigError("latency measurement needs iterations >= 2");
  if (warmup < 0) throw ConfigError("warmup must be >= 0");
  if (images.empty()) throw ConfigError("latency measurement needs at least one image");

  for (int i = 0; i < warmup; ++i) predict(images[size_t(i) % images.size()]);

  LatencyRun run;
  run.raw_ms.reserve(size_t(iterations));
  for (int i = 0; i < iterations; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    predict(images[size_t(i) % images.size()]);
    const auto t1 = std::chrono::steady_clock::now();
    run.raw_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  run.stats = latency_stats_from(std::move(name), run.raw_ms);
  return run;
}

CpuReport measure_cpu(const PredictFn& predict,
                      const std::vector<vision::PacketImage>& images,
                      std::chrono::nanoseconds duration,
                      std::chrono::nanoseconds sample_period,
                      const std::filesystem::path& proc_root, std::string name) {
  if (sample_period <= std::chrono::nanoseconds::zero())
    throw ConfigError("sample period must be positive");
  if (duration < 2 * sample_period)
    throw ConfigError("duration must cover at least two sample periods");
  if (images.empty()) throw ConfigError("cpu measurement needs at least one image");

  auto first = metrics::sample_process_cpu(proc_root);
  if (!first) throw Unsupported("process CPU accounting needs procfs");
  const long ticks_per_second = sysconf(_SC_CLK_TCK);

  std::atomic<bool> stop{false};
  std::thread loader([&] {
    size_t i = 0;
    while (!stop.load(std::memory_order_relaxed))
      predict(images[i++ % images.size()]);
  });

  CpuReport report;
  report.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  auto prev = *first;
  double mean_sum = 0.0;

  while (std::chrono::steady_clock::now() - start < duration) {
    std::this_thread::sleep_for(sample_period);
    auto cur = metrics::sample_process_cpu(proc_root);
    if (!cur) break;
    const double pct = metrics::process_cpu_percent(prev, *cur, ticks_per_second);
    const double t = std::chrono::duration<double>(cur->at - start).count();
    report.samples.emplace_back(t, pct);
    mean_sum += pct;
    prev = *cur;
  }

  stop.store(true);
  loader.join();

  report.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!report.samples.empty())
    report.mean_cpu_percent = mean_sum / double(report.samples.size());
  return report;
}

CompareReport compare_models(const std::vector<std::string>& model_paths,
                             const std::vector<std::vector<uint8_t>>& packets,
                             int iterations, int warmup) {
  if (model_paths.empty()) throw ConfigError("no models to compare");
  if (packets.empty()) throw ConfigError("no packets to classify");

  std::vector<vision::PacketImage> images;
  images.reserve(packets.size());
  for (const auto& p : packets) images.push_back(vision::packet_to_image(p));

  CompareReport report;
  report.iterations = iterations;
  report.warmup = warmup;

  for (const std::string& path : model_paths) {
    ModelRow row;
    row.path = path;
    try {
      nn::Model model = nn::load_model(path);
      row.name = model.name;
      row.params = nn::count_params(model);
      row.flops = nn::flops_total(model);
      row.last_layer_percent = nn::last_layer_complexity(model);

      // Transform-exclusive: the tensor pipeline after the image exists.
      row.forward = measure_latency(
          [&model](const vision::PacketImage& img) {
            const Tensor3 t = vision::normalize(img, model.norm_mean, model.norm_std);
            volatile double keep = nn::forward(model, t)[0];
            (void)keep;
          },
          images, iterations, warmup, model.name);

      // Transform-inclusive: raw bytes through packet_to_image first.
      size_t pkt_i = 0;
      row.end_to_end = measure_latency(
          [&](const vision::PacketImage&) {
            const auto& bytes = packets[pkt_i++ % packets.size()];
            const auto img = vision::packet_to_image(bytes);
            const Tensor3 t = vision::normalize(img, model.norm_mean, model.norm_std);
            volatile double keep = nn::forward(model, t)[0];
            (void)keep;
          },
          images, iterations, warmup, model.name + "+transform");
    } catch (const Error& e) {
      row.error = e.what();
    }
    report.rows.push_back(std::move(row));
  }

  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ModelRow& a, const ModelRow& b) {
                     if (a.error.empty() != b.error.empty()) return a.error.empty();
                     if (!a.error.empty()) return false;
                     return a.forward.stats.mean_ms < b.forward.stats.mean_ms;
                   });
  return report;
}

namespace {

nlohmann::json stats_json(const LatencyStats& s) {
  return {{"n", s.n},
          {"mean_ms", s.mean_ms},
          {"std_ms", s.std_ms},
          {"min_ms", s.min_ms},
          {"max_ms", s.max_ms},
          {"ci95_half_width_ms", s.ci95_half_width_ms}};
}

}  // namespace

nlohmann::json to_json(const CompareReport& report) {
  nlohmann::json j;
  j["iterations"] = report.iterations;
  j["warmup"] = report.warmup;
  j["rows"] = nlohmann::json::array();
  for (const ModelRow& row : report.rows) {
    nlohmann::json rj;
    rj["path"] = row.path;
    if (!row.error.empty()) {
      rj["status"] = "error";
      rj["error"] = row.error;
    } else {
      rj["status"] = "ok";
      rj["model"] = row.name;
      rj["params"] = row.params;
      rj["flops"] = row.flops;
      rj["last_layer_complexity_percent"] = row.last_layer_percent;
      rj["forward"] = stats_json(row.forward.stats);
      rj["end_to_end"] = stats_json(row.end_to_end.stats);
    }
    j["rows"].push_back(std::move(rj));
  }
  return j;
}

std::string to_table(const CompareReport& report) {
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-14s %6s %10s %10s %10s %12s %14s %8s\n", "model",
                "n", "mean_ms", "std_ms", "ci95_ms", "e2e_mean_ms", "params", "flops%");
  out += line;
  for (const ModelRow& row : report.rows) {
    if (!row.error.empty()) {
      std::snprintf(line, sizeof(line), "%-14s ERROR %s\n", row.path.c_str(),
                    row.error.c_str());
      out += line;
      continue;
    }
    std::snprintf(line, sizeof(line), "%-14s %6d %10.3f %10.3f %10.3f %12.3f %14lld %8.3f\n",
                  row.name.c_str(), row.forward.stats.n, row.forward.stats.mean_ms,
                  row.forward.stats.std_ms, row.forward.stats.ci95_half_width_ms,
                  row.end_to_end.stats.mean_ms, row.params, row.last_layer_percent);
    out += line;
  }
  return out;
}

std::string timings_csv(const CompareReport& report) {
  std::string out = "model,measure,iteration,ms\n";
  char line[128];
  for (const ModelRow& row : report.rows) {
    if (!row.error.empty()) continue;
    for (size_t i = 0; i < row.forward.raw_ms.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s,forward,%zu,%.6f\n", row.name.c_str(), i,
                    row.forward.raw_ms[i]);
      out += line;
    }
    for (size_t i = 0; i < row.end_to_end.raw_ms.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s,end_to_end,%zu,%.6f\n", row.name.c_str(), i,
                    row.end_to_end.raw_ms[i]);
      out += line;
    }
  }
  return out;
}

}  // namespace vinevi::bench
