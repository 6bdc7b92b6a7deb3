// vinevi: node-embedded traffic monitoring agent.
//
// Subcommands: monitor (daemon), classify (one-shot), dataset (image
// generation), bench (latency/CPU harness), model (inspection, fixtures).
// Exit codes: 0 success, 1 runtime failure, 2 usage or config failure.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "vinevi/bench.hpp"
#include "vinevi/classification.hpp"
#include "vinevi/exposer.hpp"
#include "vinevi/fixtures.hpp"
#include "vinevi/forward.hpp"
#include "vinevi/model.hpp"
#include "vinevi/packet_source.hpp"
#include "vinevi/pipeline.hpp"
#include "vinevi/time_util.hpp"
#include "vinevi/vision.hpp"

namespace fs = std::filesystem;
using namespace vinevi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct SourceFlags {
  std::string pcap;
  std::string iface;
  bool pace = false;
};

struct ClassifierFlags {
  std::string model;
  bool heuristic = false;
};

struct CommonFlags {
  std::string sample = "all";
  std::string window = "10s";
  uint64_t limit = 0;
  int workers = 1;
};

void add_source_flags(CLI::App* cmd, SourceFlags& flags) {
  cmd->add_option("--pcap", flags.pcap, "replay packets from a capture file");
  cmd->add_option("--iface", flags.iface, "capture live from an interface");
  cmd->add_flag("--pace", flags.pace, "replay at capture timing instead of full speed");
}

void add_classifier_flags(CLI::App* cmd, ClassifierFlags& flags) {
  cmd->add_option("--model", flags.model, "classify with a .vnn model file");
  cmd->add_flag("--heuristic", flags.heuristic, "classify with the port-table baseline");
}

pipeline::PipelineConfig build_config(const SourceFlags& src, const ClassifierFlags& clf,
                                      const CommonFlags& common) {
  pipeline::PipelineConfig cfg;
  cfg.pcap_path = src.pcap;
  cfg.pace_replay = src.pace;
  cfg.live_interface = src.iface;
  cfg.model_path = clf.model;
  cfg.use_heuristic = clf.heuristic;
  cfg.sampling = pipeline::SamplingPolicy::parse(common.sample);
  cfg.window = parse_duration(common.window);
  cfg.limit = common.limit;
  cfg.workers = common.workers;
  cfg.validate();
  return cfg;
}

std::string summary_line(const pipeline::RunSummary& s) {
  std::string out = "summary: packets=" + std::to_string(s.packets_seen) +
                    " sampled=" + std::to_string(s.packets_sampled);
  for (int i = 0; i < kTrafficClassCount; ++i)
    out += " " + std::string(kTrafficClassNames[i]) + "=" +
           std::to_string(s.class_counts[i]);
  char buf[64];
  std::snprintf(buf, sizeof(buf), " mean_ms=%.3f max_ms=%.3f", s.mean_latency_ms,
                s.max_latency_ms);
  out += buf;
  if (s.truncated) out += " truncated=1";
  return out;
}

// Startup problems exit 2, mid-run problems exit 1.
int classify_error(const std::exception& e, bool started) {
  std::cerr << "error: " << e.what() << "\n";
  return started ? kExitRuntime : kExitConfig;
}

// ---- monitor ---------------------------------------------------------------

int cmd_monitor(const SourceFlags& src, const ClassifierFlags& clf,
                const CommonFlags& common, const std::string& listen,
                const std::string& push_url, const std::string& job,
                const std::string& push_interval) {
  pipeline::PipelineConfig cfg = build_config(src, clf, common);
  cfg.listen = listen;
  cfg.push_url = push_url;
  cfg.push_job = job;
  cfg.push_interval = parse_duration(push_interval);

  pipeline::Pipeline pipe(cfg);

  sigset_t sigs;
  sigemptyset(&sigs);
  sigaddset(&sigs, SIGINT);
  sigaddset(&sigs, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &sigs, nullptr);

  std::cout << "vinevi monitor starting\n"
            << "  source: " << (src.pcap.empty() ? "iface:" + src.iface : "pcap:" + src.pcap)
            << (src.pace ? " (paced)" : "") << "\n"
            << "  classifier: " << (clf.heuristic ? "heuristic" : clf.model) << "\n"
            << "  listen: " << listen << "\n"
            << "  window: " << common.window << ", sample: " << common.sample << "\n";
  std::cout.flush();

  std::atomic<bool> done{false};
  pipeline::RunSummary summary;
  std::exception_ptr run_error;
  std::thread runner([&] {
    try {
      summary = pipe.run();
    } catch (...) {
      run_error = std::current_exception();
    }
    done.store(true);
  });

  // Announce the bound port once the endpoint is up (matters for port 0).
  for (int i = 0; i < 100 && !done.load(); ++i) {
    if (pipe.endpoint_port() > 0) {
      std::cout << "serving metrics on port " << pipe.endpoint_port() << std::endl;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }

  auto wait_signal = [&sigs](bool forever, std::atomic<bool>& until) {
    timespec tick{0, 200 * 1000 * 1000};
    while (forever || !until.load()) {
      const int sig = sigtimedwait(&sigs, nullptr, &tick);
      if (sig == SIGINT || sig == SIGTERM) return true;
    }
    return false;
  };

  // Phase 1: wait for either a signal or the source running dry.
  const bool signaled_early = wait_signal(false, done);
  if (signaled_early) pipe.shutdown();
  runner.join();

  if (run_error) {
    try {
      std::rethrow_exception(run_error);
    } catch (const ConfigError& e) {
      return classify_error(e, false);
    } catch (const Error& e) {
      return classify_error(e, false);  // startup failure: source/model/bind
    }
  }

  std::cout << summary_line(summary) << std::endl;
  if (summary.truncated) {
    pipe.stop_services();
    return kExitRuntime;
  }

  // Phase 2: the capture ended cleanly; keep the endpoint scrapeable until
  // the operator stops the daemon.
  if (!signaled_early) {
    std::atomic<bool> never{false};
    wait_signal(true, never);
  }

  std::cout << "--- final metrics ---\n"
            << pipe.registry().render(metrics::GaugeRegistry::clock::now());
  pipe.stop_services();
  return kExitOk;
}

// ---- classify ----------------------------------------------------------------

int cmd_classify(const SourceFlags& src, const ClassifierFlags& clf,
                 const CommonFlags& common) {
  pipeline::PipelineConfig cfg = build_config(src, clf, common);

  pipeline::Pipeline pipe(cfg);
  bool started = false;
  try {
    started = true;
    const auto summary =
        pipe.run([](uint64_t index, const cls::ClassificationResult& res) {
          std::printf("%llu %s %.2f %.3f\n", (unsigned long long)index,
                      std::string(to_string(res.cls)).c_str(), res.confidence,
                      std::chrono::duration<double, std::milli>(res.latency).count());
        });
    std::cout << summary_line(summary) << std::endl;
    return summary.truncated ? kExitRuntime : kExitOk;
  } catch (const Error& e) {
    return classify_error(e, false);
  }
  (void)started;
}

// ---- dataset ----------------------------------------------------------------

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= uint8_t(c);
    h *= 1099511628211ull;
  }
  return h;
}

struct SplitRatios {
  double train = 1.0, val = 0.0, test = 0.0;
};

SplitRatios parse_split(const std::string& text) {
  SplitRatios r;
  double parts[3] = {0, 0, 0};
  int n = 0;
  size_t pos = 0;
  while (n < 3 && pos <= text.size()) {
    size_t next = text.find_first_of("/,", pos);
    if (next == std::string::npos) next = text.size();
    try {
      parts[n++] = std::stod(text.substr(pos, next - pos));
    } catch (...) {
      throw ConfigError("bad split ratio: " + text);
    }
    pos = next + 1;
  }
  if (n != 3) throw ConfigError("split needs three ratios, e.g. 0.8/0.1/0.1");
  r.train = parts[0];
  r.val = parts[1];
  r.test = parts[2];
  if (r.train < 0 || r.val < 0 || r.test < 0 ||
      std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw ConfigError("split ratios must be non-negative and sum to 1");
  return r;
}

const char* pick_split(const SplitRatios& r, uint64_t seed, std::string_view stem,
                       uint64_t index) {
  nn::SplitMix64 rng(seed ^ fnv1a(stem) ^ (index * 0x9e3779b97f4a7c15ull));
  const double x = rng.unit();
  if (x < r.train) return "train";
  if (x < r.train + r.val) return "val";
  return "test";
}

int cmd_dataset(const std::vector<std::string>& inputs, const std::string& out_dir,
                const std::string& format_name, const std::string& split_text,
                uint64_t seed, const std::string& sample, uint64_t limit) {
  if (inputs.empty()) {
    std::cerr << "error: at least one --input <pcap>=<label> is required\n";
    return kExitConfig;
  }

  vision::ImageFormat format;
  if (format_name == "ppm") format = vision::ImageFormat::ppm;
  else if (format_name == "pgm") format = vision::ImageFormat::pgm;
  else {
    std::cerr << "error: format must be ppm or pgm\n";
    return kExitConfig;
  }
  const char* ext = format_name == "ppm" ? ".ppm" : ".pgm";

  SplitRatios ratios;
  pipeline::SamplingPolicy policy;
  std::vector<std::pair<fs::path, TrafficClass>> entries;
  try {
    ratios = parse_split(split_text);
    policy = pipeline::SamplingPolicy::parse(sample);
    for (const std::string& item : inputs) {
      const size_t eq = item.rfind('=');
      if (eq == std::string::npos)
        throw ConfigError("input must be <pcap>=<label>: " + item);
      const std::string label = item.substr(eq + 1);
      const auto cls = traffic_class_from_name(label);
      if (!cls) throw ConfigError("unknown traffic class label: " + label);
      entries.emplace_back(item.substr(0, eq), *cls);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  nlohmann::json manifest;
  manifest["format"] = format_name;
  manifest["seed"] = seed;
  manifest["split_ratios"] = {{"train", ratios.train}, {"val", ratios.val},
                              {"test", ratios.test}};
  manifest["inputs"] = nlohmann::json::array();
  manifest["errors"] = nlohmann::json::array();

  std::map<std::string, uint64_t> class_counts;
  for (auto name : kTrafficClassNames) class_counts[std::string(name)] = 0;
  std::map<std::string, uint64_t> split_counts{{"train", 0}, {"val", 0}, {"test", 0}};
  uint64_t total = 0;

  for (const auto& [path, cls] : entries) {
    nlohmann::json entry;
    entry["path"] = path.string();
    entry["label"] = std::string(to_string(cls));
    uint64_t seen = 0, written = 0;

    try {
      pcap::FileReplaySource source(path);
      pipeline::Sampler sampler(policy);
      const std::string stem = path.stem().string();
      const auto unit = source.ts_unit();

      while (auto pkt = source.next()) {
        const uint64_t index = seen++;
        if (!sampler.should_sample(
                index, std::chrono::nanoseconds(pcap::packet_time_ns(*pkt, unit))))
          continue;
        if (limit != 0 && written >= limit) break;
        try {
          const auto img = vision::packet_to_image(pkt->bytes);
          const char* split = pick_split(ratios, seed, stem, index);
          const fs::path dir =
              fs::path(out_dir) / split / std::string(to_string(cls));
          fs::create_directories(dir);
          const fs::path file = dir / (stem + "_" + std::to_string(index) + ext);
          vision::write_image(img, file, format);
          ++written;
          ++total;
          class_counts[std::string(to_string(cls))] += 1;
          split_counts[split] += 1;
        } catch (const Error& e) {
          manifest["errors"].push_back(path.string() + "[" + std::to_string(index) +
                                       "]: " + e.what());
        }
      }
    } catch (const Error& e) {
      manifest["errors"].push_back(path.string() + ": " + e.what());
    }

    entry["packets_seen"] = seen;
    entry["images_written"] = written;
    manifest["inputs"].push_back(std::move(entry));
  }

  manifest["class_counts"] = class_counts;
  manifest["split_counts"] = split_counts;
  manifest["total_images"] = total;

  try {
    fs::create_directories(out_dir);
    std::ofstream mf(fs::path(out_dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
    if (!mf) throw IoError("cannot write manifest");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::cout << "dataset: " << total << " images under " << out_dir << " ("
            << manifest["errors"].size() << " errors)\n";
  return kExitOk;
}

// ---- bench -------------------------------------------------------------------

std::vector<std::vector<uint8_t>> synth_packets(uint64_t seed) {
  std::vector<std::vector<uint8_t>> packets;
  nn::SplitMix64 rng(seed);
  for (size_t len : {64ul, 128ul, 256ul, 512ul, 1024ul, 1400ul}) {
    std::vector<uint8_t> p(len);
    for (auto& b : p) b = uint8_t(rng.next());
    packets.push_back(std::move(p));
  }
  return packets;
}

int cmd_bench(const std::vector<std::string>& models, int iterations, int warmup,
              const std::string& cpu_duration, const std::string& sample_period,
              uint64_t seed, const std::string& json_path, const std::string& csv_path) {
  if (models.empty()) {
    std::cerr << "error: at least one --model is required\n";
    return kExitConfig;
  }

  bench::CompareReport report;
  try {
    report = bench::compare_models(models, synth_packets(seed), iterations, warmup);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::cout << bench::to_table(report);
  auto j = bench::to_json(report);

  const auto duration = parse_duration(cpu_duration);
  if (duration.count() > 0) {
    const auto period = parse_duration(sample_period);
    const auto packets = synth_packets(seed);
    std::vector<vision::PacketImage> images;
    for (const auto& p : packets) images.push_back(vision::packet_to_image(p));

    for (auto& row : j["rows"]) {
      if (row["status"] != "ok") continue;
      const std::string path = row["path"];
      try {
        nn::Model model = nn::load_model(path);
        const auto cpu = bench::measure_cpu(
            [&model](const vision::PacketImage& img) {
              const Tensor3 t =
                  vision::normalize(img, model.norm_mean, model.norm_std);
              volatile double keep = nn::forward(model, t)[0];
              (void)keep;
            },
            images, duration, period, "/proc", model.name);
        std::printf("%-14s cpu over %.1fs: mean %.1f%% (%zu samples)\n",
                    model.name.c_str(), cpu.duration_s, cpu.mean_cpu_percent,
                    cpu.samples.size());
        row["cpu"] = {{"duration_s", cpu.duration_s},
                      {"mean_cpu_percent", cpu.mean_cpu_percent},
                      {"samples", cpu.samples.size()}};
      } catch (const Error& e) {
        row["cpu"] = {{"error", e.what()}};
      }
    }
  }

  try {
    if (!json_path.empty()) {
      std::ofstream f(json_path);
      f << j.dump(2) << "\n";
      if (!f) throw IoError("cannot write " + json_path);
    }
    if (!csv_path.empty()) {
      std::ofstream f(csv_path);
      f << bench::timings_csv(report);
      if (!f) throw IoError("cannot write " + csv_path);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  return kExitOk;  // per-model errors are data, not a failed run
}

// ---- model -------------------------------------------------------------------

int cmd_model_info(const std::string& path) {
  nn::Model model;
  try {
    model = nn::load_model(path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::cout << "model: " << model.name << "\n";
  std::cout << "labels:";
  for (const auto& l : model.class_labels) std::cout << " " << l;
  std::cout << "\n";
  std::printf("normalization: mean=[%g,%g,%g] std=[%g,%g,%g]\n", model.norm_mean[0],
              model.norm_mean[1], model.norm_mean[2], model.norm_std[0],
              model.norm_std[1], model.norm_std[2]);

  std::printf("%-4s %-18s %-14s %-14s %12s %14s\n", "#", "kind", "in", "out", "params",
              "flops");
  long long params_total = 0;
  const long long flops_sum = nn::flops_total(model);
  for (size_t i = 0; i < model.layers.size(); ++i) {
    const nn::Layer& l = model.layers[i];
    char in_s[32], out_s[32];
    std::snprintf(in_s, sizeof(in_s), "%dx%dx%d", l.in_shape.c, l.in_shape.h,
                  l.in_shape.w);
    std::snprintf(out_s, sizeof(out_s), "%dx%dx%d", l.out_shape.c, l.out_shape.h,
                  l.out_shape.w);
    const long long p = nn::count_params(l);
    params_total += p;
    std::printf("%-4zu %-18s %-14s %-14s %12lld %14lld\n", i, nn::to_string(l.kind),
                in_s, out_s, p, nn::layer_flops(l, l.in_shape));
  }
  std::printf("totals: params=%lld flops=%lld\n", params_total, flops_sum);
  std::printf("last_layer_complexity: %.6f%%\n", nn::last_layer_complexity(model));
  return kExitOk;
}

int cmd_make_fixtures(const std::string& out_dir) {
  try {
    const auto paths = nn::write_fixture_models(out_dir);
    for (const auto& p : paths) std::cout << "wrote " << p.string() << "\n";
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vinevi: packet classification monitoring agent"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI/TOML file");
  // Lets `vinevi classify --config file` reach the app-level --config.
  app.fallthrough();

  // monitor
  SourceFlags mon_src;
  ClassifierFlags mon_clf;
  CommonFlags mon_common;
  std::string mon_listen = "127.0.0.1:9155";
  std::string mon_push_url, mon_job = "vinevi", mon_push_interval = "10s";
  auto* mon = app.add_subcommand("monitor", "run the monitoring daemon");
  add_source_flags(mon, mon_src);
  add_classifier_flags(mon, mon_clf);
  mon->add_option("--sample", mon_common.sample, "all | 1/N | pool:<period>:<budget>");
  mon->add_option("--window", mon_common.window, "gauge window length (default 10s)");
  mon->add_option("--limit", mon_common.limit, "stop after N classified packets");
  mon->add_option("--workers", mon_common.workers, "classification worker threads");
  mon->add_option("--listen", mon_listen, "metrics endpoint address (host:port)");
  mon->add_option("--push-url", mon_push_url, "push metrics to this collector");
  mon->add_option("--job", mon_job, "job name used in the push path");
  mon->add_option("--push-interval", mon_push_interval, "delay between pushes");

  // classify
  SourceFlags cls_src;
  ClassifierFlags cls_clf;
  CommonFlags cls_common;
  auto* clsc = app.add_subcommand("classify", "print one line per classified packet");
  add_source_flags(clsc, cls_src);
  add_classifier_flags(clsc, cls_clf);
  clsc->add_option("--sample", cls_common.sample, "all | 1/N | pool:<period>:<budget>");
  clsc->add_option("--window", cls_common.window, "gauge window length");
  clsc->add_option("--limit", cls_common.limit, "stop after N classified packets");

  // dataset
  std::vector<std::string> ds_inputs;
  std::string ds_out = "dataset", ds_format = "ppm", ds_split = "1/0/0",
              ds_sample = "all";
  uint64_t ds_seed = 1, ds_limit = 0;
  auto* ds = app.add_subcommand(
      "dataset", "turn captures into labeled image trees (PPM/PGM; convert to "
                 "PNG offline if a trainer needs it)");
  ds->add_option("--input", ds_inputs, "<pcap>=<label>, repeatable");
  ds->add_option("--out", ds_out, "output directory");
  ds->add_option("--format", ds_format, "ppm or pgm");
  ds->add_option("--split", ds_split, "train/val/test ratios, e.g. 0.8/0.1/0.1");
  ds->add_option("--seed", ds_seed, "split assignment seed");
  ds->add_option("--sample", ds_sample, "sampling policy");
  ds->add_option("--limit", ds_limit, "max images per input pcap");

  // bench
  std::vector<std::string> bn_models;
  int bn_iterations = 30, bn_warmup = 10;
  std::string bn_duration = "0s", bn_period = "200ms", bn_json, bn_csv;
  uint64_t bn_seed = 1;
  auto* bn = app.add_subcommand("bench", "compare model prediction latency and cost");
  bn->add_option("--model", bn_models, "model file, repeatable");
  bn->add_option("--iterations", bn_iterations, "timed predictions per model");
  bn->add_option("--warmup", bn_warmup, "unmeasured predictions per model");
  bn->add_option("--duration", bn_duration, "per-model CPU measurement (0 = skip)");
  bn->add_option("--sample-period", bn_period, "CPU sampling period");
  bn->add_option("--seed", bn_seed, "synthetic packet seed");
  bn->add_option("--json", bn_json, "write the report as JSON here");
  bn->add_option("--csv", bn_csv, "write raw iteration timings here");

  // model info / make-fixtures
  auto* model_cmd = app.add_subcommand("model", "model file tools");
  model_cmd->require_subcommand(1);
  std::string info_path;
  auto* info = model_cmd->add_subcommand("info", "print layers, parameters and FLOPs");
  info->add_option("path", info_path, "model file")->required();
  std::string fixtures_out = "models";
  auto* mkfx = model_cmd->add_subcommand("make-fixtures", "write the built-in toy models");
  mkfx->add_option("--out", fixtures_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (mon->parsed())
      return cmd_monitor(mon_src, mon_clf, mon_common, mon_listen, mon_push_url,
                         mon_job, mon_push_interval);
    if (clsc->parsed()) return cmd_classify(cls_src, cls_clf, cls_common);
    if (ds->parsed())
      return cmd_dataset(ds_inputs, ds_out, ds_format, ds_split, ds_seed, ds_sample,
                         ds_limit);
    if (bn->parsed())
      return cmd_bench(bn_models, bn_iterations, bn_warmup, bn_duration, bn_period,
                       bn_seed, bn_json, bn_csv);
    if (model_cmd->parsed()) {
      if (info->parsed()) return cmd_model_info(info_path);
      if (mkfx->parsed()) return cmd_make_fixtures(fixtures_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;  // startup-stage failures
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
