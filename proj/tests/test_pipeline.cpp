#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "support/expo_parser.hpp"
#include "support/pcap_synth.hpp"
#include "vinevi/bounded_queue.hpp"
#include "vinevi/pipeline.hpp"
#include "vinevi/time_util.hpp"

using namespace vinevi;
using namespace vinevi::pipeline;
using testsupport::PcapSpec;
using testsupport::encode_pcap;
using testsupport::make_packet;

namespace {

namespace fs = std::filesystem;

fs::path write_pcap(const std::string& name,
                    const std::vector<pcap::RawPacket>& packets,
                    PcapSpec spec = {}) {
  const fs::path path = fs::temp_directory_path() / ("vinevi_pipe_" + name);
  const auto bytes = encode_pcap(spec, packets);
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  return path;
}

std::vector<pcap::RawPacket> dns_burst(int n) {
  std::vector<pcap::RawPacket> packets;
  for (int i = 0; i < n; ++i)
    packets.push_back(make_packet(testsupport::udp_frame(40000, 53), uint32_t(i / 10),
                                  uint32_t((i % 10) * 100000)));
  return packets;
}

}  // namespace

TEST_CASE("sampling policies pick the documented index sets") {
  using namespace std::chrono;

  SUBCASE("all") {
    Sampler s(SamplingPolicy::all());
    for (uint64_t i = 0; i < 10; ++i) CHECK(s.should_sample(i, nanoseconds(0)));
  }

  SUBCASE("one in three selects 0,3,6 of 0..8") {
    Sampler s(SamplingPolicy::one_in_n(3));
    std::vector<uint64_t> picked;
    for (uint64_t i = 0; i < 9; ++i)
      if (s.should_sample(i, nanoseconds(0))) picked.push_back(i);
    CHECK(picked == std::vector<uint64_t>{0, 3, 6});
  }

  SUBCASE("pool takes the first budget packets of each period") {
    Sampler s(SamplingPolicy::time_pool(seconds(1), 2));
    // 5 packets inside one second: only the first two pass.
    int taken = 0;
    for (int i = 0; i < 5; ++i)
      if (s.should_sample(uint64_t(i), milliseconds(i * 150))) ++taken;
    CHECK(taken == 2);
    // The next second has a fresh budget.
    CHECK(s.should_sample(5, milliseconds(1100)));
  }

  SUBCASE("pool resets across idle gaps") {
    Sampler s(SamplingPolicy::time_pool(seconds(1), 1));
    CHECK(s.should_sample(0, nanoseconds(0)));
    CHECK_FALSE(s.should_sample(1, milliseconds(10)));
    CHECK(s.should_sample(2, seconds(5)));  // far future period
  }
}

TEST_CASE("sampling policy parsing") {
  CHECK(SamplingPolicy::parse("all").kind == SamplingPolicy::Kind::all);
  const auto one = SamplingPolicy::parse("1/8");
  CHECK(one.kind == SamplingPolicy::Kind::one_in_n);
  CHECK(one.n == 8);
  const auto pool = SamplingPolicy::parse("pool:250ms:16");
  CHECK(pool.kind == SamplingPolicy::Kind::time_pool);
  CHECK(pool.period == std::chrono::milliseconds(250));
  CHECK(pool.budget == 16);

  CHECK_THROWS_AS(SamplingPolicy::parse("every-other"), ConfigError);
  CHECK_THROWS_AS(SamplingPolicy::parse("1/0"), ConfigError);
  CHECK_THROWS_AS(SamplingPolicy::parse("pool:1s"), ConfigError);
  CHECK(SamplingPolicy::parse("pool:1s:2").to_string() == "pool:1s:2");
}

TEST_CASE("config validation rejects bad combinations") {
  PipelineConfig cfg;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no source

  cfg.pcap_path = "x.pcap";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // no classifier

  cfg.use_heuristic = true;
  CHECK_NOTHROW(cfg.validate());

  cfg.model_path = "m.vnn";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // two classifiers
  cfg.model_path.clear();

  cfg.live_interface = "eth0";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);  // two sources
  cfg.live_interface.clear();

  cfg.workers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("run over 30 dns packets with policy all") {
  const auto path = write_pcap("dns30.pcap", dns_burst(30));
  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.packets_seen == 30);
  CHECK(summary.packets_sampled == 30);
  CHECK(summary.class_counts[int(TrafficClass::dns)] == 30);
  CHECK_FALSE(summary.truncated);
  CHECK(summary.mean_latency_ms >= 0.0);
  CHECK(summary.max_latency_ms >= summary.mean_latency_ms);

  // The final window was force-closed: counts are visible immediately.
  const auto snap = p.registry().snapshot(metrics::GaugeRegistry::clock::now());
  CHECK(snap.closed.packets[int(TrafficClass::dns)] == 30);
  fs::remove(path);
}

TEST_CASE("one_in_n(3) samples 10 of 30") {
  const auto path = write_pcap("dns30b.pcap", dns_burst(30));
  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  cfg.sampling = SamplingPolicy::one_in_n(3);

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.packets_seen == 30);
  CHECK(summary.packets_sampled == 10);
  CHECK(summary.class_counts[int(TrafficClass::dns)] == 10);
  fs::remove(path);
}

TEST_CASE("pool sampling follows capture timestamps, two per second") {
  // 25 packets, 5 per second across 5 seconds.
  std::vector<pcap::RawPacket> packets;
  for (int i = 0; i < 25; ++i)
    packets.push_back(make_packet(testsupport::udp_frame(40000, 53), uint32_t(i / 5),
                                  uint32_t((i % 5) * 200000)));
  const auto path = write_pcap("paced.pcap", packets);

  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  cfg.sampling = SamplingPolicy::time_pool(std::chrono::seconds(1), 2);

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.packets_seen == 25);
  CHECK(summary.packets_sampled == 10);  // 2 per capture-second
  fs::remove(path);
}

TEST_CASE("empty capture yields an all-zero summary") {
  const auto path = write_pcap("empty.pcap", {});
  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.packets_seen == 0);
  CHECK(summary.packets_sampled == 0);
  for (uint64_t c : summary.class_counts) CHECK(c == 0);
  fs::remove(path);
}

TEST_CASE("exactly-once accounting across a mixed capture") {
  std::vector<pcap::RawPacket> packets;
  const uint16_t ports[] = {53, 22, 3389, 5060, 6881, 443, 1883, 9999};
  for (int i = 0; i < 200; ++i)
    packets.push_back(
        make_packet(testsupport::tcp_frame(40000, ports[i % 8]), uint32_t(i), 0));
  const auto path = write_pcap("mixed.pcap", packets);

  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  cfg.workers = 2;  // accounting must hold under parallel workers too

  Pipeline p(cfg);
  std::atomic<uint64_t> callbacks{0};
  const auto summary = p.run([&](uint64_t, const cls::ClassificationResult&) {
    callbacks.fetch_add(1);
  });

  CHECK(summary.packets_seen == 200);
  CHECK(summary.packets_sampled == 200);
  CHECK(callbacks.load() == 200);

  uint64_t classified = 0;
  for (uint64_t c : summary.class_counts) classified += c;
  CHECK(classified == 200);

  const auto snap = p.registry().snapshot(metrics::GaugeRegistry::clock::now());
  uint64_t recorded = 0;
  for (uint64_t c : snap.closed.packets) recorded += c;
  CHECK(recorded == 200);
  fs::remove(path);
}

TEST_CASE("limit caps the number of classified packets") {
  const auto path = write_pcap("limited.pcap", dns_burst(30));
  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  cfg.limit = 5;

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.packets_sampled == 5);
  CHECK(summary.class_counts[int(TrafficClass::dns)] == 5);
  fs::remove(path);
}

TEST_CASE("a truncated capture ends the run with a flagged partial summary") {
  auto packets = dns_burst(10);
  auto bytes = encode_pcap({}, packets);
  bytes.resize(bytes.size() - 7);  // cut into the last record
  const fs::path path = fs::temp_directory_path() / "vinevi_pipe_trunc.pcap";
  std::ofstream(path, std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));

  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.truncated);
  CHECK(summary.packets_seen == 9);
  CHECK(summary.class_counts[int(TrafficClass::dns)] == 9);
  fs::remove(path);
}

TEST_CASE("missing capture file fails at startup") {
  PipelineConfig cfg;
  cfg.pcap_path = "/nonexistent/never.pcap";
  cfg.use_heuristic = true;
  Pipeline p(cfg);
  CHECK_THROWS_AS(p.run(), IoError);
}

TEST_CASE("live capture is a stub that reports Unsupported") {
  PipelineConfig cfg;
  cfg.live_interface = "eth0";
  cfg.use_heuristic = true;
  Pipeline p(cfg);
  CHECK_THROWS_AS(p.run(), Unsupported);
}

TEST_CASE("shutdown is idempotent and a no-op before any run") {
  const auto path = write_pcap("preshutdown.pcap", dns_burst(5));
  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  Pipeline p(cfg);
  p.shutdown();  // no run in progress: no-op
  p.shutdown();

  // A later run is unaffected by the earlier calls.
  const auto summary = p.run();
  CHECK(summary.packets_sampled == 5);
  fs::remove(path);
}

TEST_CASE("shutdown mid-replay drains and keeps the counts consistent") {
  // Paced replay of a long capture; shutdown lands mid-file.
  std::vector<pcap::RawPacket> packets;
  for (int i = 0; i < 50; ++i)
    packets.push_back(make_packet(testsupport::udp_frame(40000, 53), uint32_t(i / 10),
                                  uint32_t((i % 10) * 100000)));
  const auto path = write_pcap("shutdown.pcap", packets);

  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.pace_replay = true;  // 100ms between packets at capture rate
  cfg.use_heuristic = true;

  Pipeline p(cfg);
  std::thread stopper([&p] {
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    p.shutdown();
    p.shutdown();  // double shutdown stays harmless
  });
  const auto summary = p.run();
  stopper.join();

  CHECK(summary.packets_seen < 50);
  CHECK(summary.packets_sampled <= summary.packets_seen);
  uint64_t classified = 0;
  for (uint64_t c : summary.class_counts) classified += c;
  CHECK(classified == summary.packets_sampled);
  fs::remove(path);
}

TEST_CASE("listen endpoint serves while the pipeline runs") {
  const auto path = write_pcap("served.pcap", dns_burst(25));
  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  cfg.listen = "127.0.0.1:0";

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.packets_sampled == 25);
  REQUIRE(p.endpoint_port() > 0);

  httplib::Client client("127.0.0.1", p.endpoint_port());
  auto res = client.Get("/metrics");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body.find("vinevi_traffic_class_packets{class=\"dns\"} 25\n") !=
        std::string::npos);
  testsupport::parse_exposition(res->body);

  p.stop_services();
  CHECK(p.endpoint_port() == -1);
  fs::remove(path);
}

TEST_CASE("a confidence threshold keeps low-confidence defaults out of the gauges") {
  // Unknown ports classify as browsing at confidence 0.5.
  std::vector<pcap::RawPacket> packets;
  for (int i = 0; i < 10; ++i)
    packets.push_back(
        testsupport::make_packet(testsupport::tcp_frame(40000, 40001), uint32_t(i), 0));
  const auto path = write_pcap("lowconf.pcap", packets);

  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  cfg.min_confidence = 0.9;

  Pipeline p(cfg);
  const auto summary = p.run();
  CHECK(summary.packets_sampled == 10);
  CHECK(summary.class_counts[int(TrafficClass::browsing)] == 10);  // still classified

  const auto snap = p.registry().snapshot(metrics::GaugeRegistry::clock::now());
  for (uint64_t c : snap.closed.packets) CHECK(c == 0);  // but never recorded
  fs::remove(path);
}

TEST_CASE("pipeline pushes its exposition to a configured collector") {
  std::string seen_path, seen_body;
  std::mutex seen_mu;
  httplib::Server sink;
  sink.Put(R"(/metrics/job/(.+))",
           [&](const httplib::Request& req, httplib::Response& res) {
             std::lock_guard lock(seen_mu);
             seen_path = req.path;
             seen_body = req.body;
             res.status = 200;
           });
  const int sink_port = sink.bind_to_any_port("127.0.0.1");
  REQUIRE(sink_port > 0);
  std::thread sink_thread([&] { sink.listen_after_bind(); });

  const auto path = write_pcap("pushed.pcap", dns_burst(8));
  PipelineConfig cfg;
  cfg.pcap_path = path.string();
  cfg.use_heuristic = true;
  cfg.push_url = "http://127.0.0.1:" + std::to_string(sink_port);
  cfg.push_job = "agent-under-test";
  cfg.push_interval = std::chrono::milliseconds(50);

  {
    Pipeline p(cfg);
    const auto summary = p.run();
    CHECK(summary.packets_sampled == 8);
    // run() leaves the pusher alive (daemon behavior); wait for a delivery
    // that carries the closed-window counts.
    for (int i = 0; i < 100; ++i) {
      {
        std::lock_guard lock(seen_mu);
        if (seen_body.find("class=\"dns\"} 8") != std::string::npos) break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    p.stop_services();
  }

  std::lock_guard lock(seen_mu);
  CHECK(seen_path == "/metrics/job/agent-under-test");
  CHECK(seen_body.find("vinevi_traffic_class_packets{class=\"dns\"} 8\n") !=
        std::string::npos);
  testsupport::parse_exposition(seen_body);

  sink.stop();
  sink_thread.join();
  fs::remove(path);
}

TEST_CASE("bounded queue blocks, drops and drains as advertised") {
  BoundedQueue<int> q(2);
  CHECK(q.try_push(1));
  CHECK(q.try_push(2));
  CHECK_FALSE(q.try_push(3));  // full: drop

  CHECK(q.pop() == 1);
  CHECK(q.try_push(3));

  std::thread producer([&q] {
    for (int i = 10; i < 20; ++i) q.push(i);  // blocks as needed
    q.close();
  });
  std::vector<int> seen;
  while (auto v = q.pop()) seen.push_back(*v);
  producer.join();
  CHECK(seen.size() == 12);  // 2, 3, then 10..19
  CHECK(seen.front() == 2);
  CHECK(seen.back() == 19);

  CHECK_FALSE(q.push(99));  // closed
}
