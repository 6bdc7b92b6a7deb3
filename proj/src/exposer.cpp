#include "vinevi/exposer.hpp"

#include <atomic>
#include <condition_variable>
#include <thread>

#include <httplib.h>

namespace vinevi::metrics {

struct MetricsServer::Impl {
  GaugeRegistry& registry;
  std::string host;
  int requested_port;
  int bound_port = -1;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> started{false};

  Impl(GaugeRegistry& reg, std::string h, int p)
      : registry(reg), host(std::move(h)), requested_port(p) {}
};

MetricsServer::MetricsServer(GaugeRegistry& registry, std::string host, int port)
    : impl_(std::make_unique<Impl>(registry, std::move(host), port)) {}

MetricsServer::~MetricsServer() { stop(); }

void MetricsServer::start() {
  Impl& im = *impl_;
  if (im.started.exchange(true)) return;

  // Plain SO_REUSEADDR only: with httplib's default SO_REUSEPORT a second
  // agent could bind the same port and scrapes would split between them.
  im.server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes),
               sizeof(yes));
  });

  im.server.Get("/metrics", [&im](const httplib::Request&, httplib::Response& res) {
    res.set_content(im.registry.render(GaugeRegistry::clock::now()),
                    kExpositionContentType);
  });
  im.server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  if (im.requested_port == 0) {
    im.bound_port = im.server.bind_to_any_port(im.host);
    if (im.bound_port <= 0) throw BindError("cannot bind " + im.host);
  } else {
    if (!im.server.bind_to_port(im.host, im.requested_port))
      throw BindError("cannot bind " + im.host + ":" + std::to_string(im.requested_port));
    im.bound_port = im.requested_port;
  }

  im.thread = std::thread([&im] { im.server.listen_after_bind(); });
  for (int i = 0; i < 200 && !im.server.is_running(); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
}

void MetricsServer::stop() {
  Impl& im = *impl_;
  if (!im.started.load()) return;
  im.server.stop();
  if (im.thread.joinable()) im.thread.join();
}

bool MetricsServer::running() const { return impl_->server.is_running(); }

int MetricsServer::port() const { return impl_->bound_port; }

PushTarget parse_push_url(const std::string& url) {
  std::string rest = url;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  else if (rest.rfind("https://", 0) == 0)
    throw ConfigError("https push targets are not supported");

  PushTarget target;
  const size_t slash = rest.find('/');
  std::string hostport = rest.substr(0, slash);
  if (slash != std::string::npos) {
    target.base_path = rest.substr(slash);
    while (!target.base_path.empty() && target.base_path.back() == '/')
      target.base_path.pop_back();
  }

  const size_t colon = hostport.rfind(':');
  if (colon == std::string::npos) {
    target.host = hostport;
  } else {
    target.host = hostport.substr(0, colon);
    try {
      target.port = std::stoi(hostport.substr(colon + 1));
    } catch (...) {
      throw ConfigError("bad port in push url: " + url);
    }
  }
  if (target.host.empty()) throw ConfigError("bad push url: " + url);
  if (target.port <= 0 || target.port > 65535)
    throw ConfigError("bad port in push url: " + url);
  return target;
}

struct MetricsPusher::Impl {
  GaugeRegistry& registry;
  PushTarget target;
  std::string job;
  std::chrono::milliseconds interval;

  std::thread thread;
  std::mutex mu;
  std::condition_variable cv;
  bool stopping = false;
  std::atomic<uint64_t> attempts{0};
  std::atomic<uint64_t> failures{0};

  Impl(GaugeRegistry& reg, PushTarget t, std::string j, std::chrono::milliseconds iv)
      : registry(reg), target(std::move(t)), job(std::move(j)), interval(iv) {}

  void push_once() {
    const std::string body = registry.render(GaugeRegistry::clock::now());
    httplib::Client client(target.host, target.port);
    client.set_connection_timeout(2, 0);
    client.set_write_timeout(2, 0);
    client.set_read_timeout(2, 0);
    auto res = client.Put(target.base_path + "/metrics/job/" + job, body,
                          kExpositionContentType);
    const bool ok = res && res->status >= 200 && res->status < 300;
    attempts.fetch_add(1);
    if (!ok) failures.fetch_add(1);
    registry.record_push_result(ok);
  }

  void loop() {
    push_once();
    std::unique_lock lock(mu);
    while (!cv.wait_for(lock, interval, [this] { return stopping; })) {
      lock.unlock();
      push_once();
      lock.lock();
    }
  }
};

MetricsPusher::MetricsPusher(GaugeRegistry& registry, std::string url, std::string job,
                             std::chrono::milliseconds interval)
    : impl_(std::make_unique<Impl>(registry, parse_push_url(url), std::move(job),
                                   interval)) {
  registry.enable_push_metrics();
}

MetricsPusher::~MetricsPusher() { stop(); }

void MetricsPusher::start() {
  if (impl_->thread.joinable()) return;
  impl_->thread = std::thread([this] { impl_->loop(); });
}

void MetricsPusher::stop() {
  {
    std::lock_guard lock(impl_->mu);
    impl_->stopping = true;
  }
  impl_->cv.notify_all();
  if (impl_->thread.joinable()) impl_->thread.join();
}

uint64_t MetricsPusher::attempts() const { return impl_->attempts.load(); }
uint64_t MetricsPusher::failures() const { return impl_->failures.load(); }

}  // namespace vinevi::metrics
