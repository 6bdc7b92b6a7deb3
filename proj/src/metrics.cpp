#include "vinevi/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace vinevi::metrics {

bool valid_metric_name(std::string_view name) {
  if (name.empty()) return false;
  auto head = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':';
  };
  if (!head(name[0])) return false;
  for (char c : name.substr(1))
    if (!head(c) && !(c >= '0' && c <= '9')) return false;
  return true;
}

std::string escape_label_value(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '"': out += "\\\""; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "+Inf" : "-Inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, end);
}

namespace {

std::string escape_help(std::string_view raw) {
  std::string out;
  for (char c : raw) {
    if (c == '\\') out += "\\\\";
    else if (c == '\n') out += "\\n";
    else out += c;
  }
  return out;
}

}  // namespace

std::string render_exposition(std::vector<Family> families) {
  std::sort(families.begin(), families.end(),
            [](const Family& a, const Family& b) { return a.name < b.name; });

  std::string out;
  for (Family& fam : families) {
    if (!valid_metric_name(fam.name))
      throw std::logic_error("invalid metric name: " + fam.name);
    out += "# HELP " + fam.name + " " + escape_help(fam.help) + "\n";
    out += "# TYPE " + fam.name + " gauge\n";
    for (Sample& s : fam.samples) {
      std::sort(s.labels.begin(), s.labels.end());
      out += fam.name;
      if (!s.labels.empty()) {
        out += "{";
        bool first = true;
        for (const auto& [k, v] : s.labels) {
          if (!first) out += ",";
          first = false;
          out += k + "=\"" + escape_label_value(v) + "\"";
        }
        out += "}";
      }
      out += " " + format_value(s.value) + "\n";
    }
  }
  return out;
}

GaugeRegistry::GaugeRegistry(std::chrono::nanoseconds window, clock::time_point start)
    : window_(window), window_start_(start) {
  if (window_ <= std::chrono::nanoseconds::zero())
    throw std::invalid_argument("window length must be positive");
}

void GaugeRegistry::roll_locked(clock::time_point now) {
  if (now < window_start_ + window_) return;
  const auto elapsed = now - window_start_;
  const auto k = elapsed / window_;  // whole windows since start
  if (k == 1) {
    previous_ = current_;
  } else {
    previous_ = ClassCounts{};  // the window that just closed saw nothing
  }
  current_ = ClassCounts{};
  window_start_ += k * window_;
}

void GaugeRegistry::record(TrafficClass cls, uint64_t bytes, clock::time_point now) {
  std::lock_guard lock(mu_);
  roll_locked(now);
  current_.packets[int(cls)] += 1;
  current_.bytes[int(cls)] += bytes;
}

void GaugeRegistry::add_dropped(uint64_t n) {
  std::lock_guard lock(mu_);
  dropped_ += n;
}

void GaugeRegistry::enable_push_metrics() {
  std::lock_guard lock(mu_);
  push_enabled_ = true;
}

void GaugeRegistry::record_push_result(bool ok) {
  std::lock_guard lock(mu_);
  push_enabled_ = true;
  if (!ok) push_failures_ += 1;
}

void GaugeRegistry::set_host_metrics(std::optional<HostMetrics> host) {
  std::lock_guard lock(mu_);
  host_ = std::move(host);
}

void GaugeRegistry::close_window(clock::time_point now) {
  std::lock_guard lock(mu_);
  roll_locked(now);
  previous_ = current_;
  current_ = ClassCounts{};
  window_start_ = now;
}

GaugeRegistry::Snapshot GaugeRegistry::snapshot(clock::time_point now) {
  std::lock_guard lock(mu_);
  roll_locked(now);
  Snapshot snap;
  snap.closed = previous_;
  snap.dropped = dropped_;
  snap.push_enabled = push_enabled_;
  snap.push_failures = push_failures_;
  snap.host = host_;
  return snap;
}

std::string GaugeRegistry::render(clock::time_point now) {
  return render_exposition(build_families(snapshot(now)));
}

std::vector<Family> build_families(const GaugeRegistry::Snapshot& snap) {
  std::vector<Family> fams;

  Family packets{"vinevi_traffic_class_packets",
                 "Packets per application class in the last closed window.",
                 {}};
  Family bytes{"vinevi_traffic_class_bytes",
               "Traffic volume in bytes per application class in the last closed window.",
               {}};
  for (int i = 0; i < kTrafficClassCount; ++i) {
    const std::string cls(kTrafficClassNames[i]);
    packets.samples.push_back({{{"class", cls}}, double(snap.closed.packets[i])});
    bytes.samples.push_back({{{"class", cls}}, double(snap.closed.bytes[i])});
  }
  fams.push_back(std::move(packets));
  fams.push_back(std::move(bytes));

  fams.push_back({"vinevi_dropped_packets",
                  "Sampled packets dropped because the classification queue was full.",
                  {{{}, double(snap.dropped)}}});

  if (snap.push_enabled)
    fams.push_back({"vinevi_push_failures",
                    "Metric push attempts that failed since startup.",
                    {{{}, double(snap.push_failures)}}});

  if (snap.host) {
    fams.push_back({"vinevi_host_cpu_percent",
                    "Host CPU busy share over the last sampling interval.",
                    {{{}, snap.host->cpu_percent}}});
    fams.push_back({"vinevi_host_memory_total_bytes",
                    "Total physical memory.",
                    {{{}, double(snap.host->mem_total)}}});
    fams.push_back({"vinevi_host_memory_available_bytes",
                    "Memory available for new workloads.",
                    {{{}, double(snap.host->mem_available)}}});
  }
  return fams;
}

}  // namespace vinevi::metrics
