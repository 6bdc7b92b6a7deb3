#include "vinevi/host_stats.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace vinevi::metrics {
namespace {

std::optional<std::string> slurp(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) return std::nullopt;
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<uint64_t> parse_fields(std::string_view line) {
  std::vector<uint64_t> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) {
      uint64_t v = 0;
      auto [p, ec] = std::from_chars(line.data() + i, line.data() + j, v);
      if (ec != std::errc() || p != line.data() + j) return out;
      out.push_back(v);
    }
    i = j;
  }
  return out;
}

}  // namespace

std::optional<CpuTimes> parse_cpu_line(std::string_view text) {
  // The aggregate line is "cpu  user nice system idle iowait irq softirq steal ..."
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (line.rfind("cpu ", 0) == 0 || line.rfind("cpu\t", 0) == 0) {
      auto fields = parse_fields(line.substr(4));
      if (fields.size() < 4) return std::nullopt;
      fields.resize(8, 0);  // user nice system idle iowait irq softirq steal
      CpuTimes t;
      for (uint64_t v : fields) t.total += v;
      const uint64_t idle = fields[3] + fields[4];
      t.busy = t.total - idle;
      return t;
    }
    pos = eol + 1;
  }
  return std::nullopt;
}

double cpu_percent(const CpuTimes& a, const CpuTimes& b) {
  if (b.total <= a.total) return 0.0;
  const double busy = b.busy >= a.busy ? double(b.busy - a.busy) : 0.0;
  const double total = double(b.total - a.total);
  return std::clamp(100.0 * busy / total, 0.0, 100.0);
}

std::optional<MemInfo> parse_meminfo(std::string_view text) {
  MemInfo info;
  bool have_total = false, have_avail = false;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    auto read_kb = [&](std::string_view prefix, uint64_t& out) {
      if (line.rfind(prefix, 0) != 0) return false;
      auto fields = parse_fields(line.substr(prefix.size()));
      if (fields.empty()) return false;
      out = fields[0] * 1024;  // meminfo reports kB
      return true;
    };
    uint64_t v = 0;
    if (read_kb("MemTotal:", v)) {
      info.total_bytes = v;
      have_total = true;
    } else if (read_kb("MemAvailable:", v)) {
      info.available_bytes = v;
      have_avail = true;
    }
    pos = eol + 1;
  }
  if (!have_total || !have_avail) return std::nullopt;
  return info;
}

HostMetrics collect_host(const std::filesystem::path& proc_root,
                         std::chrono::milliseconds spacing) {
  auto stat_a = slurp(proc_root / "stat");
  if (!stat_a) throw Unsupported("cannot read " + (proc_root / "stat").string());
  auto times_a = parse_cpu_line(*stat_a);
  if (!times_a) throw Unsupported("no aggregate cpu line in proc stat");

  std::this_thread::sleep_for(spacing);

  auto stat_b = slurp(proc_root / "stat");
  auto times_b = stat_b ? parse_cpu_line(*stat_b) : std::nullopt;
  if (!times_b) throw Unsupported("cannot re-read proc stat");

  auto mem_text = slurp(proc_root / "meminfo");
  auto mem = mem_text ? parse_meminfo(*mem_text) : std::nullopt;
  if (!mem) throw Unsupported("cannot read meminfo");

  HostMetrics host;
  host.cpu_percent = cpu_percent(*times_a, *times_b);
  host.mem_total = mem->total_bytes;
  host.mem_available = std::min(mem->available_bytes, mem->total_bytes);
  return host;
}

std::optional<ProcessCpuSample> sample_process_cpu(const std::filesystem::path& proc_root) {
  auto text = slurp(proc_root / "self" / "stat");
  if (!text) return std::nullopt;
  // comm can hold spaces; fields resume after the closing paren.
  const size_t close = text->rfind(')');
  if (close == std::string::npos) return std::nullopt;
  std::istringstream rest(text->substr(close + 1));
  std::string tok;
  // state(3) .. cmajflt(13), then utime(14) stime(15)
  uint64_t utime = 0, stime = 0;
  for (int field = 3; field <= 15 && (rest >> tok); ++field) {
    if (field == 14) utime = std::stoull(tok);
    if (field == 15) stime = std::stoull(tok);
  }
  ProcessCpuSample s;
  s.ticks = utime + stime;
  s.at = std::chrono::steady_clock::now();
  return s;
}

double process_cpu_percent(const ProcessCpuSample& a, const ProcessCpuSample& b,
                           long ticks_per_second) {
  const auto wall = std::chrono::duration<double>(b.at - a.at).count();
  if (wall <= 0.0 || ticks_per_second <= 0) return 0.0;
  const double cpu_seconds = double(b.ticks - a.ticks) / double(ticks_per_second);
  return std::clamp(100.0 * cpu_seconds / wall, 0.0, 100.0);
}

}  // namespace vinevi::metrics
