#include "vinevi/packet_source.hpp"

#include <thread>

namespace vinevi::pcap {

FileReplaySource::FileReplaySource(const std::filesystem::path& path, bool pace)
    : file_(path, std::ios::binary), pace_(pace) {
  if (!file_) throw IoError("cannot open pcap file: " + path.string());
  reader_ = std::make_unique<PcapReader>(file_);
}

std::optional<RawPacket> FileReplaySource::next() {
  auto pkt = reader_->next();
  if (!pkt) return std::nullopt;

  if (pace_) {
    const uint64_t ts = packet_time_ns(*pkt, ts_unit());
    if (!have_anchor_) {
      have_anchor_ = true;
      first_ts_ns_ = ts;
      replay_start_ = std::chrono::steady_clock::now();
    }
    const auto due = replay_start_ + std::chrono::nanoseconds(ts - first_ts_ns_);
    // Sleep in slices so interrupt() stays responsive.
    while (!interrupted_.load(std::memory_order_relaxed)) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= due) break;
      std::this_thread::sleep_for(std::min<std::chrono::nanoseconds>(
          due - now, std::chrono::milliseconds(10)));
    }
  }
  if (interrupted_.load(std::memory_order_relaxed)) return std::nullopt;
  return pkt;
}

std::unique_ptr<PacketSource> open_live_capture(const std::string& interface_name) {
#ifdef VINEVI_ENABLE_LIVE_CAPTURE
#error "no live capture backend is wired up for this platform yet"
#else
  throw Unsupported("live capture from interface '" + interface_name +
                    "' is not built into this binary; replay a pcap file instead");
#endif
}

}  // namespace vinevi::pcap
