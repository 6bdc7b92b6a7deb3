#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include "vinevi/pcap.hpp"

namespace vinevi::pcap {

// A stream of packets the monitoring loop can drain. File replay is the
// built-in implementation; live capture is an optional platform stub.
class PacketSource {
 public:
  virtual ~PacketSource() = default;
  virtual std::optional<RawPacket> next() = 0;
  virtual uint32_t link_type() const = 0;
  virtual TsUnit ts_unit() const = 0;
  // Asks a blocking next() to give up early (used on shutdown).
  virtual void interrupt() {}
};

class FileReplaySource final : public PacketSource {
 public:
  // When `pace` is set, next() sleeps so inter-packet gaps reproduce the
  // capture timestamps.
  explicit FileReplaySource(const std::filesystem::path& path, bool pace = false);

  std::optional<RawPacket> next() override;
  uint32_t link_type() const override { return reader_->meta().link_type; }
  TsUnit ts_unit() const override { return reader_->meta().ts_unit; }
  void interrupt() override { interrupted_.store(true); }

  const PcapMeta& meta() const { return reader_->meta(); }

 private:
  std::ifstream file_;
  std::unique_ptr<PcapReader> reader_;
  bool pace_ = false;
  bool have_anchor_ = false;
  uint64_t first_ts_ns_ = 0;
  std::chrono::steady_clock::time_point replay_start_{};
  std::atomic<bool> interrupted_{false};
};

// Throws Unsupported unless the build enables an OS capture backend.
std::unique_ptr<PacketSource> open_live_capture(const std::string& interface_name);

}  // namespace vinevi::pcap
