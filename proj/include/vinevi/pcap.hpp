#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <vector>

#include "vinevi/errors.hpp"

namespace vinevi::pcap {

enum class ByteOrder { little, big };
enum class TsUnit { micros, nanos };

inline constexpr uint32_t kMagicMicros = 0xa1b2c3d4u;
inline constexpr uint32_t kMagicNanos = 0xa1b23c4du;
inline constexpr uint32_t kLinkEthernet = 1;
inline constexpr size_t kGlobalHeaderSize = 24;
inline constexpr size_t kRecordHeaderSize = 16;

struct PcapMeta {
  ByteOrder byte_order = ByteOrder::little;
  TsUnit ts_unit = TsUnit::micros;
  uint16_t version_major = 0;
  uint16_t version_minor = 0;
  int32_t thiszone = 0;
  uint32_t sigfigs = 0;
  uint32_t snaplen = 0;
  uint32_t link_type = 0;
};

struct RawPacket {
  uint32_t ts_sec = 0;
  uint32_t ts_frac = 0;  // micro- or nanoseconds, per the file magic
  uint32_t captured_len = 0;
  uint32_t original_len = 0;
  std::vector<uint8_t> bytes;
};

// Capture timestamp as nanoseconds since the epoch of the trace.
uint64_t packet_time_ns(const RawPacket& pkt, TsUnit unit);

// Decodes the 24-byte global header. Throws BadMagic on unknown magic,
// UnsupportedVersion unless the file is version 2.4, CorruptHeader on
// snaplen 0.
PcapMeta parse_pcap_header(std::span<const uint8_t, kGlobalHeaderSize> bytes);

// Reads the next record from `in`. Returns nullopt on clean end of file.
// Throws Truncated when the header or payload is cut short and
// CorruptHeader when a record violates the file's own limits.
std::optional<RawPacket> next_packet(std::istream& in, const PcapMeta& meta);

struct FlowKey {
  uint8_t ip_proto = 0;
  std::optional<uint16_t> src_port;
  std::optional<uint16_t> dst_port;
};

// Parses Ethernet -> IPv4/IPv6 -> TCP/UDP far enough to recover protocol
// and ports. Returns nullopt for non-Ethernet link types, non-IP frames
// and frames too short to hold the headers they promise.
std::optional<FlowKey> extract_flow_key(const RawPacket& pkt, uint32_t link_type);

class PcapReader {
 public:
  explicit PcapReader(std::istream& in);

  const PcapMeta& meta() const { return meta_; }
  std::optional<RawPacket> next() { return next_packet(in_, meta_); }

 private:
  std::istream& in_;
  PcapMeta meta_;
};

}  // namespace vinevi::pcap
