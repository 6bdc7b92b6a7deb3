#include "vinevi/pcap.hpp"

#include <array>
#include <cstring>

namespace vinevi::pcap {
namespace {

uint16_t read_u16(const uint8_t* p, ByteOrder order) {
  if (order == ByteOrder::little) return uint16_t(p[0] | (p[1] << 8));
  return uint16_t((p[0] << 8) | p[1]);
}

uint32_t read_u32(const uint8_t* p, ByteOrder order) {
  if (order == ByteOrder::little)
    return uint32_t(p[0]) | (uint32_t(p[1]) << 8) | (uint32_t(p[2]) << 16) |
           (uint32_t(p[3]) << 24);
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) |
         uint32_t(p[3]);
}

uint16_t read_be16(const uint8_t* p) { return uint16_t((p[0] << 8) | p[1]); }

}  // namespace

uint64_t packet_time_ns(const RawPacket& pkt, TsUnit unit) {
  const uint64_t frac_ns =
      unit == TsUnit::micros ? uint64_t(pkt.ts_frac) * 1000ull : uint64_t(pkt.ts_frac);
  return uint64_t(pkt.ts_sec) * 1000000000ull + frac_ns;
}

PcapMeta parse_pcap_header(std::span<const uint8_t, kGlobalHeaderSize> bytes) {
  const uint8_t* p = bytes.data();
  PcapMeta meta;

  const uint32_t magic_le = read_u32(p, ByteOrder::little);
  const uint32_t magic_be = read_u32(p, ByteOrder::big);
  if (magic_le == kMagicMicros || magic_le == kMagicNanos) {
    meta.byte_order = ByteOrder::little;
    meta.ts_unit = magic_le == kMagicMicros ? TsUnit::micros : TsUnit::nanos;
  } else if (magic_be == kMagicMicros || magic_be == kMagicNanos) {
    meta.byte_order = ByteOrder::big;
    meta.ts_unit = magic_be == kMagicMicros ? TsUnit::micros : TsUnit::nanos;
  } else {
    throw BadMagic("not a pcap file (unknown magic)");
  }

  const ByteOrder bo = meta.byte_order;
  meta.version_major = read_u16(p + 4, bo);
  meta.version_minor = read_u16(p + 6, bo);
  if (meta.version_major != 2 || meta.version_minor != 4) {
    throw UnsupportedVersion("unsupported pcap version " +
                             std::to_string(meta.version_major) + "." +
                             std::to_string(meta.version_minor));
  }
  meta.thiszone = int32_t(read_u32(p + 8, bo));
  meta.sigfigs = read_u32(p + 12, bo);
  meta.snaplen = read_u32(p + 16, bo);
  if (meta.snaplen == 0) throw CorruptHeader("snaplen is zero");
  meta.link_type = read_u32(p + 20, bo);
  return meta;
}

std::optional<RawPacket> next_packet(std::istream& in, const PcapMeta& meta) {
  std::array<uint8_t, kRecordHeaderSize> hdr{};
  in.read(reinterpret_cast<char*>(hdr.data()), hdr.size());
  const auto got = size_t(in.gcount());
  if (got == 0) return std::nullopt;  // clean end of stream
  if (got < hdr.size()) throw Truncated("partial record header at end of file");

  const ByteOrder bo = meta.byte_order;
  RawPacket pkt;
  pkt.ts_sec = read_u32(hdr.data(), bo);
  pkt.ts_frac = read_u32(hdr.data() + 4, bo);
  pkt.captured_len = read_u32(hdr.data() + 8, bo);
  pkt.original_len = read_u32(hdr.data() + 12, bo);

  if (pkt.captured_len > meta.snaplen)
    throw CorruptHeader("captured length " + std::to_string(pkt.captured_len) +
                        " exceeds snaplen " + std::to_string(meta.snaplen));
  if (pkt.captured_len > pkt.original_len)
    throw CorruptHeader("captured length exceeds original length");

  pkt.bytes.resize(pkt.captured_len);
  in.read(reinterpret_cast<char*>(pkt.bytes.data()), pkt.captured_len);
  if (size_t(in.gcount()) < pkt.captured_len)
    throw Truncated("record payload cut short");
  return pkt;
}

std::optional<FlowKey> extract_flow_key(const RawPacket& pkt, uint32_t link_type) {
  if (link_type != kLinkEthernet) return std::nullopt;
  const auto& b = pkt.bytes;
  if (b.size() < 14) return std::nullopt;

  size_t off = 12;
  uint16_t ethertype = read_be16(&b[off]);
  off += 2;
  if (ethertype == 0x8100) {  // single 802.1Q tag
    if (b.size() < off + 4) return std::nullopt;
    ethertype = read_be16(&b[off + 2]);
    off += 4;
  }

  FlowKey key;
  size_t l4 = 0;
  if (ethertype == 0x0800) {  // IPv4
    if (b.size() < off + 20) return std::nullopt;
    if ((b[off] >> 4) != 4) return std::nullopt;
    const size_t ihl = size_t(b[off] & 0x0f) * 4;
    if (ihl < 20 || b.size() < off + ihl) return std::nullopt;
    key.ip_proto = b[off + 9];
    l4 = off + ihl;
  } else if (ethertype == 0x86dd) {  // IPv6, extension headers not walked
    if (b.size() < off + 40) return std::nullopt;
    if ((b[off] >> 4) != 6) return std::nullopt;
    key.ip_proto = b[off + 6];
    l4 = off + 40;
  } else {
    return std::nullopt;
  }

  if (key.ip_proto == 6 || key.ip_proto == 17) {
    if (b.size() < l4 + 4) return std::nullopt;  // ports lost to the snap
    key.src_port = read_be16(&b[l4]);
    key.dst_port = read_be16(&b[l4 + 2]);
  }
  return key;
}

PcapReader::PcapReader(std::istream& in) : in_(in) {
  std::array<uint8_t, kGlobalHeaderSize> hdr{};
  in_.read(reinterpret_cast<char*>(hdr.data()), hdr.size());
  if (size_t(in_.gcount()) < hdr.size())
    throw Truncated("file shorter than pcap global header");
  meta_ = parse_pcap_header(hdr);
}

}  // namespace vinevi::pcap
