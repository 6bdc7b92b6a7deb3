#pragma once

// Synthetic capture-file and packet builders. Serialization here is written
// from the format layout directly so parser tests check against an
// independent encoder, not the code under test.

#include <cstdint>
#include <string>
#include <vector>

#include "vinevi/pcap.hpp"

namespace testsupport {

using vinevi::pcap::ByteOrder;
using vinevi::pcap::RawPacket;
using vinevi::pcap::TsUnit;

struct PcapSpec {
  ByteOrder order = ByteOrder::little;
  TsUnit unit = TsUnit::micros;
  uint32_t snaplen = 65535;
  uint32_t link_type = 1;  // Ethernet
};

inline void put_u16(std::vector<uint8_t>& out, uint16_t v, ByteOrder order) {
  if (order == ByteOrder::little) {
    out.push_back(uint8_t(v));
    out.push_back(uint8_t(v >> 8));
  } else {
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
  }
}

inline void put_u32(std::vector<uint8_t>& out, uint32_t v, ByteOrder order) {
  if (order == ByteOrder::little) {
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(v >> (8 * i)));
  } else {
    for (int i = 3; i >= 0; --i) out.push_back(uint8_t(v >> (8 * i)));
  }
}

inline std::vector<uint8_t> encode_pcap(const PcapSpec& spec,
                                        const std::vector<RawPacket>& packets) {
  std::vector<uint8_t> out;
  const uint32_t magic = spec.unit == TsUnit::micros ? 0xa1b2c3d4u : 0xa1b23c4du;
  put_u32(out, magic, spec.order);
  put_u16(out, 2, spec.order);
  put_u16(out, 4, spec.order);
  put_u32(out, 0, spec.order);  // thiszone
  put_u32(out, 0, spec.order);  // sigfigs
  put_u32(out, spec.snaplen, spec.order);
  put_u32(out, spec.link_type, spec.order);
  for (const RawPacket& p : packets) {
    put_u32(out, p.ts_sec, spec.order);
    put_u32(out, p.ts_frac, spec.order);
    put_u32(out, uint32_t(p.bytes.size()), spec.order);
    put_u32(out, p.original_len, spec.order);
    out.insert(out.end(), p.bytes.begin(), p.bytes.end());
  }
  return out;
}

// ---- Ethernet frame builders ------------------------------------------

inline void put_be16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v));
}

inline std::vector<uint8_t> eth_header(uint16_t ethertype) {
  std::vector<uint8_t> f;
  for (int i = 0; i < 6; ++i) f.push_back(0x02);  // dst
  for (int i = 0; i < 6; ++i) f.push_back(0x04);  // src
  put_be16(f, ethertype);
  return f;
}

// Ethernet + IPv4 + UDP/TCP with the minimal fixed-size headers.
inline std::vector<uint8_t> ip_frame(uint8_t ip_proto, uint16_t src_port,
                                     uint16_t dst_port,
                                     const std::vector<uint8_t>& payload = {}) {
  std::vector<uint8_t> f = eth_header(0x0800);
  const size_t l4_header = ip_proto == 6 ? 20 : 8;
  const uint16_t total_len = uint16_t(20 + l4_header + payload.size());

  f.push_back(0x45);  // version 4, IHL 5
  f.push_back(0x00);
  put_be16(f, total_len);
  put_be16(f, 0x0000);  // id
  put_be16(f, 0x4000);  // don't fragment
  f.push_back(64);      // ttl
  f.push_back(ip_proto);
  put_be16(f, 0x0000);                              // checksum (unchecked)
  for (uint8_t b : {10, 0, 0, 1}) f.push_back(b);   // src ip
  for (uint8_t b : {10, 0, 0, 2}) f.push_back(b);   // dst ip

  put_be16(f, src_port);
  put_be16(f, dst_port);
  if (ip_proto == 17) {
    put_be16(f, uint16_t(8 + payload.size()));  // udp length
    put_be16(f, 0x0000);                        // checksum
  } else {
    put_be16(f, 0x0001);  // seq hi
    put_be16(f, 0x0000);  // seq lo
    put_be16(f, 0x0000);  // ack hi
    put_be16(f, 0x0000);  // ack lo
    f.push_back(0x50);    // data offset 5
    f.push_back(0x02);    // SYN
    put_be16(f, 0xffff);  // window
    put_be16(f, 0x0000);  // checksum
    put_be16(f, 0x0000);  // urgent
  }
  f.insert(f.end(), payload.begin(), payload.end());
  return f;
}

inline std::vector<uint8_t> udp_frame(uint16_t src_port, uint16_t dst_port,
                                      const std::vector<uint8_t>& payload = {}) {
  return ip_frame(17, src_port, dst_port, payload);
}

inline std::vector<uint8_t> tcp_frame(uint16_t src_port, uint16_t dst_port,
                                      const std::vector<uint8_t>& payload = {}) {
  return ip_frame(6, src_port, dst_port, payload);
}

// Ethernet + IPv6 + UDP/TCP, no extension headers.
inline std::vector<uint8_t> ip6_frame(uint8_t ip_proto, uint16_t src_port,
                                      uint16_t dst_port) {
  std::vector<uint8_t> f = eth_header(0x86dd);
  const size_t l4_header = ip_proto == 6 ? 20 : 8;
  f.push_back(0x60);  // version 6
  f.push_back(0x00);
  f.push_back(0x00);
  f.push_back(0x00);
  put_be16(f, uint16_t(l4_header));  // payload length
  f.push_back(ip_proto);             // next header
  f.push_back(64);                   // hop limit
  for (int i = 0; i < 16; ++i) f.push_back(i == 15 ? 0x01 : 0x00);  // src ::1
  for (int i = 0; i < 16; ++i) f.push_back(i == 15 ? 0x02 : 0x00);  // dst ::2
  put_be16(f, src_port);
  put_be16(f, dst_port);
  if (ip_proto == 17) {
    put_be16(f, 8);
    put_be16(f, 0x0000);
  } else {
    f.resize(f.size() + 16, 0x00);  // rest of a minimal TCP header
  }
  return f;
}

inline std::vector<uint8_t> arp_frame() {
  std::vector<uint8_t> f = eth_header(0x0806);
  const uint8_t arp[] = {0x00, 0x01, 0x08, 0x00, 0x06, 0x04, 0x00, 0x01};
  f.insert(f.end(), std::begin(arp), std::end(arp));
  f.resize(f.size() + 20, 0x00);  // sender/target addresses
  return f;
}

inline RawPacket make_packet(std::vector<uint8_t> bytes, uint32_t ts_sec = 0,
                             uint32_t ts_frac = 0) {
  RawPacket p;
  p.ts_sec = ts_sec;
  p.ts_frac = ts_frac;
  p.captured_len = uint32_t(bytes.size());
  p.original_len = uint32_t(bytes.size());
  p.bytes = std::move(bytes);
  return p;
}

}  // namespace testsupport
