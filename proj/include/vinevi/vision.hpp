#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vinevi/errors.hpp"
#include "vinevi/tensor.hpp"

namespace vinevi::vision {

struct TransformConfig {
  // Packets longer than this are truncated before gridding; the leading
  // bytes (headers first) carry the class signal.
  size_t max_input_bytes = 224u * 224u;
};

// Fixed-size grayscale-replicated RGB image built from one packet.
struct PacketImage {
  static constexpr int kSide = 224;
  static constexpr int kChannels = 3;
  static constexpr size_t kPixelBytes = size_t(kSide) * kSide * kChannels;

  std::vector<uint8_t> pixels = std::vector<uint8_t>(kPixelBytes, 0);

  uint8_t at(int y, int x, int c) const {
    return pixels[(size_t(y) * kSide + x) * kChannels + c];
  }
  uint8_t& at(int y, int x, int c) {
    return pixels[(size_t(y) * kSide + x) * kChannels + c];
  }
  bool operator==(const PacketImage&) const = default;
};

// Deterministic byte->image mapping: the packet bytes fill the smallest
// square grid that holds them (zero padded), which is nearest-neighbor
// resized to 224x224 and replicated across the three channels.
// Throws EmptyPacket on zero-length input.
PacketImage packet_to_image(std::span<const uint8_t> pkt_bytes,
                            const TransformConfig& cfg = {});

// (pixel/255 - mean[c]) / std[c], per channel. Throws ZeroStd.
ImageTensor normalize(const PacketImage& img, const std::array<double, 3>& mean,
                      const std::array<double, 3>& stddev);

enum class ImageFormat { ppm, pgm };

// Binary PPM (P6) with all three channels, or PGM (P5) with channel 0 only.
std::string encode_image(const PacketImage& img, ImageFormat format);
void write_image(const PacketImage& img, const std::filesystem::path& path,
                 ImageFormat format);

// Strict decoder for the P6 files this module writes. Throws IoError.
PacketImage decode_ppm(std::span<const uint8_t> data);
PacketImage read_ppm(const std::filesystem::path& path);

}  // namespace vinevi::vision
