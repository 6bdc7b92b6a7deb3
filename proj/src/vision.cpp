#include "vinevi/vision.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace vinevi::vision {

PacketImage packet_to_image(std::span<const uint8_t> pkt_bytes,
                            const TransformConfig& cfg) {
  if (pkt_bytes.empty()) throw EmptyPacket("cannot image a zero-length packet");

  const size_t len = std::min(pkt_bytes.size(), cfg.max_input_bytes);
  size_t side = size_t(std::ceil(std::sqrt(double(len))));
  while (side * side < len) ++side;  // guard against sqrt rounding down

  PacketImage img;
  for (int ty = 0; ty < PacketImage::kSide; ++ty) {
    const size_t sy = size_t(ty) * side / PacketImage::kSide;
    for (int tx = 0; tx < PacketImage::kSide; ++tx) {
      const size_t sx = size_t(tx) * side / PacketImage::kSide;
      const size_t idx = sy * side + sx;
      const uint8_t value = idx < len ? pkt_bytes[idx] : 0;
      uint8_t* px = &img.pixels[(size_t(ty) * PacketImage::kSide + tx) * 3];
      px[0] = px[1] = px[2] = value;
    }
  }
  return img;
}

ImageTensor normalize(const PacketImage& img, const std::array<double, 3>& mean,
                      const std::array<double, 3>& stddev) {
  for (double s : stddev)
    if (s == 0.0) throw ZeroStd("normalization std must be non-zero");

  ImageTensor t(PacketImage::kChannels, PacketImage::kSide, PacketImage::kSide);
  for (int c = 0; c < PacketImage::kChannels; ++c) {
    const double m = mean[c], s = stddev[c];
    for (int y = 0; y < PacketImage::kSide; ++y)
      for (int x = 0; x < PacketImage::kSide; ++x)
        t.at(c, y, x) = float((img.at(y, x, c) / 255.0 - m) / s);
  }
  return t;
}

std::string encode_image(const PacketImage& img, ImageFormat format) {
  constexpr int side = PacketImage::kSide;
  std::string out;
  if (format == ImageFormat::ppm) {
    out = "P6\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  } else {
    out = "P5\n" + std::to_string(side) + " " + std::to_string(side) + "\n255\n";
    out.reserve(out.size() + size_t(side) * side);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) out.push_back(char(img.at(y, x, 0)));
  }
  return out;
}

void write_image(const PacketImage& img, const std::filesystem::path& path,
                 ImageFormat format) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  const std::string data = encode_image(img, format);
  f.write(data.data(), std::streamsize(data.size()));
  if (!f) throw IoError("short write: " + path.string());
}

PacketImage decode_ppm(std::span<const uint8_t> data) {
  // Header: "P6" then whitespace-separated width, height, maxval, one
  // whitespace byte, then raw RGB.
  size_t pos = 0;
  auto fail = [](const char* why) -> PacketImage { throw IoError(why); };
  if (data.size() < 2 || data[0] != 'P' || data[1] != '6') return fail("not a P6 file");
  pos = 2;

  auto next_int = [&](int& out) {
    while (pos < data.size() && std::isspace(data[pos])) ++pos;
    if (pos >= data.size() || !std::isdigit(data[pos])) throw IoError("bad PPM header");
    long v = 0;
    while (pos < data.size() && std::isdigit(data[pos])) {
      v = v * 10 + (data[pos] - '0');
      if (v > 1 << 20) throw IoError("bad PPM header");
      ++pos;
    }
    out = int(v);
  };

  int w = 0, h = 0, maxval = 0;
  next_int(w);
  next_int(h);
  next_int(maxval);
  if (pos >= data.size() || !std::isspace(data[pos])) return fail("bad PPM header");
  ++pos;

  if (w != PacketImage::kSide || h != PacketImage::kSide || maxval != 255)
    return fail("unexpected PPM geometry");
  if (data.size() - pos != PacketImage::kPixelBytes) return fail("bad PPM payload size");

  PacketImage img;
  std::memcpy(img.pixels.data(), data.data() + pos, PacketImage::kPixelBytes);
  return img;
}

PacketImage read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
  return decode_ppm(data);
}

}  // namespace vinevi::vision
