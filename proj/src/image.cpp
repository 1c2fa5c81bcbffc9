#include "dhmgen/image.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "dhmgen/error.hpp"

namespace dhmgen {
namespace {

class PnmHeader {
 public:
  explicit PnmHeader(std::span<const std::uint8_t> b) : b_(b) {}

  int next_int() {
    skip();
    if (pos_ >= b_.size() || !std::isdigit(b_[pos_])) throw Error(ErrorCode::BadMagic, "malformed PNM header");
    long v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_++] - '0');
      if (v > 1'000'000) throw Error(ErrorCode::BadValue, "PNM header value too large");
    }
    return static_cast<int>(v);
  }

  std::size_t pixel_offset() {
    // Exactly one whitespace byte separates maxval from the raster.
    if (pos_ >= b_.size()) throw Error(ErrorCode::TruncatedFile, "PNM raster missing");
    return pos_ + 1;
  }

  void seek(std::size_t p) { pos_ = p; }

 private:
  void skip() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

ImageStream decode_pnm(std::span<const std::uint8_t> bytes, FixedPointFormat fmt) {
  const int channels = bytes[1] == '5' ? 1 : 3;
  PnmHeader h(bytes);
  h.seek(2);
  const int width = h.next_int();
  const int height = h.next_int();
  const int maxval = h.next_int();
  if (width < 1 || height < 1 || maxval < 1 || maxval > 65535) throw Error(ErrorCode::BadValue, "bad PNM dimensions");
  const std::size_t sample = maxval > 255 ? 2 : 1;
  const std::size_t off = h.pixel_offset();
  const std::size_t need = static_cast<std::size_t>(width) * height * channels * sample;
  if (bytes.size() < off + need) throw Error(ErrorCode::TruncatedFile, "PNM raster truncated");
  ImageStream img(Shape3{channels, height, width});
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = off + ((static_cast<std::size_t>(y) * width + x) * channels + c) * sample;
        const int v = sample == 2 ? (bytes[i] << 8) | bytes[i + 1] : bytes[i];
        img.at(c, y, x) = quantize(2.0 * v / (maxval + 1.0) - 1.0, fmt);
      }
  return img;
}

ImageStream decode_him1(std::span<const std::uint8_t> bytes, FixedPointFormat fmt) {
  if (bytes.size() < 16) throw Error(ErrorCode::TruncatedFile, "HIM1 header truncated");
  std::uint32_t dims[3];
  std::memcpy(dims, bytes.data() + 4, sizeof dims);
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) throw Error(ErrorCode::BadValue, "HIM1 dimensions must be >= 1");
  const Shape3 shape{static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])};
  const std::size_t count = static_cast<std::size_t>(shape.channels) * shape.height * shape.width;
  if (bytes.size() - 16 < count * sizeof(double))
    throw Error(ErrorCode::TruncatedFile, "HIM1 holds fewer than " + std::to_string(count) + " pixels");
  if (bytes.size() - 16 > count * sizeof(double)) throw Error(ErrorCode::SizeMismatch, "HIM1 has trailing bytes");
  ImageStream img(shape);
  for (std::size_t i = 0; i < count; ++i) {
    double v;
    std::memcpy(&v, bytes.data() + 16 + i * sizeof(double), sizeof(double));
    if (!(v >= -1.0 && v < 1.0)) throw Error(ErrorCode::BadValue, "HIM1 pixel outside [-1, 1)");
    img.values[i] = quantize(v, fmt);
  }
  return img;
}

}  // namespace

ImageStream decode_image(std::span<const std::uint8_t> bytes, FixedPointFormat fmt) {
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "HIM1", 4) == 0) return decode_him1(bytes, fmt);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes, fmt);
  throw Error(ErrorCode::BadMagic, "image is neither P5/P6 PNM nor HIM1");
}

ImageStream load_image(const std::string& path, FixedPointFormat fmt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path + ": cannot open image");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes, fmt);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_him1(Shape3 shape, std::span<const double> pixels) {
  const std::uint32_t dims[3] = {static_cast<std::uint32_t>(shape.channels), static_cast<std::uint32_t>(shape.height),
                                 static_cast<std::uint32_t>(shape.width)};
  std::vector<std::uint8_t> out(16 + pixels.size_bytes());
  std::memcpy(out.data(), "HIM1", 4);
  std::memcpy(out.data() + 4, dims, sizeof dims);
  if (!pixels.empty()) std::memcpy(out.data() + 16, pixels.data(), pixels.size_bytes());
  return out;
}

ImageStream random_image(Shape3 shape, FixedPointFormat fmt, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> dist(fmt.min_int(), fmt.max_int());
  ImageStream img(shape);
  for (auto& v : img.values) v = dist(rng);
  return img;
}

}  // namespace dhmgen
