#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dhmgen/fixed_point.hpp"
#include "dhmgen/simulate.hpp"

namespace dhmgen {

/// Decode a P5/P6 portable any-map or an HIM1 raw image and quantize it to
/// `fmt`. PNM samples map to [-1, 1) as 2 * v / (maxval + 1) - 1.
ImageStream decode_image(std::span<const std::uint8_t> bytes, FixedPointFormat fmt);

ImageStream load_image(const std::string& path, FixedPointFormat fmt);

/// HIM1 container: magic, u32 C, H, W, then C*H*W little-endian float64.
std::vector<std::uint8_t> encode_him1(Shape3 shape, std::span<const double> pixels);

/// Uniform random pixels over the full data-format range.
ImageStream random_image(Shape3 shape, FixedPointFormat fmt, std::uint64_t seed);

}  // namespace dhmgen
