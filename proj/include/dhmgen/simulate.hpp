#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dhmgen/fixed_point.hpp"
#include "dhmgen/graph.hpp"
#include "dhmgen/network.hpp"

namespace dhmgen {

/// Integer feature maps, channel-major then row-major.
struct FeatureMaps {
  Shape3 shape;
  std::vector<std::int64_t> values;

  FeatureMaps() = default;
  explicit FeatureMaps(Shape3 s)
      : shape(s), values(static_cast<std::size_t>(s.channels) * s.height * s.width, 0) {}

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * shape.height + y) * shape.width + x;
  }
  std::int64_t& at(int c, int y, int x) { return values[index(c, y, x)]; }
  std::int64_t at(int c, int y, int x) const { return values[index(c, y, x)]; }

  friend bool operator==(const FeatureMaps&, const FeatureMaps&) = default;
};

/// Input pixels quantized to the data format; each channel is streamed in
/// row-major order.
using ImageStream = FeatureMaps;

/// Direct loop-nest evaluation of every block in exact integer arithmetic.
/// Returns one FeatureMaps per block.
std::vector<FeatureMaps> golden_forward(const ValidatedNetwork& net, const QuantizedWeights& qw,
                                        const ImageStream& img);

struct SimulationResult {
  std::vector<FeatureMaps> outputs;  // per block
  long long steps = 0;               // global scheduler steps
  long long firings = 0;
};

/// Token-level data-driven execution of the actor graph: sources emit one
/// pixel per step and every actor fires when all its inputs hold a token.
/// An optional trace stream receives the stimulus and every sink token.
SimulationResult run_stream(const DhmGraph& g, const ImageStream& img, std::ostream* trace = nullptr);

std::vector<FeatureMaps> stream_simulate(const DhmGraph& g, const ImageStream& img);

struct BlockDiff {
  std::int64_t max_abs_diff = 0;
  long long mismatches = 0;
  std::optional<std::array<int, 3>> first_mismatch;  // (c, y, x)
};

struct DiffReport {
  bool equal = true;
  std::vector<BlockDiff> blocks;
};

DiffReport compare(const std::vector<FeatureMaps>& a, const std::vector<FeatureMaps>& b);

std::string format_diff(const DiffReport& r);

}  // namespace dhmgen
