#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dhmgen/network.hpp"

namespace dhmgen {

/// Real-valued parameters of one conv block, weights in [n][c][ky][kx]
/// row-major order.
struct BlockWeights {
  int num_outputs = 0;
  int channels = 0;
  int kernel = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  std::size_t index(int n, int c, int ky, int kx) const {
    return ((static_cast<std::size_t>(n) * channels + c) * kernel + ky) * kernel + kx;
  }
  double weight(int n, int c, int ky, int kx) const { return weights[index(n, c, ky, kx)]; }
};

struct WeightSet {
  std::vector<BlockWeights> blocks;
};

inline constexpr char kWeightMagic[4] = {'H', 'W', 'F', '1'};

/// Decode an HWF1 container and check it against the network's block dims.
WeightSet load_weights(std::span<const std::uint8_t> bytes, const ValidatedNetwork& net);

WeightSet load_weights_file(const std::string& path, const ValidatedNetwork& net);

std::vector<std::uint8_t> save_weights(const WeightSet& ws);

/// Zero-filled weight set shaped for `net`.
WeightSet make_weight_set(const ValidatedNetwork& net);

/// Reproducible synthetic parameters: normally distributed (sigma 0.25) so a
/// realistic share of weights lands on zero and powers of two after
/// quantization.
WeightSet random_weights(const ValidatedNetwork& net, std::uint64_t seed);

}  // namespace dhmgen
