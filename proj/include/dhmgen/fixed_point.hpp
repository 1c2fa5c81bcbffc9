#pragma once

#include <cstdint>
#include <vector>

#include "dhmgen/network.hpp"
#include "dhmgen/weights.hpp"

namespace dhmgen {

/// Signed fixed-point Q-format: real value = integer * 2^-frac_bits.
struct FixedPointFormat {
  int total_bits = 6;
  int frac_bits = 5;

  /// Throws OutOfRange unless 2 <= total_bits <= 32 and 0 <= frac_bits < total_bits.
  static FixedPointFormat make(int total_bits, int frac_bits);

  /// All-fractional format used for data streams: f = b - 1.
  static FixedPointFormat data(int total_bits) { return make(total_bits, total_bits - 1); }

  std::int64_t min_int() const { return -(std::int64_t{1} << (total_bits - 1)); }
  std::int64_t max_int() const { return (std::int64_t{1} << (total_bits - 1)) - 1; }
  bool contains(std::int64_t v) const { return v >= min_int() && v <= max_int(); }
  double min_real() const;
  double max_real() const;

  friend bool operator==(const FixedPointFormat&, const FixedPointFormat&) = default;
};

/// Round-to-nearest-even of x * 2^f, saturated to the format. NaN maps to 0.
std::int64_t quantize(double x, FixedPointFormat fmt);

/// i * 2^-f. Throws OutOfRange when i is not representable.
double dequantize(std::int64_t i, FixedPointFormat fmt);

/// Arithmetic right shift by `shift` bits with round-half-to-even.
std::int64_t round_shift(std::int64_t v, int shift);

std::int64_t saturate(std::int64_t v, int bits);

/// True when v fits a signed two's-complement word of `bits` bits.
bool fits_signed(std::int64_t v, int bits);

int ceil_log2(std::int64_t v);

/// Widths of the integer datapath of one conv block. No intermediate value can
/// overflow these for operands inside their formats.
struct AccumulatorPlan {
  int product_bits = 0;
  int tree_bits = 0;
  int sum_bits = 0;
  int post_bias_bits = 0;
  int frac_bits = 0;  // f_data + f_weight

  friend bool operator==(const AccumulatorPlan&, const AccumulatorPlan&) = default;
};

AccumulatorPlan accumulator_plan(int kernel, int channels, FixedPointFormat data_fmt, FixedPointFormat weight_fmt);
AccumulatorPlan accumulator_plan(const LayerBlock& block, int channels, FixedPointFormat data_fmt,
                                 FixedPointFormat weight_fmt);

/// Minimal-precision weight format for the given bit budget: the largest
/// magnitude weight is representable without saturation.
FixedPointFormat choose_weight_format(const WeightSet& weights, int bits);
FixedPointFormat choose_weight_format(const BlockWeights& weights, int bits);

struct QuantizedBlock {
  int num_outputs = 0;
  int channels = 0;
  int kernel = 0;
  bool bias_enabled = true;
  FixedPointFormat weight_fmt;
  AccumulatorPlan plan;
  std::vector<std::int64_t> weights;  // [n][c][ky][kx]
  std::vector<std::int64_t> biases;   // at plan.frac_bits, saturated to plan.sum_bits

  std::int64_t weight(int n, int c, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(n) * channels + c) * kernel + ky) * kernel + kx];
  }
};

struct QuantizedWeights {
  FixedPointFormat data_fmt;
  int tanh_bits = 8;  // requested activation table address bits
  std::vector<QuantizedBlock> blocks;
};

/// Same weight format for every block.
QuantizedWeights quantize_weights(const ValidatedNetwork& net, const WeightSet& weights, FixedPointFormat data_fmt,
                                  FixedPointFormat weight_fmt);

/// Per-block weight format from choose_weight_format.
QuantizedWeights quantize_weights(const ValidatedNetwork& net, const WeightSet& weights, FixedPointFormat data_fmt,
                                  int weight_bits);

}  // namespace dhmgen
