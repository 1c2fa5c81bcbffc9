#include "dhmgen/fixed_point.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>

#include "dhmgen/error.hpp"

namespace dhmgen {

FixedPointFormat FixedPointFormat::make(int total_bits, int frac_bits) {
  if (total_bits < 2 || total_bits > 32)
    throw Error(ErrorCode::OutOfRange, "bit-width " + std::to_string(total_bits) + " outside [2, 32]");
  if (frac_bits < 0 || frac_bits > total_bits - 1)
    throw Error(ErrorCode::OutOfRange, "fractional bits " + std::to_string(frac_bits) + " outside [0, " +
                                           std::to_string(total_bits - 1) + "]");
  return FixedPointFormat{total_bits, frac_bits};
}

double FixedPointFormat::min_real() const { return std::ldexp(static_cast<double>(min_int()), -frac_bits); }
double FixedPointFormat::max_real() const { return std::ldexp(static_cast<double>(max_int()), -frac_bits); }

std::int64_t quantize(double x, FixedPointFormat fmt) {
  if (std::isnan(x)) return 0;
  const double scaled = std::ldexp(x, fmt.frac_bits);
  if (scaled <= static_cast<double>(fmt.min_int())) return fmt.min_int();
  if (scaled >= static_cast<double>(fmt.max_int())) return fmt.max_int();
  // Default FE_TONEAREST gives ties-to-even.
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  const double r = std::nearbyint(scaled);
  std::fesetround(saved);
  return std::clamp(static_cast<std::int64_t>(r), fmt.min_int(), fmt.max_int());
}

double dequantize(std::int64_t i, FixedPointFormat fmt) {
  if (!fmt.contains(i))
    throw Error(ErrorCode::OutOfRange, "integer " + std::to_string(i) + " outside " +
                                           std::to_string(fmt.total_bits) + "-bit range");
  return std::ldexp(static_cast<double>(i), -fmt.frac_bits);
}

std::int64_t round_shift(std::int64_t v, int shift) {
  if (shift <= 0) return v;
  const std::int64_t q = v >> shift;  // floor
  const std::int64_t r = v - (q << shift);
  const std::int64_t half = std::int64_t{1} << (shift - 1);
  if (r > half || (r == half && (q & 1) != 0)) return q + 1;
  return q;
}

std::int64_t saturate(std::int64_t v, int bits) {
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  return std::clamp(v, -hi - 1, hi);
}

bool fits_signed(std::int64_t v, int bits) {
  if (bits >= 64) return true;
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  return v >= -hi - 1 && v <= hi;
}

int ceil_log2(std::int64_t v) {
  int r = 0;
  while ((std::int64_t{1} << r) < v) ++r;
  return r;
}

AccumulatorPlan accumulator_plan(int kernel, int channels, FixedPointFormat data_fmt, FixedPointFormat weight_fmt) {
  AccumulatorPlan p;
  p.product_bits = data_fmt.total_bits + weight_fmt.total_bits;
  p.tree_bits = p.product_bits + ceil_log2(static_cast<std::int64_t>(kernel) * kernel);
  p.sum_bits = p.tree_bits + ceil_log2(channels);
  p.post_bias_bits = p.sum_bits + 1;
  p.frac_bits = data_fmt.frac_bits + weight_fmt.frac_bits;
  if (p.post_bias_bits > 63)
    throw Error(ErrorCode::AccumulatorTooWide,
                "accumulator needs " + std::to_string(p.post_bias_bits) + " bits; at most 63 are supported");
  return p;
}

AccumulatorPlan accumulator_plan(const LayerBlock& block, int channels, FixedPointFormat data_fmt,
                                 FixedPointFormat weight_fmt) {
  return accumulator_plan(block.conv.kernel, channels, data_fmt, weight_fmt);
}

namespace {

FixedPointFormat format_for_max(double max_abs, int bits) {
  if (bits < 2 || bits > 32) throw Error(ErrorCode::OutOfRange, "bit-width " + std::to_string(bits) + " outside [2, 32]");
  // Finest binary point at which the rounded magnitude still fits; the
  // negative extreme is not exploited so +m and -m both survive.
  const double limit = std::ldexp(1.0, bits - 1) - 1.0;
  int f = bits - 1;
  while (f > 0 && std::nearbyint(std::ldexp(max_abs, f)) > limit) --f;
  return FixedPointFormat::make(bits, f);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

QuantizedBlock quantize_block(const BlockWeights& bw, bool bias_enabled, FixedPointFormat data_fmt,
                              FixedPointFormat weight_fmt) {
  QuantizedBlock q;
  q.num_outputs = bw.num_outputs;
  q.channels = bw.channels;
  q.kernel = bw.kernel;
  q.bias_enabled = bias_enabled;
  q.weight_fmt = weight_fmt;
  q.plan = accumulator_plan(bw.kernel, bw.channels, data_fmt, weight_fmt);
  q.weights.reserve(bw.weights.size());
  for (double w : bw.weights) q.weights.push_back(quantize(w, weight_fmt));
  // Biases live at the accumulator's binary point so the add is exact.
  const FixedPointFormat bias_fmt{q.plan.sum_bits, q.plan.frac_bits};
  q.biases.assign(bw.num_outputs, 0);
  if (bias_enabled)
    for (int n = 0; n < bw.num_outputs; ++n) q.biases[n] = quantize(bw.biases[n], bias_fmt);
  return q;
}

void check_dims(const ValidatedNetwork& net, const WeightSet& ws) {
  if (ws.blocks.size() != net.block_count())
    throw Error(ErrorCode::SizeMismatch, "weight set has " + std::to_string(ws.blocks.size()) + " blocks, network has " +
                                             std::to_string(net.block_count()));
}

}  // namespace

FixedPointFormat choose_weight_format(const BlockWeights& weights, int bits) {
  if (weights.weights.empty()) throw Error(ErrorCode::EmptyWeights, "block has no weights");
  return format_for_max(max_abs(weights.weights), bits);
}

FixedPointFormat choose_weight_format(const WeightSet& weights, int bits) {
  double m = 0.0;
  bool any = false;
  for (const auto& b : weights.blocks) {
    any = any || !b.weights.empty();
    m = std::max(m, max_abs(b.weights));
  }
  if (!any) throw Error(ErrorCode::EmptyWeights, "weight set is empty");
  return format_for_max(m, bits);
}

QuantizedWeights quantize_weights(const ValidatedNetwork& net, const WeightSet& weights, FixedPointFormat data_fmt,
                                  FixedPointFormat weight_fmt) {
  check_dims(net, weights);
  QuantizedWeights qw;
  qw.data_fmt = data_fmt;
  for (std::size_t i = 0; i < net.block_count(); ++i)
    qw.blocks.push_back(quantize_block(weights.blocks[i], net.block(i).conv.bias_enabled, data_fmt, weight_fmt));
  return qw;
}

QuantizedWeights quantize_weights(const ValidatedNetwork& net, const WeightSet& weights, FixedPointFormat data_fmt,
                                  int weight_bits) {
  check_dims(net, weights);
  QuantizedWeights qw;
  qw.data_fmt = data_fmt;
  for (std::size_t i = 0; i < net.block_count(); ++i)
    qw.blocks.push_back(quantize_block(weights.blocks[i], net.block(i).conv.bias_enabled, data_fmt,
                                       choose_weight_format(weights.blocks[i], weight_bits)));
  return qw;
}

}  // namespace dhmgen
