#include "dhmgen/activation.hpp"

#include <algorithm>
#include <cmath>

#include "dhmgen/error.hpp"

namespace dhmgen {

std::int64_t TanhTable::index_of(std::int64_t acc) const {
  const std::int64_t rounded = shift > 0 ? (acc + (std::int64_t{1} << (shift - 1))) >> shift : acc;
  return std::clamp(rounded, min_index(), max_index());
}

TanhTable tanh_lut(int input_bits, int input_frac_bits, FixedPointFormat data_fmt, int address_bits) {
  if (address_bits < 4 || address_bits > std::min(input_bits, 12))
    throw Error(ErrorCode::OutOfRange, "tanh address bits " + std::to_string(address_bits) + " outside [4, " +
                                           std::to_string(std::min(input_bits, 12)) + "]");
  TanhTable t;
  t.address_bits = address_bits;
  t.input_bits = input_bits;
  t.input_frac_bits = input_frac_bits;
  t.shift = input_bits - address_bits;
  t.out_fmt = data_fmt;
  t.entries.reserve(std::size_t{1} << address_bits);
  for (std::int64_t i = t.min_index(); i <= t.max_index(); ++i) {
    const double x = std::ldexp(static_cast<double>(i), t.shift - input_frac_bits);
    t.entries.push_back(quantize(std::tanh(x), data_fmt));
  }
  return t;
}

TanhTable tanh_lut(const AccumulatorPlan& plan, FixedPointFormat data_fmt, int address_bits) {
  return tanh_lut(plan.post_bias_bits, plan.frac_bits, data_fmt, address_bits);
}

}  // namespace dhmgen
