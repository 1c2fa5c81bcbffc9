#pragma once

#include <cstdint>
#include <vector>

#include "dhmgen/fixed_point.hpp"

namespace dhmgen {

/// Tanh ROM addressed by the rounded top `address_bits` bits of a wide
/// accumulator. Index i stands for the accumulator value i * 2^shift, so
/// entry(0) is exactly 0.
struct TanhTable {
  int address_bits = 0;
  int input_bits = 0;
  int input_frac_bits = 0;
  int shift = 0;  // input_bits - address_bits
  FixedPointFormat out_fmt;
  std::vector<std::int64_t> entries;  // entries[index - min_index()]

  std::int64_t min_index() const { return -(std::int64_t{1} << (address_bits - 1)); }
  std::int64_t max_index() const { return (std::int64_t{1} << (address_bits - 1)) - 1; }
  std::size_t size() const { return entries.size(); }

  std::int64_t index_of(std::int64_t acc) const;
  std::int64_t entry(std::int64_t index) const { return entries.at(static_cast<std::size_t>(index - min_index())); }
  std::int64_t lookup(std::int64_t acc) const { return entry(index_of(acc)); }

  friend bool operator==(const TanhTable&, const TanhTable&) = default;
};

/// Requires 4 <= address_bits <= min(input_bits, 12).
TanhTable tanh_lut(int input_bits, int input_frac_bits, FixedPointFormat data_fmt, int address_bits);

/// Table addressed by the post-bias accumulator of `plan`.
TanhTable tanh_lut(const AccumulatorPlan& plan, FixedPointFormat data_fmt, int address_bits);

}  // namespace dhmgen
