#pragma once

#include <cstdint>
#include <string>

#include "dhmgen/fixed_point.hpp"
#include "dhmgen/graph.hpp"

namespace dhmgen {

/// Realization class of a multiplication by a compile-time integer constant.
struct MultKind {
  enum class Tag { Zero, One, Pow2, Generic };

  Tag tag = Tag::Zero;
  int sign = 1;   // One, Pow2
  int shift = 0;  // Pow2: |c| == 2^shift, shift >= 1
  std::int64_t constant = 0;

  friend bool operator==(const MultKind&, const MultKind&) = default;
};

MultKind classify_weight(std::int64_t c);

/// Rewrite every constant-multiplier cell according to its MultKind: zero
/// cells disappear, +-1 becomes a wire, +-2^s a shift, anything else stays a
/// constant multiplier. Idempotent and value-preserving.
DhmGraph specialize_graph(const DhmGraph& g);

struct ClassStats {
  long long zero = 0;
  long long one = 0;
  long long pow2 = 0;
  long long other = 0;

  long long total() const { return zero + one + pow2 + other; }
  /// Share in percent, rounded to 2 decimals.
  double percent(long long count) const;
};

/// Counts over every conv weight (biases excluded).
ClassStats param_stats(const QuantizedWeights& qw);

std::string format_stats_text(const ClassStats& s);
std::string format_stats_json(const ClassStats& s);

}  // namespace dhmgen
