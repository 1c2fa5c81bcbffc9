#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dhmgen/graph.hpp"

namespace dhmgen {

/// Structural resource counts for one block (or the whole graph). Logic is
/// priced with a unit model: a generic a x b constant multiplier costs a*b,
/// a w-bit adder costs w, wires and shifts are free.
struct BlockResources {
  std::string name;
  long long removed_cells = 0;  // zero constants
  long long wire_cells = 0;
  long long shift_cells = 0;
  long long generic_cells = 0;
  long long adder_cells = 0;  // two-input
  long long adder_bits = 0;   // sum of adder widths
  long long line_buffer_bits = 0;
  long long window_register_bits = 0;
  long long tanh_rom_bits = 0;
  long long pool_buffer_bits = 0;
  long long multiplier_units = 0;

  long long adder_units() const { return adder_bits; }
  long long logic_units() const { return multiplier_units + adder_units(); }
  long long memory_bits() const { return line_buffer_bits + window_register_bits + tanh_rom_bits + pool_buffer_bits; }

  BlockResources& operator+=(const BlockResources& o);
  friend bool operator==(const BlockResources&, const BlockResources&) = default;
};

struct ResourceReport {
  std::vector<BlockResources> blocks;
  BlockResources total;
  long long dsp_blocks = 0;  // constant multipliers never map to DSP slices
};

ResourceReport estimate(const DhmGraph& g);

struct StrategyReport {
  ResourceReport unspecialized;
  ResourceReport specialized;
  /// Generic-multiplier cost before / after; empty when the specialized cost
  /// is zero (unbounded reduction).
  std::optional<double> multiplier_ratio;
  std::optional<double> logic_ratio;
};

/// Both graphs must come from the same network and weights; GraphMismatch
/// otherwise.
StrategyReport compare_strategies(const DhmGraph& unspecialized, const DhmGraph& specialized);

std::string format_report_text(const ResourceReport& r);
std::string format_report_json(const ResourceReport& r);
std::string format_strategy_text(const StrategyReport& s);
std::string format_strategy_json(const StrategyReport& s);

}  // namespace dhmgen
