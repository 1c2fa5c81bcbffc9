#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dhmgen/activation.hpp"
#include "dhmgen/fixed_point.hpp"
#include "dhmgen/network.hpp"

namespace dhmgen {

enum class ActorKind { Source, LineBuffer, ConvEngine, ChannelSum, BiasAdd, TanhLut, MaxPool, Sink };

std::string_view to_string(ActorKind kind);

/// How a constant-multiplier cell is realized. Zero cells are removed by
/// specialization rather than represented.
enum class CellOp { Multiply, Wire, Shift };

struct MultCell {
  int tap = 0;  // ky * K + kx
  std::int64_t constant = 0;
  CellOp op = CellOp::Multiply;
  int shift = 0;        // Shift only
  bool negate = false;  // Wire/Shift: term enters the adder tree subtracted

  std::int64_t apply(std::int64_t x) const;

  friend bool operator==(const MultCell&, const MultCell&) = default;
};

struct SourceParams {
  int channel = 0;
  int height = 0;
  int width = 0;
  friend bool operator==(const SourceParams&, const SourceParams&) = default;
};

struct LineBufferParams {
  int channel = 0;
  int kernel = 0;
  int height = 0;  // input image
  int width = 0;
  /// Delay-line length: (K-1) rows plus K window registers.
  int depth() const { return (kernel - 1) * width + kernel; }
  friend bool operator==(const LineBufferParams&, const LineBufferParams&) = default;
};

struct ConvEngineParams {
  int output = 0;
  int channel = 0;
  int kernel = 0;
  std::vector<std::int64_t> constants;  // K*K, row-major
  std::vector<MultCell> cells;          // empty: constant-zero engine
  friend bool operator==(const ConvEngineParams&, const ConvEngineParams&) = default;
};

struct ChannelSumParams {
  int output = 0;
  int arity = 0;
  friend bool operator==(const ChannelSumParams&, const ChannelSumParams&) = default;
};

struct BiasAddParams {
  int output = 0;
  std::int64_t bias = 0;
  friend bool operator==(const BiasAddParams&, const BiasAddParams&) = default;
};

struct MaxPoolParams {
  int output = 0;
  int pool = 2;  // kernel == stride
  int height = 0;  // input map
  int width = 0;
  friend bool operator==(const MaxPoolParams&, const MaxPoolParams&) = default;
};

struct TanhLutParams {
  int output = 0;
  TanhTable table;
  friend bool operator==(const TanhLutParams&, const TanhLutParams&) = default;
};

struct SinkParams {
  int output = 0;
  int height = 0;
  int width = 0;
  friend bool operator==(const SinkParams&, const SinkParams&) = default;
};

using ActorParams = std::variant<SourceParams, LineBufferParams, ConvEngineParams, ChannelSumParams, BiasAddParams,
                                 TanhLutParams, MaxPoolParams, SinkParams>;

/// Round-and-saturate from the accumulator binary point to the data format,
/// applied to the output of the last actor of a block without activation.
struct Requantize {
  int shift = 0;
  int bits = 0;
  int from_bits = 0;  // accumulator width before rounding
  friend bool operator==(const Requantize&, const Requantize&) = default;
};

struct Actor {
  int id = 0;
  int block = -1;  // -1 for sources
  std::string label;
  int input_ports = 0;
  int in_width = 0;
  int out_width = 0;
  int out_lanes = 1;  // LineBuffer: K*K window elements
  std::optional<Requantize> requantize;
  ActorParams params;

  ActorKind kind() const { return static_cast<ActorKind>(params.index()); }

  template <typename P>
  const P& as() const {
    return std::get<P>(params);
  }
  template <typename P>
  P& as() {
    return std::get<P>(params);
  }

  friend bool operator==(const Actor&, const Actor&) = default;
};

struct Edge {
  int from = 0;
  int to = 0;
  int port = 0;
  int width = 0;
  int lanes = 1;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct GraphBlock {
  std::string name;   // layer name as declared
  std::string label;  // identifier-safe
  int num_outputs = 0;
  int channels = 0;
  int kernel = 0;
  bool has_bias = false;
  bool has_pool = false;
  bool has_activation = false;
  Shape3 input;
  Shape3 output;
  FixedPointFormat weight_fmt;
  AccumulatorPlan plan;
  int first_actor = 0;
  int end_actor = 0;  // one past the last actor of this block
  friend bool operator==(const GraphBlock&, const GraphBlock&) = default;
};

/// Fully expanded direct-hardware-mapped actor network. Actors are stored in a
/// topological order; edges reference actor ids (== index).
struct DhmGraph {
  std::string network_name;
  Shape3 input;
  FixedPointFormat data_fmt;
  std::vector<GraphBlock> blocks;
  std::vector<Actor> actors;
  std::vector<Edge> edges;

  /// Edges feeding `actor`, ordered by port.
  std::vector<const Edge*> inputs_of(int actor) const;
  std::vector<int> sources() const;
  /// Sink ids of block b ordered by output map.
  std::vector<int> sinks(int block) const;

  friend bool operator==(const DhmGraph&, const DhmGraph&) = default;
};

DhmGraph expand(const ValidatedNetwork& net, const QuantizedWeights& qw);

struct GraphStats {
  std::map<ActorKind, int> actors_by_kind;
  long long multiplier_cells = 0;  // cells still present (any realization)
  long long generic_cells = 0;
  long long wire_cells = 0;
  long long shift_cells = 0;
  long long removed_cells = 0;  // zero constants deleted by specialization
  long long adder_cells = 0;    // two-input adders
  long long adder_trees = 0;    // engines summing two or more terms
  long long line_buffer_bits = 0;
  long long window_register_bits = 0;
  int pipeline_depth = 0;

  int count(ActorKind k) const {
    auto it = actors_by_kind.find(k);
    return it == actors_by_kind.end() ? 0 : it->second;
  }
};

GraphStats graph_stats(const DhmGraph& g);

/// Structural self-check of the invariants expand guarantees; returns the
/// list of violations (empty when sound).
std::vector<std::string> check_graph(const DhmGraph& g);

/// Deterministic text listing, one actor per line followed by the edges.
std::string dump_graph(const DhmGraph& g);

}  // namespace dhmgen
