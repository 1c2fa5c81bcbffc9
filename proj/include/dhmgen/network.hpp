#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dhmgen {

/// Channel-major tensor shape of a feature-map stack.
struct Shape3 {
  int channels = 0;
  int height = 0;
  int width = 0;

  friend bool operator==(const Shape3&, const Shape3&) = default;
};

struct ConvSpec {
  int num_outputs = 0;  // N
  int kernel = 0;       // K, odd
  bool bias_enabled = true;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

enum class PoolMethod { Max };

/// Non-overlapping pooling: kernel == stride.
struct PoolSpec {
  int kernel = 2;
  int stride = 2;
  PoolMethod method = PoolMethod::Max;
  std::string name;
  std::string bottom;
  std::string top;

  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

enum class ActivationKind { Tanh };

struct ActivationSpec {
  ActivationKind kind = ActivationKind::Tanh;
  std::string name;
  std::string bottom;
  std::string top;

  friend bool operator==(const ActivationSpec&, const ActivationSpec&) = default;
};

/// conv -> optional pool -> optional activation. The block takes the conv
/// layer's name.
struct LayerBlock {
  std::string name;
  std::string bottom;  // empty: chains implicitly
  std::string top;
  ConvSpec conv;
  std::optional<PoolSpec> pool;
  std::optional<ActivationSpec> activation;

  friend bool operator==(const LayerBlock&, const LayerBlock&) = default;
};

struct Network {
  std::string name;
  std::string input_name;
  Shape3 input_shape;
  std::vector<LayerBlock> blocks;

  friend bool operator==(const Network&, const Network&) = default;
};

struct BlockShapes {
  Shape3 input;
  Shape3 conv_output;
  Shape3 output;  // after pooling, if any
};

/// A network whose shapes have been propagated and channel chaining checked.
class ValidatedNetwork {
 public:
  const Network& network() const noexcept { return net_; }
  const std::vector<BlockShapes>& shapes() const noexcept { return shapes_; }
  std::size_t block_count() const noexcept { return net_.blocks.size(); }
  const LayerBlock& block(std::size_t i) const { return net_.blocks.at(i); }
  const BlockShapes& block_shapes(std::size_t i) const { return shapes_.at(i); }

  /// Constant multiplications of block i: N * C * K * K.
  long long multiplications(std::size_t i) const;

 private:
  friend ValidatedNetwork validate(const Network& net);
  Network net_;
  std::vector<BlockShapes> shapes_;
};

/// Parse the prototxt-subset topology format. `source_name` prefixes error
/// locations.
Network parse_network(std::string_view text, std::string_view source_name = "<input>");

/// Canonical text form; reparses to an equal Network.
std::string serialize_network(const Network& net);

ValidatedNetwork validate(const Network& net);

}  // namespace dhmgen
