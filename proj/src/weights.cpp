#include "dhmgen/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "dhmgen/error.hpp"

namespace dhmgen {
namespace {

static_assert(std::endian::native == std::endian::little, "weight container I/O assumes a little-endian host");

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T read(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T))
      throw Error(ErrorCode::TruncatedFile, std::string("weight file truncated while reading ") + what + " at byte " +
                                                std::to_string(pos_));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

}  // namespace

WeightSet load_weights(std::span<const std::uint8_t> bytes, const ValidatedNetwork& net) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, "weight file does not start with magic \"HWF1\"");
  Reader r(bytes.subspan(4));
  const auto count = r.read<std::uint32_t>("block count");
  if (count != net.block_count())
    throw Error(ErrorCode::SizeMismatch, "weight file holds " + std::to_string(count) + " blocks, network expects " +
                                             std::to_string(net.block_count()));
  WeightSet ws;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& shp = net.block_shapes(i);
    const auto& blk = net.block(i);
    BlockWeights bw;
    bw.num_outputs = static_cast<int>(r.read<std::uint32_t>("N"));
    bw.channels = static_cast<int>(r.read<std::uint32_t>("C"));
    bw.kernel = static_cast<int>(r.read<std::uint32_t>("K"));
    if (bw.num_outputs != blk.conv.num_outputs || bw.channels != shp.input.channels || bw.kernel != blk.conv.kernel)
      throw Error(ErrorCode::SizeMismatch,
                  "block '" + blk.name + "': weight file declares N,C,K = " + std::to_string(bw.num_outputs) + "," +
                      std::to_string(bw.channels) + "," + std::to_string(bw.kernel) + ", network expects " +
                      std::to_string(blk.conv.num_outputs) + "," + std::to_string(shp.input.channels) + "," +
                      std::to_string(blk.conv.kernel));
    const std::size_t nw = static_cast<std::size_t>(bw.num_outputs) * bw.channels * bw.kernel * bw.kernel;
    const std::size_t need = (nw + bw.num_outputs) * sizeof(double);
    if (r.remaining() < need)
      throw Error(ErrorCode::TruncatedFile, "block '" + blk.name + "': expected " + std::to_string(nw) +
                                                " weights + " + std::to_string(bw.num_outputs) + " biases, only " +
                                                std::to_string(r.remaining() / sizeof(double)) + " values remain");
    bw.weights.resize(nw);
    for (auto& w : bw.weights) w = r.read<double>("weight");
    bw.biases.resize(bw.num_outputs);
    for (auto& b : bw.biases) b = r.read<double>("bias");
    for (double v : bw.weights)
      if (!std::isfinite(v)) throw Error(ErrorCode::BadValue, "block '" + blk.name + "': non-finite weight");
    for (double v : bw.biases)
      if (!std::isfinite(v)) throw Error(ErrorCode::BadValue, "block '" + blk.name + "': non-finite bias");
    ws.blocks.push_back(std::move(bw));
  }
  if (r.remaining() != 0)
    throw Error(ErrorCode::SizeMismatch, std::to_string(r.remaining()) + " trailing bytes after the last block");
  return ws;
}

WeightSet load_weights_file(const std::string& path, const ValidatedNetwork& net) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path + ": cannot open weight file");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return load_weights(bytes, net);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

std::vector<std::uint8_t> save_weights(const WeightSet& ws) {
  std::vector<std::uint8_t> out(kWeightMagic, kWeightMagic + 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ws.blocks.size()));
  for (const auto& b : ws.blocks) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.num_outputs));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.channels));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(b.kernel));
    for (double w : b.weights) put(out, w);
    for (double v : b.biases) put(out, v);
  }
  return out;
}

WeightSet make_weight_set(const ValidatedNetwork& net) {
  WeightSet ws;
  for (std::size_t i = 0; i < net.block_count(); ++i) {
    BlockWeights b;
    b.num_outputs = net.block(i).conv.num_outputs;
    b.channels = net.block_shapes(i).input.channels;
    b.kernel = net.block(i).conv.kernel;
    b.weights.assign(static_cast<std::size_t>(b.num_outputs) * b.channels * b.kernel * b.kernel, 0.0);
    b.biases.assign(b.num_outputs, 0.0);
    ws.blocks.push_back(std::move(b));
  }
  return ws;
}

WeightSet random_weights(const ValidatedNetwork& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 0.25);
  WeightSet ws = make_weight_set(net);
  for (auto& b : ws.blocks) {
    for (auto& w : b.weights) w = dist(rng);
    for (auto& v : b.biases) v = dist(rng);
  }
  return ws;
}

}  // namespace dhmgen
