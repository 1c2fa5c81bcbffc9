#include "dhmgen/simulate.hpp"

#include <algorithm>
#include <deque>
#include <ostream>
#include <sstream>

#include "dhmgen/activation.hpp"
#include "dhmgen/error.hpp"

namespace dhmgen {
namespace {

void check_image(const ImageStream& img, Shape3 expected, FixedPointFormat fmt) {
  if (!(img.shape == expected))
    throw Error(ErrorCode::ShapeMismatch, "image is " + std::to_string(img.shape.channels) + "x" +
                                              std::to_string(img.shape.height) + "x" + std::to_string(img.shape.width) +
                                              ", network expects " + std::to_string(expected.channels) + "x" +
                                              std::to_string(expected.height) + "x" + std::to_string(expected.width));
  for (auto v : img.values)
    if (!fmt.contains(v))
      throw Error(ErrorCode::OutOfRange, "image pixel " + std::to_string(v) + " outside the data format");
}

void check_fits(std::int64_t v, int bits, const std::string& where) {
  if (!fits_signed(v, bits))
    throw Error(ErrorCode::OverflowDetected,
                where + ": value " + std::to_string(v) + " overflows " + std::to_string(bits) + " bits");
}

std::int64_t requantize_value(std::int64_t v, const Requantize& r) {
  return saturate(round_shift(v, r.shift), r.bits);
}

}  // namespace

std::vector<FeatureMaps> golden_forward(const ValidatedNetwork& net, const QuantizedWeights& qw,
                                        const ImageStream& img) {
  check_image(img, net.network().input_shape, qw.data_fmt);
  std::vector<FeatureMaps> outputs;
  const FeatureMaps* in = &img;
  for (std::size_t bi = 0; bi < net.block_count(); ++bi) {
    const auto& layer = net.block(bi);
    const auto& shp = net.block_shapes(bi);
    const auto& q = qw.blocks.at(bi);
    const auto& plan = q.plan;
    const int K = layer.conv.kernel;

    FeatureMaps acc(shp.conv_output);
    for (int n = 0; n < shp.conv_output.channels; ++n) {
      for (int y = 0; y < shp.conv_output.height; ++y) {
        for (int x = 0; x < shp.conv_output.width; ++x) {
          std::int64_t sum = 0;
          for (int c = 0; c < shp.input.channels; ++c) {
            std::int64_t dot = 0;
            for (int ky = 0; ky < K; ++ky)
              for (int kx = 0; kx < K; ++kx) dot += in->at(c, y + ky, x + kx) * q.weight(n, c, ky, kx);
            check_fits(dot, plan.tree_bits, layer.name + " convolution");
            sum += dot;
          }
          check_fits(sum, plan.sum_bits, layer.name + " channel sum");
          if (layer.conv.bias_enabled) {
            sum += q.biases[n];
            check_fits(sum, plan.post_bias_bits, layer.name + " bias");
          }
          acc.at(n, y, x) = sum;
        }
      }
    }
    const int width = layer.conv.bias_enabled ? plan.post_bias_bits : plan.sum_bits;

    FeatureMaps pooled = acc;
    if (layer.pool) {
      const int p = layer.pool->kernel;
      pooled = FeatureMaps(shp.output);
      for (int n = 0; n < shp.output.channels; ++n)
        for (int y = 0; y < shp.output.height; ++y)
          for (int x = 0; x < shp.output.width; ++x) {
            std::int64_t m = acc.at(n, y * p, x * p);
            for (int dy = 0; dy < p; ++dy)
              for (int dx = 0; dx < p; ++dx) m = std::max(m, acc.at(n, y * p + dy, x * p + dx));
            pooled.at(n, y, x) = m;
          }
    }

    FeatureMaps out(shp.output);
    if (layer.activation) {
      const TanhTable table =
          tanh_lut(width, plan.frac_bits, qw.data_fmt, std::min(qw.tanh_bits, std::min(width, 12)));
      for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = table.lookup(pooled.values[i]);
    } else {
      const Requantize r{plan.frac_bits - qw.data_fmt.frac_bits, qw.data_fmt.total_bits, width};
      for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = requantize_value(pooled.values[i], r);
    }
    outputs.push_back(std::move(out));
    in = &outputs.back();
  }
  return outputs;
}

namespace {

using Token = std::vector<std::int64_t>;

struct ActorState {
  std::vector<std::deque<Token>*> inputs;  // by port
  std::vector<std::deque<Token>*> outputs;
  long long position = 0;                  // tokens consumed (or emitted, for sources)
  std::vector<std::int64_t> delay;         // line buffer ring / pool partial maxima
};

class StreamEngine {
 public:
  StreamEngine(const DhmGraph& g, const ImageStream& img, std::ostream* trace)
      : g_(g), img_(img), trace_(trace), fifos_(g.edges.size()), state_(g.actors.size()) {
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      const auto& e = g.edges[i];
      auto& dst = state_[e.to].inputs;
      if (dst.size() < static_cast<std::size_t>(g.actors[e.to].input_ports))
        dst.resize(g.actors[e.to].input_ports, nullptr);
      dst[e.port] = &fifos_[i];
      state_[e.from].outputs.push_back(&fifos_[i]);
    }
    for (const auto& a : g.actors) {
      auto& s = state_[a.id];
      s.inputs.resize(a.input_ports, nullptr);
      for (auto* f : s.inputs)
        if (!f) throw Error(ErrorCode::DeadlockDetected, "input of " + a.label + " is not driven");
      if (a.kind() == ActorKind::LineBuffer) s.delay.assign(a.as<LineBufferParams>().depth(), 0);
      if (a.kind() == ActorKind::MaxPool) {
        const auto& p = a.as<MaxPoolParams>();
        s.delay.assign(std::max(1, p.width / p.pool), 0);
      }
    }
    result_.outputs.reserve(g.blocks.size());
    for (const auto& b : g.blocks) result_.outputs.emplace_back(b.output);
    sink_count_.assign(g.actors.size(), 0);
  }

  SimulationResult run() {
    const long long pixels = static_cast<long long>(g_.input.height) * g_.input.width;
    long long step = 0;
    for (; step < pixels; ++step) {
      if (trace_) *trace_ << "step " << step << "\n";
      sweep(step);
    }
    // Drain anything still in flight, then demand quiescence.
    while (sweep(step)) ++step;
    result_.steps = step;
    check_complete();
    return std::move(result_);
  }

 private:
  // One deterministic topological pass; returns whether anything fired.
  bool sweep(long long step) {
    bool any = false;
    for (const auto& a : g_.actors) {
      auto& s = state_[a.id];
      if (a.kind() == ActorKind::Source) {
        if (s.position <= step && s.position < static_cast<long long>(g_.input.height) * g_.input.width) {
          const auto& p = a.as<SourceParams>();
          const std::int64_t v = img_.values[static_cast<std::size_t>(p.channel) * p.height * p.width + s.position];
          if (trace_) *trace_ << "in " << p.channel << " " << v << "\n";
          ++s.position;
          emit(a, s, Token{v});
          any = true;
        }
        continue;
      }
      while (ready(s)) {
        fire(a, s);
        any = true;
      }
    }
    return any;
  }

  static bool ready(const ActorState& s) {
    for (auto* f : s.inputs)
      if (f->empty()) return false;
    return !s.inputs.empty();
  }

  Token pop(ActorState& s, int port) {
    Token t = std::move(s.inputs[port]->front());
    s.inputs[port]->pop_front();
    return t;
  }

  void emit(const Actor& a, ActorState& s, Token t) {
    if (a.requantize) {
      check_fits(t[0], a.requantize->from_bits, a.label);
      t[0] = requantize_value(t[0], *a.requantize);
    } else if (a.kind() != ActorKind::LineBuffer) {
      check_fits(t[0], a.out_width, a.label);
    }
    for (std::size_t i = 0; i < s.outputs.size(); ++i) {
      if (i + 1 == s.outputs.size())
        s.outputs[i]->push_back(std::move(t));
      else
        s.outputs[i]->push_back(t);
    }
  }

  void fire(const Actor& a, ActorState& s) {
    ++result_.firings;
    switch (a.kind()) {
      case ActorKind::LineBuffer: {
        const auto& p = a.as<LineBufferParams>();
        const Token px = pop(s, 0);
        const long long t = s.position++;
        const auto depth = static_cast<long long>(s.delay.size());
        s.delay[t % depth] = px[0];
        const long long y = t / p.width;
        const long long x = t % p.width;
        if (y >= p.kernel - 1 && x >= p.kernel - 1) {
          Token w(static_cast<std::size_t>(p.kernel) * p.kernel);
          for (int ky = 0; ky < p.kernel; ++ky)
            for (int kx = 0; kx < p.kernel; ++kx) {
              const long long back = static_cast<long long>(p.kernel - 1 - ky) * p.width + (p.kernel - 1 - kx);
              w[ky * p.kernel + kx] = s.delay[(t - back) % depth];
            }
          emit(a, s, std::move(w));
        }
        break;
      }
      case ActorKind::ConvEngine: {
        const auto& p = a.as<ConvEngineParams>();
        const Token w = pop(s, 0);
        std::int64_t acc = 0;
        for (const auto& c : p.cells) acc += c.apply(w[c.tap]);
        emit(a, s, Token{acc});
        break;
      }
      case ActorKind::ChannelSum: {
        std::int64_t acc = 0;
        for (int port = 0; port < a.input_ports; ++port) acc += pop(s, port)[0];
        emit(a, s, Token{acc});
        break;
      }
      case ActorKind::BiasAdd: {
        emit(a, s, Token{pop(s, 0)[0] + a.as<BiasAddParams>().bias});
        break;
      }
      case ActorKind::MaxPool: {
        const auto& p = a.as<MaxPoolParams>();
        const std::int64_t v = pop(s, 0)[0];
        const long long t = s.position++;
        const long long y = t / p.width;
        const long long x = t % p.width;
        const long long out_h = p.height / p.pool;
        const long long out_w = p.width / p.pool;
        if (y >= out_h * p.pool || x >= out_w * p.pool) break;
        const auto j = static_cast<std::size_t>(x / p.pool);
        if (y % p.pool == 0 && x % p.pool == 0)
          s.delay[j] = v;
        else
          s.delay[j] = std::max(s.delay[j], v);
        if (y % p.pool == p.pool - 1 && x % p.pool == p.pool - 1) emit(a, s, Token{s.delay[j]});
        break;
      }
      case ActorKind::TanhLut: {
        emit(a, s, Token{a.as<TanhLutParams>().table.lookup(pop(s, 0)[0])});
        break;
      }
      case ActorKind::Sink: {
        const auto& p = a.as<SinkParams>();
        const std::int64_t v = pop(s, 0)[0];
        const long long k = sink_count_[a.id]++;
        if (k >= static_cast<long long>(p.height) * p.width)
          throw Error(ErrorCode::DeadlockDetected, a.label + " received more tokens than its map holds");
        result_.outputs[a.block].at(p.output, static_cast<int>(k / p.width), static_cast<int>(k % p.width)) = v;
        if (trace_) *trace_ << "out " << a.label << " " << k / p.width << " " << k % p.width << " " << v << "\n";
        break;
      }
      case ActorKind::Source: break;
    }
  }

  void check_complete() const {
    for (const auto& a : g_.actors) {
      if (a.kind() != ActorKind::Sink) continue;
      const auto& p = a.as<SinkParams>();
      if (sink_count_[a.id] != static_cast<long long>(p.height) * p.width)
        throw Error(ErrorCode::DeadlockDetected, a.label + " collected " + std::to_string(sink_count_[a.id]) + " of " +
                                                     std::to_string(p.height * p.width) + " tokens");
    }
    for (std::size_t i = 0; i < fifos_.size(); ++i)
      if (!fifos_[i].empty())
        throw Error(ErrorCode::DeadlockDetected, "tokens stranded on edge " + g_.actors[g_.edges[i].from].label +
                                                     " -> " + g_.actors[g_.edges[i].to].label);
  }

  const DhmGraph& g_;
  const ImageStream& img_;
  std::ostream* trace_;
  std::vector<std::deque<Token>> fifos_;
  std::vector<ActorState> state_;
  std::vector<long long> sink_count_;
  SimulationResult result_;
};

}  // namespace

SimulationResult run_stream(const DhmGraph& g, const ImageStream& img, std::ostream* trace) {
  check_image(img, g.input, g.data_fmt);
  if (trace) *trace << "# dhm-trace v1 input " << g.input.channels << "x" << g.input.height << "x" << g.input.width << "\n";
  return StreamEngine(g, img, trace).run();
}

std::vector<FeatureMaps> stream_simulate(const DhmGraph& g, const ImageStream& img) {
  return run_stream(g, img).outputs;
}

DiffReport compare(const std::vector<FeatureMaps>& a, const std::vector<FeatureMaps>& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::ShapeMismatch,
                "block count differs: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  DiffReport r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].shape == b[i].shape) || a[i].values.size() != b[i].values.size())
      throw Error(ErrorCode::ShapeMismatch, "block " + std::to_string(i) + " output shapes differ");
    BlockDiff d;
    const auto& s = a[i].shape;
    for (int c = 0; c < s.channels; ++c)
      for (int y = 0; y < s.height; ++y)
        for (int x = 0; x < s.width; ++x) {
          const std::int64_t diff = a[i].at(c, y, x) - b[i].at(c, y, x);
          if (diff == 0) continue;
          ++d.mismatches;
          d.max_abs_diff = std::max(d.max_abs_diff, diff < 0 ? -diff : diff);
          if (!d.first_mismatch) d.first_mismatch = std::array<int, 3>{c, y, x};
        }
    if (d.mismatches) r.equal = false;
    r.blocks.push_back(d);
  }
  return r;
}

std::string format_diff(const DiffReport& r) {
  std::ostringstream os;
  for (std::size_t i = 0; i < r.blocks.size(); ++i) {
    const auto& d = r.blocks[i];
    os << "block " << i << ": max|diff|=" << d.max_abs_diff << " mismatches=" << d.mismatches;
    if (d.first_mismatch)
      os << " first at (" << (*d.first_mismatch)[0] << "," << (*d.first_mismatch)[1] << ","
         << (*d.first_mismatch)[2] << ")";
    os << "\n";
  }
  return os.str();
}

}  // namespace dhmgen
