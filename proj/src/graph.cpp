#include "dhmgen/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "dhmgen/error.hpp"
#include "dhmgen/identifier.hpp"

namespace dhmgen {

std::string_view to_string(ActorKind kind) {
  switch (kind) {
    case ActorKind::Source: return "Source";
    case ActorKind::LineBuffer: return "LineBuffer";
    case ActorKind::ConvEngine: return "ConvEngine";
    case ActorKind::ChannelSum: return "ChannelSum";
    case ActorKind::BiasAdd: return "BiasAdd";
    case ActorKind::TanhLut: return "TanhLut";
    case ActorKind::MaxPool: return "MaxPool";
    case ActorKind::Sink: return "Sink";
  }
  return "?";
}

std::int64_t MultCell::apply(std::int64_t x) const {
  switch (op) {
    case CellOp::Multiply: return x * constant;
    case CellOp::Wire: return negate ? -x : x;
    case CellOp::Shift: {
      const std::int64_t v = x * (std::int64_t{1} << shift);
      return negate ? -v : v;
    }
  }
  return 0;
}

std::vector<const Edge*> DhmGraph::inputs_of(int actor) const {
  std::vector<const Edge*> out;
  for (const auto& e : edges)
    if (e.to == actor) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const Edge* a, const Edge* b) { return a->port < b->port; });
  return out;
}

std::vector<int> DhmGraph::sources() const {
  std::vector<int> out;
  for (const auto& a : actors)
    if (a.kind() == ActorKind::Source) out.push_back(a.id);
  return out;
}

std::vector<int> DhmGraph::sinks(int block) const {
  std::vector<int> out;
  for (const auto& a : actors)
    if (a.kind() == ActorKind::Sink && a.block == block) out.push_back(a.id);
  return out;
}

namespace {

class Builder {
 public:
  explicit Builder(DhmGraph& g) : g_(g) {}

  int add(int block, std::string label, int ports, int in_width, int out_width, ActorParams params, int lanes = 1) {
    Actor a;
    a.id = static_cast<int>(g_.actors.size());
    a.block = block;
    a.label = std::move(label);
    a.input_ports = ports;
    a.in_width = in_width;
    a.out_width = out_width;
    a.out_lanes = lanes;
    a.params = std::move(params);
    g_.actors.push_back(std::move(a));
    return g_.actors.back().id;
  }

  void connect(int from, int to, int port) {
    const auto& p = g_.actors[from];
    g_.edges.push_back(Edge{from, to, port, p.out_width, p.out_lanes});
  }

  Actor& actor(int id) { return g_.actors[id]; }

 private:
  DhmGraph& g_;
};

std::string unique_label(const std::string& base, std::set<std::string>& used) {
  std::string label = base;
  for (int i = 2; !used.insert(label).second; ++i) label = base + "_" + std::to_string(i);
  return label;
}

}  // namespace

DhmGraph expand(const ValidatedNetwork& net, const QuantizedWeights& qw) {
  if (qw.blocks.size() != net.block_count())
    throw Error(ErrorCode::SizeMismatch, "quantized weights hold " + std::to_string(qw.blocks.size()) +
                                             " blocks, network has " + std::to_string(net.block_count()));
  DhmGraph g;
  g.network_name = net.network().name;
  g.input = net.network().input_shape;
  g.data_fmt = qw.data_fmt;
  Builder b(g);
  const int bd = qw.data_fmt.total_bits;

  std::vector<int> stream;  // producer per channel feeding the next block
  for (int c = 0; c < g.input.channels; ++c)
    stream.push_back(b.add(-1, "src_c" + std::to_string(c), 0, 0, bd,
                           SourceParams{c, g.input.height, g.input.width}));

  std::set<std::string> used_labels{"src"};
  for (std::size_t bi = 0; bi < net.block_count(); ++bi) {
    const auto& layer = net.block(bi);
    const auto& shp = net.block_shapes(bi);
    const auto& q = qw.blocks[bi];
    const int blk = static_cast<int>(bi);
    const int N = layer.conv.num_outputs;
    const int C = shp.input.channels;
    const int K = layer.conv.kernel;
    if (q.num_outputs != N || q.channels != C || q.kernel != K)
      throw Error(ErrorCode::SizeMismatch, "block '" + layer.name + "': quantized weight dims do not match the network");

    GraphBlock gb;
    gb.name = layer.name;
    gb.label = unique_label(make_identifier(layer.name), used_labels);
    gb.num_outputs = N;
    gb.channels = C;
    gb.kernel = K;
    gb.has_bias = layer.conv.bias_enabled;
    gb.has_pool = layer.pool.has_value();
    gb.has_activation = layer.activation.has_value();
    gb.input = shp.input;
    gb.output = shp.output;
    gb.weight_fmt = q.weight_fmt;
    gb.plan = q.plan;
    gb.first_actor = static_cast<int>(g.actors.size());
    const auto& plan = q.plan;
    const std::string& L = gb.label;

    std::vector<int> lbs(C);
    for (int c = 0; c < C; ++c) {
      lbs[c] = b.add(blk, L + "_lb_c" + std::to_string(c), 1, bd, bd,
                     LineBufferParams{c, K, shp.input.height, shp.input.width}, K * K);
      b.connect(stream[c], lbs[c], 0);
    }

    std::vector<int> engines(static_cast<std::size_t>(N) * C);
    for (int n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        ConvEngineParams p{n, c, K, {}, {}};
        for (int ky = 0; ky < K; ++ky) {
          for (int kx = 0; kx < K; ++kx) {
            const std::int64_t w = q.weight(n, c, ky, kx);
            p.constants.push_back(w);
            p.cells.push_back(MultCell{ky * K + kx, w, CellOp::Multiply, 0, false});
          }
        }
        const int id = b.add(blk, L + "_ce_n" + std::to_string(n) + "_c" + std::to_string(c), 1, bd,
                             plan.tree_bits, std::move(p));
        b.connect(lbs[c], id, 0);
        engines[static_cast<std::size_t>(n) * C + c] = id;
      }
    }

    std::vector<int> tip(N);
    for (int n = 0; n < N; ++n) {
      tip[n] = b.add(blk, L + "_sum_n" + std::to_string(n), C, plan.tree_bits, plan.sum_bits, ChannelSumParams{n, C});
      for (int c = 0; c < C; ++c) b.connect(engines[static_cast<std::size_t>(n) * C + c], tip[n], c);
    }
    int width = plan.sum_bits;

    if (gb.has_bias) {
      for (int n = 0; n < N; ++n) {
        const int id = b.add(blk, L + "_bias_n" + std::to_string(n), 1, width, plan.post_bias_bits,
                             BiasAddParams{n, q.biases[n]});
        b.connect(tip[n], id, 0);
        tip[n] = id;
      }
      width = plan.post_bias_bits;
    }

    if (gb.has_pool) {
      for (int n = 0; n < N; ++n) {
        const int id = b.add(blk, L + "_pool_n" + std::to_string(n), 1, width, width,
                             MaxPoolParams{n, layer.pool->kernel, shp.conv_output.height, shp.conv_output.width});
        b.connect(tip[n], id, 0);
        tip[n] = id;
      }
    }

    if (gb.has_activation) {
      const int address_bits = std::min(qw.tanh_bits, std::min(width, 12));
      const TanhTable table = tanh_lut(width, plan.frac_bits, qw.data_fmt, address_bits);
      for (int n = 0; n < N; ++n) {
        const int id = b.add(blk, L + "_tanh_n" + std::to_string(n), 1, width, bd, TanhLutParams{n, table});
        b.connect(tip[n], id, 0);
        tip[n] = id;
      }
    } else {
      for (int n = 0; n < N; ++n) {
        auto& a = b.actor(tip[n]);
        a.requantize = Requantize{plan.frac_bits - qw.data_fmt.frac_bits, bd, a.out_width};
        a.out_width = bd;
      }
    }

    for (int n = 0; n < N; ++n) {
      const int id = b.add(blk, L + "_out_n" + std::to_string(n), 1, bd, 0,
                           SinkParams{n, shp.output.height, shp.output.width});
      b.connect(tip[n], id, 0);
    }

    gb.end_actor = static_cast<int>(g.actors.size());
    g.blocks.push_back(std::move(gb));
    stream = tip;
  }
  return g;
}

GraphStats graph_stats(const DhmGraph& g) {
  GraphStats s;
  std::vector<int> depth(g.actors.size(), 0);
  for (const auto& a : g.actors) {
    ++s.actors_by_kind[a.kind()];
    switch (a.kind()) {
      case ActorKind::LineBuffer: {
        const auto& p = a.as<LineBufferParams>();
        s.line_buffer_bits += static_cast<long long>(p.kernel - 1) * p.width * a.in_width;
        s.window_register_bits += static_cast<long long>(p.kernel) * a.in_width;
        break;
      }
      case ActorKind::ConvEngine: {
        const auto& p = a.as<ConvEngineParams>();
        s.multiplier_cells += static_cast<long long>(p.cells.size());
        s.removed_cells += static_cast<long long>(p.constants.size() - p.cells.size());
        for (const auto& c : p.cells) {
          if (c.op == CellOp::Multiply) ++s.generic_cells;
          if (c.op == CellOp::Wire) ++s.wire_cells;
          if (c.op == CellOp::Shift) ++s.shift_cells;
        }
        if (p.cells.size() >= 2) {
          s.adder_cells += static_cast<long long>(p.cells.size()) - 1;
          ++s.adder_trees;
        }
        break;
      }
      case ActorKind::ChannelSum: s.adder_cells += a.as<ChannelSumParams>().arity - 1; break;
      case ActorKind::BiasAdd: s.adder_cells += 1; break;
      default: break;
    }
  }
  // Longest chain of line-buffer stages = layer pipeline depth.
  std::vector<const Edge*> order;
  for (const auto& e : g.edges) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](const Edge* a, const Edge* b) { return a->to < b->to; });
  for (const Edge* e : order) {
    const int here = depth[e->from] + (g.actors[e->to].kind() == ActorKind::LineBuffer ? 1 : 0);
    depth[e->to] = std::max(depth[e->to], here);
  }
  for (int d : depth) s.pipeline_depth = std::max(s.pipeline_depth, d);
  return s;
}

std::vector<std::string> check_graph(const DhmGraph& g) {
  std::vector<std::string> issues;
  std::vector<std::vector<int>> driven(g.actors.size());
  for (std::size_t i = 0; i < g.actors.size(); ++i) {
    if (g.actors[i].id != static_cast<int>(i)) issues.push_back("actor " + std::to_string(i) + " has id mismatch");
    driven[i].assign(g.actors[i].input_ports, 0);
  }
  for (const auto& e : g.edges) {
    if (e.from < 0 || e.to < 0 || e.from >= static_cast<int>(g.actors.size()) ||
        e.to >= static_cast<int>(g.actors.size())) {
      issues.push_back("edge references a missing actor");
      continue;
    }
    const auto& src = g.actors[e.from];
    const auto& dst = g.actors[e.to];
    if (e.from >= e.to) issues.push_back("edge " + src.label + " -> " + dst.label + " breaks topological order");
    if (e.port < 0 || e.port >= dst.input_ports) {
      issues.push_back("edge into " + dst.label + " uses missing port " + std::to_string(e.port));
      continue;
    }
    ++driven[e.to][e.port];
    if (e.width != src.out_width || e.width != dst.in_width || e.lanes != src.out_lanes)
      issues.push_back("width mismatch on edge " + src.label + " -> " + dst.label);
    const int want_lanes = dst.kind() == ActorKind::ConvEngine ? dst.as<ConvEngineParams>().kernel * dst.as<ConvEngineParams>().kernel : 1;
    if (e.lanes != want_lanes) issues.push_back("lane mismatch on edge " + src.label + " -> " + dst.label);
  }
  for (std::size_t i = 0; i < g.actors.size(); ++i)
    for (std::size_t p = 0; p < driven[i].size(); ++p)
      if (driven[i][p] != 1)
        issues.push_back("port " + std::to_string(p) + " of " + g.actors[i].label + " driven " +
                         std::to_string(driven[i][p]) + " times");

  int next = 0;
  for (std::size_t bi = 0; bi < g.blocks.size(); ++bi) {
    const auto& gb = g.blocks[bi];
    if (gb.first_actor < next || gb.end_actor < gb.first_actor || gb.end_actor > static_cast<int>(g.actors.size())) {
      issues.push_back("block " + gb.name + " actor range out of bounds");
      continue;
    }
    next = gb.end_actor;
    std::map<ActorKind, int> n;
    for (int i = gb.first_actor; i < gb.end_actor; ++i) ++n[g.actors[i].kind()];
    const int N = gb.num_outputs;
    const int C = gb.channels;
    auto expect = [&](ActorKind k, int want) {
      if (n[k] != want)
        issues.push_back("block " + gb.name + ": " + std::string(to_string(k)) + " count " + std::to_string(n[k]) +
                         ", expected " + std::to_string(want));
    };
    expect(ActorKind::LineBuffer, C);
    expect(ActorKind::ConvEngine, N * C);
    expect(ActorKind::ChannelSum, N);
    expect(ActorKind::BiasAdd, gb.has_bias ? N : 0);
    expect(ActorKind::MaxPool, gb.has_pool ? N : 0);
    expect(ActorKind::TanhLut, gb.has_activation ? N : 0);
    expect(ActorKind::Sink, N);
  }
  return issues;
}

namespace {

const char* op_tag(CellOp op) {
  switch (op) {
    case CellOp::Multiply: return "mul";
    case CellOp::Wire: return "wire";
    case CellOp::Shift: return "shl";
  }
  return "?";
}

}  // namespace

std::string dump_graph(const DhmGraph& g) {
  std::ostringstream os;
  os << "# dhm-graph v1\n";
  os << "network " << (g.network_name.empty() ? "-" : g.network_name) << " input=" << g.input.channels << "x"
     << g.input.height << "x" << g.input.width << " data=Q" << g.data_fmt.total_bits << "." << g.data_fmt.frac_bits
     << "\n";
  for (const auto& b : g.blocks) {
    os << "block " << b.label << " N=" << b.num_outputs << " C=" << b.channels << " K=" << b.kernel
       << " in=" << b.input.channels << "x" << b.input.height << "x" << b.input.width << " out=" << b.output.channels
       << "x" << b.output.height << "x" << b.output.width << " weight=Q" << b.weight_fmt.total_bits << "."
       << b.weight_fmt.frac_bits << " acc=" << b.plan.product_bits << "/" << b.plan.tree_bits << "/"
       << b.plan.sum_bits << "/" << b.plan.post_bias_bits << " f_acc=" << b.plan.frac_bits
       << " actors=" << b.first_actor << ".." << b.end_actor << "\n";
  }
  for (const auto& a : g.actors) {
    os << "actor " << a.id << " " << to_string(a.kind()) << " " << a.label << " block=" << a.block
       << " in=" << a.in_width << " out=" << a.out_width;
    if (a.out_lanes != 1) os << "x" << a.out_lanes;
    std::visit(
        [&os](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, SourceParams>) {
            os << " channel=" << p.channel << " H=" << p.height << " W=" << p.width;
          } else if constexpr (std::is_same_v<P, LineBufferParams>) {
            os << " channel=" << p.channel << " K=" << p.kernel << " H=" << p.height << " W=" << p.width
               << " depth=" << p.depth();
          } else if constexpr (std::is_same_v<P, ConvEngineParams>) {
            os << " n=" << p.output << " c=" << p.channel << " K=" << p.kernel << " cells=[";
            for (std::size_t i = 0; i < p.cells.size(); ++i) {
              const auto& c = p.cells[i];
              os << (i ? " " : "") << c.tap << ":" << op_tag(c.op) << (c.negate ? "-" : "");
              if (c.op == CellOp::Multiply) os << c.constant;
              if (c.op == CellOp::Shift) os << c.shift;
            }
            os << "]";
          } else if constexpr (std::is_same_v<P, ChannelSumParams>) {
            os << " n=" << p.output << " arity=" << p.arity;
          } else if constexpr (std::is_same_v<P, BiasAddParams>) {
            os << " n=" << p.output << " bias=" << p.bias;
          } else if constexpr (std::is_same_v<P, TanhLutParams>) {
            os << " n=" << p.output << " A=" << p.table.address_bits << " shift=" << p.table.shift;
          } else if constexpr (std::is_same_v<P, MaxPoolParams>) {
            os << " n=" << p.output << " p=" << p.pool << " H=" << p.height << " W=" << p.width;
          } else if constexpr (std::is_same_v<P, SinkParams>) {
            os << " n=" << p.output << " H=" << p.height << " W=" << p.width;
          }
        },
        a.params);
    if (a.requantize)
      os << " requant=" << a.requantize->from_bits << ">>" << a.requantize->shift << ":" << a.requantize->bits;
    os << "\n";
  }
  for (const auto& e : g.edges) {
    os << "edge " << e.from << " -> " << e.to << "." << e.port << " width=" << e.width;
    if (e.lanes != 1) os << "x" << e.lanes;
    os << "\n";
  }
  return os.str();
}

}  // namespace dhmgen
