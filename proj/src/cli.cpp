#include "dhmgen/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "dhmgen/error.hpp"
#include "dhmgen/estimate.hpp"
#include "dhmgen/graph.hpp"
#include "dhmgen/hdl.hpp"
#include "dhmgen/image.hpp"
#include "dhmgen/network.hpp"
#include "dhmgen/simulate.hpp"
#include "dhmgen/specialize.hpp"
#include "dhmgen/weights.hpp"

namespace dhmgen::cli {
namespace {

struct RunConfig {
  std::string topology;
  std::string weights;  // empty: seeded random weights
  std::string image;    // empty: seeded random image
  std::string out;
  std::string trace;
  std::string top = "dhm_top";
  int data_bits = 6;
  int weight_bits = 6;
  int tanh_bits = 8;
  std::uint64_t seed = 1;
  bool no_specialize = false;
  bool json = false;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Errors raised after parsing carry no location; attach the topology path.
template <typename F>
auto with_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw Error(e.code(), path + ": " + msg);
  }
}

struct Pipeline {
  ValidatedNetwork net;
  QuantizedWeights qw;
  DhmGraph unspecialized;
  DhmGraph graph;  // specialized unless --no-specialize
};

ValidatedNetwork load_network(const RunConfig& c) {
  const std::string text = read_text(c.topology);
  return with_path(c.topology, [&] { return validate(parse_network(text, c.topology)); });
}

Pipeline build(const RunConfig& c) {
  Pipeline p{load_network(c), {}, {}, {}};
  const WeightSet ws = c.weights.empty() ? random_weights(p.net, c.seed) : load_weights_file(c.weights, p.net);
  with_path(c.topology, [&] {
    p.qw = quantize_weights(p.net, ws, FixedPointFormat::data(c.data_bits), c.weight_bits);
    p.qw.tanh_bits = c.tanh_bits;
    p.unspecialized = expand(p.net, p.qw);
    p.graph = c.no_specialize ? p.unspecialized : specialize_graph(p.unspecialized);
    return 0;
  });
  return p;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": cannot write file");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": write failed");
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": cannot write file");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, path.string() + ": write failed");
}

std::string dims(const Shape3& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

int cmd_check(const RunConfig& c, std::ostream& out) {
  const auto net = load_network(c);
  out << "network " << net.network().name << ": " << net.block_count() << " block(s)\n";
  out << "input " << net.network().input_name << " " << dims(net.network().input_shape) << "\n";
  std::string chain = std::to_string(net.network().input_shape.height);
  for (std::size_t i = 0; i < net.block_count(); ++i) {
    const auto& b = net.block(i);
    const auto& s = net.block_shapes(i);
    out << "  " << b.name << ": conv K=" << b.conv.kernel << " " << dims(s.input) << " -> " << dims(s.conv_output);
    chain += " -> " + std::to_string(s.conv_output.height);
    if (b.pool) {
      out << ", pool " << b.pool->kernel << " -> " << dims(s.output);
      chain += " -> " + std::to_string(s.output.height);
    }
    if (b.activation) out << ", tanh";
    out << "  (" << net.multiplications(i) << " multiplications)\n";
  }
  out << "shape chain: " << chain << "\n";
  return 0;
}

int cmd_stats(const RunConfig& c, std::ostream& out) {
  const auto p = build(c);
  const auto s = param_stats(p.qw);
  out << (c.json ? format_stats_json(s) : format_stats_text(s));
  return 0;
}

int cmd_emit(const RunConfig& c, std::ostream& out) {
  const auto p = build(c);
  const auto bundle = with_path(c.topology, [&] { return emit(p.graph, EmitOptions{c.top, {}}); });
  const auto lint = lint_bundle(bundle);
  if (!lint.clean()) {
    const auto& v = lint.violations.front();
    throw Error(ErrorCode::GraphMismatch, v.file + ":" + std::to_string(v.line) + ": generated HDL fails self-check (" +
                                              std::string(to_string(v.rule)) + "): " + v.message);
  }
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec) throw Error(ErrorCode::IoError, c.out + ": cannot create directory: " + ec.message());
  for (const auto& f : bundle.files) {
    write_file(std::filesystem::path(c.out) / f.name, f.text);
    out << (std::filesystem::path(c.out) / f.name).string() << "\n";
  }
  return 0;
}

int cmd_estimate(const RunConfig& c, std::ostream& out) {
  const auto p = build(c);
  if (c.no_specialize) {
    const auto r = estimate(p.graph);
    out << (c.json ? format_report_json(r) : format_report_text(r));
    return 0;
  }
  const auto s = compare_strategies(p.unspecialized, p.graph);
  if (c.json) {
    out << format_strategy_json(s);
  } else {
    out << format_report_text(s.specialized) << "\n" << format_strategy_text(s);
  }
  return 0;
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
  const auto p = build(c);
  const auto img = c.image.empty() ? random_image(p.net.network().input_shape, p.qw.data_fmt, c.seed)
                                   : load_image(c.image, p.qw.data_fmt);
  if (img.shape != p.net.network().input_shape)
    throw Error(ErrorCode::ShapeMismatch, c.image + ": image is " + dims(img.shape) + ", network expects " +
                                              dims(p.net.network().input_shape));
  const auto golden = with_path(c.topology, [&] { return golden_forward(p.net, p.qw, img); });
  std::optional<std::ofstream> trace;
  if (!c.trace.empty()) {
    trace.emplace(c.trace, std::ios::binary);
    if (!*trace) throw Error(ErrorCode::IoError, c.trace + ": cannot write trace");
  }
  const auto sim = with_path(c.topology, [&] { return run_stream(p.graph, img, trace ? &*trace : nullptr); });
  const auto diff = compare(golden, sim.outputs);
  out << "steps: " << sim.steps << ", firings: " << sim.firings << "\n";
  out << format_diff(diff);
  out << "BIT-EXACT: " << (diff.equal ? "yes" : "no") << "\n";
  return diff.equal ? 0 : 1;
}

int cmd_graph(const RunConfig& c, std::ostream& out) {
  const auto p = build(c);
  const std::string text = dump_graph(p.graph);
  if (c.out.empty()) {
    out << text;
  } else {
    write_file(c.out, text);
  }
  return 0;
}

int cmd_random_weights(const RunConfig& c, std::ostream& out) {
  const auto net = load_network(c);
  write_bytes(c.out, save_weights(random_weights(net, c.seed)));
  out << c.out << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dhmgen: CNN to direct-hardware-mapped dataflow VHDL"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("dhmgen ") + kToolVersion +
                                        " (topology: prototxt subset, weights: HWF1, images: PNM/HIM1,"
                                        " graph: dhm-graph v1, trace: dhm-trace v1)");
  RunConfig c;

  auto topology = [&](CLI::App* s) {
    s->add_option("topology", c.topology, "network topology file")->required();
  };
  auto quant = [&](CLI::App* s) {
    s->add_option("--weights", c.weights, "HWF1 weight file (default: seeded random weights)");
    s->add_option("--data-bits", c.data_bits, "data word width")->check(CLI::Range(2, 32));
    s->add_option("--weight-bits", c.weight_bits, "weight word width")->check(CLI::Range(2, 32));
    s->add_option("--tanh-bits", c.tanh_bits, "tanh table address bits")->check(CLI::Range(4, 12));
    s->add_option("--seed", c.seed, "seed for generated weights and images");
    s->add_flag("--no-specialize", c.no_specialize, "keep every constant as a generic multiplier");
  };

  auto* check = app.add_subcommand("check", "parse and validate, print shapes");
  topology(check);
  auto* stats = app.add_subcommand("stats", "weight classification table");
  topology(stats);
  quant(stats);
  stats->add_flag("--json", c.json, "machine-readable output");
  auto* emit_cmd = app.add_subcommand("emit", "write VHDL");
  topology(emit_cmd);
  quant(emit_cmd);
  emit_cmd->add_option("--out", c.out, "output directory")->required();
  emit_cmd->add_option("--top", c.top, "top-level entity name");
  auto* est = app.add_subcommand("estimate", "resource estimate");
  topology(est);
  quant(est);
  est->add_flag("--json", c.json, "machine-readable output");
  auto* sim = app.add_subcommand("simulate", "golden model vs streaming simulation");
  topology(sim);
  quant(sim);
  sim->add_option("--image", c.image, "P5/P6 PNM or HIM1 input image (default: seeded random)");
  sim->add_option("--trace", c.trace, "write a token trace");
  auto* graph = app.add_subcommand("graph", "dump the actor graph");
  topology(graph);
  quant(graph);
  graph->add_option("--out", c.out, "output file (default: stdout)");
  auto* rw = app.add_subcommand("random-weights", "write seeded random HWF1 weights");
  topology(rw);
  rw->add_option("--seed", c.seed, "random seed");
  rw->add_option("--out", c.out, "output file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed()) return cmd_check(c, out);
    if (stats->parsed()) return cmd_stats(c, out);
    if (emit_cmd->parsed()) return cmd_emit(c, out);
    if (est->parsed()) return cmd_estimate(c, out);
    if (sim->parsed()) return cmd_simulate(c, out);
    if (graph->parsed()) return cmd_graph(c, out);
    if (rw->parsed()) return cmd_random_weights(c, out);
  } catch (const Error& e) {
    err << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dhmgen::cli
