#include <doctest.h>

#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cases.hpp"
#include "dhmgen/error.hpp"
#include "dhmgen/estimate.hpp"
#include "dhmgen/graph.hpp"
#include "dhmgen/specialize.hpp"

using namespace dhmgen;

namespace {

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Built {
  DhmGraph plain;
  DhmGraph special;
};

Built build(const ValidatedNetwork& net, const QuantizedWeights& qw) {
  auto g = expand(net, qw);
  return {g, specialize_graph(g)};
}

Built fig_layer(int b, const std::function<std::int64_t(int, int, int, int)>& fn) {
  const auto net = dhmtest::net_from(read(DHMGEN_MODELS "/fig_layer.prototxt"));
  const auto wf = FixedPointFormat::make(b, b - 1);
  return build(net, quantize_weights(net, dhmtest::integer_weights(net, wf, fn), FixedPointFormat::data(b), wf));
}

}  // namespace

TEST_CASE("fig layer priced from first principles") {
  // 3 -> 5 maps, 3x3, 8x8 input, bias + tanh; every constant generic (3).
  const int b = 6;
  const auto built = fig_layer(b, [](int, int, int, int) { return 3; });
  const auto r = estimate(built.plain);
  REQUIRE(r.blocks.size() == 1);
  const auto& t = r.total;
  const int product = 2 * b, tree = product + 4, sum = tree + 2, post = sum + 1;
  CHECK(t.generic_cells == 135);
  CHECK(t.multiplier_units == 135LL * b * b);
  CHECK(t.adder_cells == 15 * 8 + 5 * 2 + 5);
  CHECK(t.adder_bits == 15 * 8 * tree + 5 * 2 * sum + 5 * post);
  CHECK(t.line_buffer_bits == 3 * 2 * 8 * b);
  CHECK(t.window_register_bits == 3 * 3 * b);
  CHECK(t.tanh_rom_bits == 5 * 256 * b);
  CHECK(t.pool_buffer_bits == 0);
  CHECK(t.logic_units() == t.multiplier_units + t.adder_bits);
  CHECK(r.dsp_blocks == 0);

  // The same constants specialized are unchanged: 3 is not a power of two.
  CHECK(estimate(built.special).total == t);
}

TEST_CASE("specializing a power-of-two kernel removes all multiplier cost") {
  const auto built = fig_layer(5, [](int n, int c, int ky, int kx) -> std::int64_t {
    const int k = (n + c + ky + kx) % 4;
    return k == 0 ? 0 : k == 1 ? 1 : k == 2 ? -2 : 4;
  });
  const auto s = compare_strategies(built.plain, built.special);
  CHECK(s.specialized.total.multiplier_units == 0);
  CHECK(s.specialized.total.generic_cells == 0);
  CHECK(s.specialized.total.removed_cells + s.specialized.total.wire_cells + s.specialized.total.shift_cells == 135);
  CHECK_FALSE(s.multiplier_ratio.has_value());
  REQUIRE(s.logic_ratio.has_value());
  CHECK(*s.logic_ratio > 1.0);
  CHECK(format_strategy_text(s).find("multiplier reduction: unbounded") != std::string::npos);
  const auto j = nlohmann::json::parse(format_strategy_json(s));
  CHECK(j["multiplier_ratio"] == "unbounded");
  CHECK(j["specialized"]["dsp_blocks"] == 0);
}

TEST_CASE("identical graphs compare at 1.00x") {
  const auto c = dhmtest::random_case(4);
  const auto g = expand(c.net, c.qw);
  const auto s = compare_strategies(g, g);
  REQUIRE(s.multiplier_ratio);
  CHECK(*s.multiplier_ratio == 1.0);
  CHECK(*s.logic_ratio == 1.0);
  CHECK(format_strategy_text(s).find("multiplier reduction: 1.00x") != std::string::npos);
}

TEST_CASE("strategies must describe the same network") {
  const auto a = dhmtest::random_case(1);
  const auto b = dhmtest::random_case(2);
  CHECK_THROWS_AS(compare_strategies(expand(a.net, a.qw), expand(b.net, b.qw)), Error);
  auto qw = a.qw;
  qw.blocks[0].weights[0] += 1;
  try {
    compare_strategies(expand(a.net, a.qw), specialize_graph(expand(a.net, qw)));
    FAIL("accepted different constants");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GraphMismatch);
  }
}

TEST_CASE("totals, memory and monotonicity over random networks") {
  for (std::uint64_t seed = 30; seed < 70; ++seed) {
    const auto c = dhmtest::random_case(seed);
    const auto built = build(c.net, c.qw);
    const auto u = estimate(built.plain);
    const auto s = estimate(built.special);
    BlockResources sum;
    sum.name = "total";
    for (const auto& b : s.blocks) sum += b;
    CHECK(sum == s.total);
    // memory does not depend on constant realization
    CHECK(u.total.memory_bits() == s.total.memory_bits());
    CHECK(s.total.multiplier_units <= u.total.multiplier_units);
    CHECK(s.total.logic_units() <= u.total.logic_units());
    CHECK(s.total.generic_cells == graph_stats(built.special).generic_cells);
  }
}

TEST_CASE("pooling buffers one row of partial maxima") {
  const auto net = dhmtest::net_from(dhmtest::single_layer(1, 9, 9, 2, 3, {true, true, false}));
  const auto qw = quantize_weights(net, random_weights(net, 2), FixedPointFormat::data(4), 4);
  const auto r = estimate(expand(net, qw));
  // conv output 7x7, pool 2 -> 3 columns; pooled values are post-bias wide
  CHECK(r.total.pool_buffer_bits == 2LL * 3 * qw.blocks[0].plan.post_bias_bits);
}

TEST_CASE("report formats") {
  const auto net = dhmtest::net_from(read(DHMGEN_MODELS "/lenet5.prototxt"));
  const auto g = specialize_graph(expand(net, quantize_weights(net, random_weights(net, 1), FixedPointFormat::data(3), 3)));
  const auto r = estimate(g);
  const auto text = format_report_text(r);
  CHECK(text.rfind("block", 0) == 0);
  CHECK(text.find("\nconv1 ") != std::string::npos);
  CHECK(text.find("\ntotal ") != std::string::npos);
  CHECK(text.find("memory bits: " + std::to_string(r.total.memory_bits())) != std::string::npos);
  CHECK(text.find("DSP blocks:  0") != std::string::npos);
  const auto j = nlohmann::json::parse(format_report_json(r));
  CHECK(j["blocks"].size() == 2);
  CHECK(j["blocks"][0]["memory_bits"]["line_buffer"] == 336);
  CHECK(j["blocks"][1]["memory_bits"]["line_buffer"] == 2880);
  CHECK(j["total"]["units"]["logic"] == r.total.logic_units());
}
