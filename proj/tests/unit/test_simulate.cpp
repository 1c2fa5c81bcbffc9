#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cases.hpp"
#include "dhmgen/error.hpp"
#include "dhmgen/graph.hpp"
#include "dhmgen/image.hpp"
#include "dhmgen/simulate.hpp"
#include "dhmgen/specialize.hpp"

using namespace dhmgen;

namespace {

std::int64_t floor_div_pow2(std::int64_t v, int s) {
  const std::int64_t d = std::int64_t{1} << s;
  std::int64_t q = v / d;
  if (v % d != 0 && v < 0) --q;
  return q;
}

std::int64_t rhe_shift(std::int64_t v, int s) {
  if (s == 0) return v;
  const std::int64_t q = floor_div_pow2(v, s);
  const std::int64_t r2 = 2 * (v - q * (std::int64_t{1} << s));
  const std::int64_t d = std::int64_t{1} << s;
  return (r2 > d || (r2 == d && (q & 1))) ? q + 1 : q;
}

std::int64_t clamp_bits(std::int64_t v, int b) {
  const std::int64_t hi = (std::int64_t{1} << (b - 1)) - 1;
  return std::clamp(v, -hi - 1, hi);
}

// Straight-line reference: window sums per output pixel, explicit tanh
// addressing, no shared helpers beyond the weights.
std::vector<FeatureMaps> reference(const ValidatedNetwork& net, const QuantizedWeights& qw, const FeatureMaps& img) {
  std::vector<FeatureMaps> outs;
  FeatureMaps cur = img;
  const int bd = qw.data_fmt.total_bits;
  const int fd = qw.data_fmt.frac_bits;
  for (std::size_t bi = 0; bi < net.block_count(); ++bi) {
    const auto& q = qw.blocks[bi];
    const auto& shp = net.block_shapes(bi);
    const bool bias = net.block(bi).conv.bias_enabled;
    const int K = q.kernel;
    FeatureMaps conv(shp.conv_output);
    for (int n = 0; n < q.num_outputs; ++n)
      for (int y = 0; y < shp.conv_output.height; ++y)
        for (int x = 0; x < shp.conv_output.width; ++x) {
          std::int64_t s = bias ? q.biases[n] : 0;
          for (int c = 0; c < q.channels; ++c)
            for (int k = 0; k < K * K; ++k) s += cur.at(c, y + k / K, x + k % K) * q.weight(n, c, k / K, k % K);
          conv.at(n, y, x) = s;
        }
    FeatureMaps pooled(shp.output);
    const int p = net.block(bi).pool ? net.block(bi).pool->kernel : 1;
    for (int n = 0; n < shp.output.channels; ++n)
      for (int y = 0; y < shp.output.height; ++y)
        for (int x = 0; x < shp.output.width; ++x) {
          std::int64_t m = INT64_MIN;
          for (int d = 0; d < p * p; ++d) m = std::max(m, conv.at(n, y * p + d / p, x * p + d % p));
          pooled.at(n, y, x) = m;
        }
    const int width = bias ? q.plan.post_bias_bits : q.plan.sum_bits;
    const int fa = q.plan.frac_bits;
    FeatureMaps out(shp.output);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      const std::int64_t v = pooled.values[i];
      if (net.block(bi).activation) {
        const int A = std::min({qw.tanh_bits, width, 12});
        const int s = width - A;
        const std::int64_t idx =
            clamp_bits(s ? floor_div_pow2(v + (std::int64_t{1} << (s - 1)), s) : v, A);
        const double y = std::tanh(std::ldexp(static_cast<double>(idx), s - fa));
        out.values[i] = clamp_bits(static_cast<std::int64_t>(std::nearbyint(std::ldexp(y, fd))), bd);
      } else {
        out.values[i] = clamp_bits(rhe_shift(v, fa - fd), bd);
      }
    }
    outs.push_back(out);
    cur = out;
  }
  return outs;
}

}  // namespace

TEST_CASE("golden model matches the straight-line reference") {
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const auto c = dhmtest::random_case(seed);
    INFO(c.topology);
    const auto golden = golden_forward(c.net, c.qw, c.image);
    const auto ref = reference(c.net, c.qw, c.image);
    CHECK(compare(golden, ref).equal);
  }
}

TEST_CASE("streaming simulation is bit-exact against the golden model") {
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const auto c = dhmtest::random_case(seed);
    INFO(c.topology);
    const auto g = expand(c.net, c.qw);
    const auto golden = golden_forward(c.net, c.qw, c.image);
    CHECK(compare(golden, stream_simulate(g, c.image)).equal);
    CHECK(compare(golden, stream_simulate(specialize_graph(g), c.image)).equal);
  }
}

TEST_CASE("identity kernel passes the image through") {
  // 3x3 kernel with a single centre tap of 1.0 and no activation: the output
  // is the valid interior of the input.
  const auto net = dhmtest::net_from(dhmtest::single_layer(1, 6, 7, 1, 3, {false, false, false}));
  const auto wf = FixedPointFormat::make(4, 2);
  const auto qw = quantize_weights(
      net, dhmtest::integer_weights(net, wf, [](int, int, int ky, int kx) { return ky == 1 && kx == 1 ? 4 : 0; }),
      FixedPointFormat::data(5), wf);
  const auto img = random_image(Shape3{1, 6, 7}, qw.data_fmt, 9);
  const auto g = specialize_graph(expand(net, qw));
  const auto out = stream_simulate(g, img);
  REQUIRE(out.size() == 1);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) CHECK(out[0].at(0, y, x) == img.at(0, y + 1, x + 1));
  CHECK(compare(out, golden_forward(net, qw, img)).equal);
}

TEST_CASE("zero kernel with tanh yields exact zeros") {
  const auto net = dhmtest::net_from(dhmtest::single_layer(2, 5, 5, 3, 3, {false, true, true}));
  const auto wf = FixedPointFormat::make(4, 2);
  const auto qw = quantize_weights(net, dhmtest::integer_weights(net, wf, [](int, int, int, int) { return 0; }),
                                   FixedPointFormat::data(4), wf);
  const auto img = random_image(Shape3{2, 5, 5}, qw.data_fmt, 4);
  const auto out = stream_simulate(specialize_graph(expand(net, qw)), img);
  for (auto v : out[0].values) CHECK(v == 0);
}

TEST_CASE("trace lists stimulus and sink tokens") {
  const auto net = dhmtest::net_from(dhmtest::single_layer(1, 3, 3, 1, 1, {false, false, false}));
  const auto wf = FixedPointFormat::make(4, 2);
  const auto qw = quantize_weights(net, dhmtest::integer_weights(net, wf, [](int, int, int, int) { return 4; }),
                                   FixedPointFormat::data(4), wf);
  auto img = random_image(Shape3{1, 3, 3}, qw.data_fmt, 2);
  std::ostringstream trace;
  const auto r = run_stream(expand(net, qw), img, &trace);
  const auto text = trace.str();
  CHECK(text.rfind("# dhm-trace v1 input 1x3x3\n", 0) == 0);
  CHECK(text.find("step 0\nin 0 " + std::to_string(img.values[0]) + "\n") != std::string::npos);
  CHECK(text.find("out conv_out_n0 2 2 " + std::to_string(img.values[8])) != std::string::npos);
  CHECK(r.steps >= 9);
}

TEST_CASE("broken graphs deadlock instead of producing partial output") {
  const auto c = dhmtest::random_case(7);
  auto g = expand(c.net, c.qw);
  auto missing = g;
  missing.edges.pop_back();
  CHECK_THROWS_WITH_AS(stream_simulate(missing, c.image), doctest::Contains("not driven"), Error);

  // A second edge into the sink's unused port leaves tokens behind.
  auto doubled = g;
  const auto sink = doubled.sinks(0).front();
  Edge extra = *doubled.inputs_of(sink).front();
  doubled.actors[sink].input_ports = 2;
  extra.port = 1;
  doubled.edges.push_back(extra);
  CHECK_THROWS_AS(stream_simulate(doubled, c.image), Error);
}

TEST_CASE("narrowed datapath is caught as overflow") {
  const auto net = dhmtest::net_from(dhmtest::single_layer(1, 4, 4, 1, 1, {false, false, false}));
  const auto wf = FixedPointFormat::make(6, 0);
  const auto qw = quantize_weights(net, dhmtest::integer_weights(net, wf, [](int, int, int, int) { return 31; }),
                                   FixedPointFormat::data(6), wf);
  auto g = expand(net, qw);
  const auto& b = g.blocks[0];
  for (int id = b.first_actor; id < b.end_actor; ++id)
    if (g.actors[id].kind() == ActorKind::ConvEngine) g.actors[id].out_width = 4;
  FeatureMaps img(Shape3{1, 4, 4});
  std::fill(img.values.begin(), img.values.end(), -32);
  CHECK_THROWS_WITH_AS(stream_simulate(g, img), doctest::Contains("overflows"), Error);
}

TEST_CASE("image checks") {
  const auto c = dhmtest::random_case(3);
  const auto g = expand(c.net, c.qw);
  FeatureMaps wrong(Shape3{c.image.shape.channels + 1, c.image.shape.height, c.image.shape.width});
  CHECK_THROWS_AS(stream_simulate(g, wrong), Error);
  auto big = c.image;
  big.values[0] = c.qw.data_fmt.max_int() + 1;
  CHECK_THROWS_AS(golden_forward(c.net, c.qw, big), Error);
}

TEST_CASE("compare reports the first mismatch") {
  FeatureMaps a(Shape3{2, 2, 2});
  auto b = a;
  b.at(1, 0, 1) = 5;
  b.at(1, 1, 1) = -7;
  const auto r = compare({a}, {b});
  CHECK_FALSE(r.equal);
  CHECK(r.blocks[0].mismatches == 2);
  CHECK(r.blocks[0].max_abs_diff == 7);
  REQUIRE(r.blocks[0].first_mismatch);
  CHECK(*r.blocks[0].first_mismatch == std::array<int, 3>{1, 0, 1});
  CHECK(format_diff(r).find("first at (1,0,1)") != std::string::npos);
  CHECK_THROWS_AS(compare({a}, {}), Error);
  CHECK_THROWS_AS(compare({a}, {FeatureMaps(Shape3{1, 2, 2})}), Error);
}
