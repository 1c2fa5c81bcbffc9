#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cases.hpp"
#include "dhmgen/error.hpp"
#include "dhmgen/network.hpp"

using namespace dhmgen;

namespace {

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::string& text) {
  try {
    validate(parse_network(text, "t.prototxt"));
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::IoError;
}

std::string message_of(const std::string& text) {
  try {
    validate(parse_network(text, "t.prototxt"));
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const char* kHead = "input_dim: 1\ninput_dim: 1\ninput_dim: 8\ninput_dim: 8\n";

}  // namespace

TEST_CASE("lenet5 topology parses into two conv-pool-tanh blocks") {
  const Network net = parse_network(read(DHMGEN_MODELS "/lenet5.prototxt"));
  CHECK(net.name == "lenet5");
  CHECK(net.input_name == "data");
  CHECK(net.input_shape == Shape3{1, 28, 28});
  REQUIRE(net.blocks.size() == 2);
  CHECK(net.blocks[0].conv == ConvSpec{20, 5, true});
  CHECK(net.blocks[1].conv == ConvSpec{50, 5, true});
  for (const auto& b : net.blocks) {
    REQUIRE(b.pool);
    CHECK(b.pool->kernel == 2);
    CHECK(b.pool->stride == 2);
    CHECK(b.activation);
  }
}

TEST_CASE("validate propagates the lenet5 shape chain") {
  const auto v = validate(parse_network(read(DHMGEN_MODELS "/lenet5.prototxt")));
  CHECK(v.block_shapes(0).input == Shape3{1, 28, 28});
  CHECK(v.block_shapes(0).conv_output == Shape3{20, 24, 24});
  CHECK(v.block_shapes(0).output == Shape3{20, 12, 12});
  CHECK(v.block_shapes(1).input == Shape3{20, 12, 12});
  CHECK(v.block_shapes(1).conv_output == Shape3{50, 8, 8});
  CHECK(v.block_shapes(1).output == Shape3{50, 4, 4});
  CHECK(v.multiplications(0) == 20 * 1 * 25);
  CHECK(v.multiplications(1) == 50 * 20 * 25);
}

TEST_CASE("serialize is a parse fixed point") {
  for (const char* m : {"lenet5", "fig_layer", "lenet_c3", "tiny"}) {
    const Network a = parse_network(read(std::string(DHMGEN_MODELS "/") + m + ".prototxt"));
    const std::string text = serialize_network(a);
    const Network b = parse_network(text);
    CHECK(a == b);
    CHECK(serialize_network(b) == text);
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = dhmtest::random_case(seed);
    CHECK(parse_network(serialize_network(c.net.network())) == c.net.network());
  }
}

TEST_CASE("comments, implicit chaining and defaults") {
  const std::string text = std::string("# leading comment\n") + kHead +
                           "layer { name: \"a\" type: \"Convolution\"  # trailing\n"
                           "  convolution_param { num_output: 2 kernel_size: 3 bias_term: false } }\n"
                           "layer { name: \"p\" type: \"Pooling\" pooling_param { pool: MAX } }\n";
  const auto v = validate(parse_network(text));
  CHECK(v.network().input_name == "data");
  CHECK_FALSE(v.block(0).conv.bias_enabled);
  REQUIRE(v.block(0).pool);
  CHECK(v.block(0).pool->kernel == 2);
  CHECK(v.block_shapes(0).output == Shape3{2, 3, 3});
}

TEST_CASE("syntax errors carry file, line and column") {
  const std::string text = std::string(kHead) + "layer { name: \"a\" type: \"Convolution\"\n  convolution_param { num_output 2 } }\n";
  const auto msg = message_of(text);
  CHECK(msg.rfind("t.prototxt:6:", 0) == 0);
  CHECK(code_of(text) == ErrorCode::SyntaxError);
  CHECK(code_of("") == ErrorCode::SyntaxError);
  CHECK(code_of("name: \"x") == ErrorCode::SyntaxError);
  CHECK(code_of(std::string(kHead) + "layer {") == ErrorCode::SyntaxError);
  CHECK(code_of(std::string(kHead) + "}") == ErrorCode::SyntaxError);
}

TEST_CASE("error codes for semantic problems") {
  const std::string conv = "layer { name: \"c\" type: \"Convolution\" convolution_param { num_output: 2 kernel_size: 3 } }\n";
  CHECK(code_of(std::string(kHead) + "colour: 3\n" + conv) == ErrorCode::UnknownKey);
  CHECK(code_of(std::string(kHead) + conv + conv) == ErrorCode::DuplicateLayerName);
  CHECK(code_of(std::string(kHead)) == ErrorCode::MissingRequiredField);
  CHECK(code_of("input_dim: 1\ninput_dim: 1\ninput_dim: 8\n" + conv) == ErrorCode::MissingRequiredField);
  CHECK(code_of(std::string(kHead) + "layer { name: \"c\" type: \"Convolution\" convolution_param { kernel_size: 3 } }") ==
        ErrorCode::MissingRequiredField);
  CHECK(code_of(std::string(kHead) + "layer { name: \"r\" type: \"ReLU\" }\n") == ErrorCode::UnsupportedLayer);
  CHECK(code_of(std::string(kHead) + "layer { name: \"t\" type: \"TanH\" }\n" + conv) == ErrorCode::BlockOrder);
  CHECK(code_of(std::string(kHead) + conv + "layer { name: \"t\" type: \"TanH\" }\n" +
                "layer { name: \"p\" type: \"Pooling\" pooling_param { pool: MAX } }\n") == ErrorCode::BlockOrder);
  CHECK(code_of(std::string(kHead) +
                "layer { name: \"c\" type: \"Convolution\" convolution_param { num_output: 2 kernel_size: 9 } }\n") ==
        ErrorCode::ShapeUnderflow);
  CHECK(code_of(std::string(kHead) +
                "layer { name: \"c\" type: \"Convolution\" convolution_param { num_output: 2 kernel_size: 4 } }\n") ==
        ErrorCode::SyntaxError);
  CHECK(code_of(std::string(kHead) +
                "layer { name: \"c\" type: \"Convolution\" convolution_param { num_output: 2 kernel_size: 3 stride: 2 } }\n") ==
        ErrorCode::SyntaxError);
  CHECK(code_of("input_dim: 2\ninput_dim: 1\ninput_dim: 8\ninput_dim: 8\n" + conv) == ErrorCode::SyntaxError);
}

TEST_CASE("a layer reading a blob other than the stream tip is a channel mismatch") {
  const std::string text = std::string(kHead) +
                           "layer { name: \"c1\" type: \"Convolution\" bottom: \"data\" top: \"c1\"\n"
                           "  convolution_param { num_output: 4 kernel_size: 3 } }\n"
                           "layer { name: \"c2\" type: \"Convolution\" bottom: \"data\" top: \"c2\"\n"
                           "  convolution_param { num_output: 2 kernel_size: 3 } }\n";
  CHECK(code_of(text) == ErrorCode::ChannelMismatch);
}

TEST_CASE("pooling larger than the map underflows") {
  const std::string text = "input_dim: 1\ninput_dim: 1\ninput_dim: 3\ninput_dim: 3\n"
                           "layer { name: \"c\" type: \"Convolution\" convolution_param { num_output: 1 kernel_size: 3 } }\n"
                           "layer { name: \"p\" type: \"Pooling\" pooling_param { pool: MAX kernel_size: 2 stride: 2 } }\n";
  CHECK(code_of(text) == ErrorCode::ShapeUnderflow);
}
