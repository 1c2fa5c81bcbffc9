#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dhmgen/cli.hpp"
#include "dhmgen/network.hpp"
#include "dhmgen/weights.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = dhmgen::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string model(const char* name) { return (fs::path(DHMGEN_MODELS) / name).string(); }

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("dhmgen_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("check prints the shape chain") {
  const auto r = run({"check", model("lenet5.prototxt")});
  CHECK(r.code == 0);
  CHECK(r.out.find("shape chain: 28 -> 24 -> 12 -> 8 -> 4") != std::string::npos);
  CHECK(r.out.find("(500 multiplications)") != std::string::npos);
  CHECK(r.out.find("(25000 multiplications)") != std::string::npos);
}

TEST_CASE("domain errors exit 1 and name the file") {
  const auto missing = run({"simulate", model("lenet5.prototxt"), "--weights", "no/such/weights.hwf"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("no/such/weights.hwf") != std::string::npos);
  CHECK(missing.err.rfind("error[IoError]", 0) == 0);

  const auto p = scratch("bad.prototxt");
  std::ofstream(p) << "input_dim: 1\ninput_dim: 1\ninput_dim: 4\ninput_dim: 4\nlayer { name: \"x\" type: \"Softmax\" }\n";
  const auto bad = run({"check", p.string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find(p.string()) != std::string::npos);
  fs::remove(p);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"check"}).code == 2);
  CHECK(run({"emit", model("tiny.prototxt")}).code == 2);
  CHECK(run({"stats", model("tiny.prototxt"), "--data-bits", "1"}).code == 2);
  CHECK(run({"stats", model("tiny.prototxt"), "--tanh-bits", "13"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("version names the formats") {
  const auto r = run({"--version"});
  CHECK(r.code == 0);
  CHECK(r.out.find(dhmgen::cli::kToolVersion) != std::string::npos);
  CHECK(r.out.find("HWF1") != std::string::npos);
}

TEST_CASE("simulate reports bit-exact streaming") {
  for (const char* m : {"tiny.prototxt", "fig_layer.prototxt"}) {
    const auto r = run({"simulate", model(m), "--seed", "5", "--data-bits", "5", "--weight-bits", "4"});
    CHECK(r.code == 0);
    CHECK(r.out.find("BIT-EXACT: yes") != std::string::npos);
  }
  const auto trace = scratch("trace.txt");
  CHECK(run({"simulate", model("tiny.prototxt"), "--trace", trace.string()}).code == 0);
  CHECK(read(trace).rfind("# dhm-trace v1 input 1x4x4\n", 0) == 0);
  fs::remove(trace);
}

TEST_CASE("emit and graph output are byte-identical across runs") {
  const auto a = scratch("emit_a");
  const auto b = scratch("emit_b");
  REQUIRE(run({"emit", model("lenet_c3.prototxt"), "--out", a.string(), "--top", "c3_top"}).code == 0);
  REQUIRE(run({"emit", model("lenet_c3.prototxt"), "--out", b.string(), "--top", "c3_top"}).code == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    CHECK(read(e.path()) == read(b / e.path().filename()));
  }
  CHECK(files == 3);
  CHECK(fs::exists(a / "c3_top.vhd"));
  fs::remove_all(a);
  fs::remove_all(b);

  const auto g1 = run({"graph", model("fig_layer.prototxt")});
  const auto g2 = run({"graph", model("fig_layer.prototxt")});
  CHECK(g1.code == 0);
  CHECK(g1.out == g2.out);
  CHECK(g1.out.rfind("# dhm-graph v1", 0) == 0);
  CHECK(run({"graph", model("fig_layer.prototxt"), "--seed", "2"}).out != g1.out);
}

TEST_CASE("random-weights writes a loadable file used by later commands") {
  const auto w = scratch("w.hwf");
  REQUIRE(run({"random-weights", model("lenet_c3.prototxt"), "--seed", "9", "--out", w.string()}).code == 0);
  std::ifstream in(model("lenet_c3.prototxt"));
  std::stringstream ss;
  ss << in.rdbuf();
  const auto net = dhmgen::validate(dhmgen::parse_network(ss.str()));
  const auto loaded = dhmgen::load_weights_file(w.string(), net);
  const auto seeded_ws = dhmgen::random_weights(net, 9);
  REQUIRE(loaded.blocks.size() == seeded_ws.blocks.size());
  CHECK(loaded.blocks[0].weights == seeded_ws.blocks[0].weights);
  CHECK(loaded.blocks[0].biases == seeded_ws.blocks[0].biases);
  const auto from_file = run({"stats", model("lenet_c3.prototxt"), "--weights", w.string(), "--json"});
  const auto seeded = run({"stats", model("lenet_c3.prototxt"), "--seed", "9", "--json"});
  CHECK(from_file.code == 0);
  CHECK(from_file.out == seeded.out);
  // weights for a different network are rejected
  const auto wrong = run({"stats", model("lenet5.prototxt"), "--weights", w.string()});
  CHECK(wrong.code == 1);
  fs::remove(w);
}

TEST_CASE("estimate compares strategies") {
  const auto r = run({"estimate", model("lenet5.prototxt"), "--data-bits", "3", "--weight-bits", "3"});
  CHECK(r.code == 0);
  CHECK(r.out.find("multiplier reduction:") != std::string::npos);
  CHECK(r.out.find("DSP blocks:  0") != std::string::npos);
  const auto plain = run({"estimate", model("lenet5.prototxt"), "--no-specialize"});
  CHECK(plain.code == 0);
  CHECK(plain.out.find("multiplier reduction") == std::string::npos);
  CHECK(run({"estimate", model("tiny.prototxt"), "--json"}).out.find("\"multiplier_ratio\"") != std::string::npos);
}
