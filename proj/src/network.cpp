#include "dhmgen/network.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "dhmgen/error.hpp"

namespace dhmgen {
namespace {

enum class TokKind { Ident, String, Number, Colon, LBrace, RBrace, End };

struct Token {
  TokKind kind = TokKind::End;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::string_view source) : text_(text), source_(source) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (pos_ >= text_.size()) {
        t.kind = TokKind::End;
        out.push_back(t);
        return out;
      }
      const char c = text_[pos_];
      if (c == ':') {
        t.kind = TokKind::Colon;
        advance();
      } else if (c == '{') {
        t.kind = TokKind::LBrace;
        advance();
      } else if (c == '}') {
        t.kind = TokKind::RBrace;
        advance();
      } else if (c == '"' || c == '\'') {
        t.kind = TokKind::String;
        advance();
        while (pos_ < text_.size() && text_[pos_] != c) {
          if (text_[pos_] == '\n') fail(t.line, t.col, "unterminated string");
          t.text.push_back(text_[pos_]);
          advance();
        }
        if (pos_ >= text_.size()) fail(t.line, t.col, "unterminated string");
        advance();
      } else if (is_ident_start(c)) {
        t.kind = TokKind::Ident;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
          t.text.push_back(text_[pos_]);
          advance();
        }
      } else if (c == '-' || c == '+' || (c >= '0' && c <= '9')) {
        t.kind = TokKind::Number;
        while (pos_ < text_.size() &&
               (is_ident_char(text_[pos_]) || text_[pos_] == '-' || text_[pos_] == '+' ||
                text_[pos_] == '.')) {
          t.text.push_back(text_[pos_]);
          advance();
        }
      } else {
        fail(line_, col_, std::string("unexpected character '") + c + "'");
      }
      out.push_back(std::move(t));
    }
  }

  [[noreturn]] void fail(int line, int col, const std::string& msg) const {
    std::ostringstream os;
    os << source_ << ":" << line << ":" << col << ": " << msg;
    throw Error(ErrorCode::SyntaxError, os.str());
  }

 private:
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::string_view source_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Untyped message tree; interpretation happens afterwards so that unknown
// keys can be reported with their own location.
struct Field {
  std::string key;
  int line = 0;
  int col = 0;
  bool is_message = false;
  Token value;
  std::vector<Field> children;
};

class TreeParser {
 public:
  TreeParser(std::vector<Token> toks, const Lexer& lexer) : toks_(std::move(toks)), lexer_(lexer) {}

  std::vector<Field> parse_top() {
    auto fields = parse_fields(false);
    if (peek().kind != TokKind::End) fail(peek(), "unexpected '}'");
    return fields;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const { lexer_.fail(t.line, t.col, msg); }

  std::vector<Field> parse_fields(bool nested) {
    std::vector<Field> out;
    while (true) {
      const Token& t = peek();
      if (t.kind == TokKind::End) {
        if (nested) fail(t, "unexpected end of input, expected '}'");
        return out;
      }
      if (t.kind == TokKind::RBrace) {
        if (!nested) fail(t, "unexpected '}'");
        return out;
      }
      if (t.kind != TokKind::Ident) fail(t, "expected field name");
      Field f;
      f.key = t.text;
      f.line = t.line;
      f.col = t.col;
      next();
      bool colon = false;
      if (peek().kind == TokKind::Colon) {
        next();
        colon = true;
      }
      if (peek().kind == TokKind::LBrace) {
        next();
        f.is_message = true;
        f.children = parse_fields(true);
        next();  // '}'
      } else {
        if (!colon) fail(peek(), "expected ':' after '" + f.key + "'");
        const Token& v = next();
        if (v.kind != TokKind::Ident && v.kind != TokKind::String && v.kind != TokKind::Number)
          fail(v, "expected a value for '" + f.key + "'");
        f.value = v;
      }
      out.push_back(std::move(f));
    }
  }

  std::vector<Token> toks_;
  const Lexer& lexer_;
  std::size_t pos_ = 0;
};

class Interpreter {
 public:
  explicit Interpreter(std::string_view source) : source_(source) {}

  Network build(const std::vector<Field>& top) {
    Network net;
    net.input_name = "data";
    std::vector<int> dims;
    bool have_input = false;
    std::set<std::string> seen;
    std::set<std::string> layer_names;

    for (const auto& f : top) {
      if (f.key == "name") {
        once(f, seen);
        net.name = string_value(f);
      } else if (f.key == "input") {
        once(f, seen);
        net.input_name = string_value(f);
        have_input = true;
      } else if (f.key == "input_dim") {
        dims.push_back(int_value(f));
        if (dims.size() > 4) fail(ErrorCode::SyntaxError, f, "more than 4 input_dim values");
        if (dims.size() == 1 && dims[0] != 1)
          fail(ErrorCode::SyntaxError, f, "batch dimension must be 1");
        if (dims.size() > 1 && dims.back() < 1)
          fail(ErrorCode::SyntaxError, f, "input_dim must be >= 1");
      } else if (f.key == "layer") {
        message(f);
        add_layer(f, net, layer_names);
      } else {
        unknown(f);
      }
    }
    (void)have_input;
    if (dims.size() != 4) fail_plain(ErrorCode::MissingRequiredField, "expected 4 input_dim values");
    if (net.blocks.empty()) fail_plain(ErrorCode::MissingRequiredField, "no convolution layer declared");
    net.input_shape = Shape3{dims[1], dims[2], dims[3]};
    return net;
  }

 private:
  [[noreturn]] void fail(ErrorCode code, const Field& f, const std::string& msg) const {
    std::ostringstream os;
    os << source_ << ":" << f.line << ":" << f.col << ": " << msg;
    throw Error(code, os.str());
  }
  [[noreturn]] void fail_plain(ErrorCode code, const std::string& msg) const {
    throw Error(code, std::string(source_) + ": " + msg);
  }
  [[noreturn]] void unknown(const Field& f) const { fail(ErrorCode::UnknownKey, f, "unknown key '" + f.key + "'"); }

  void once(const Field& f, std::set<std::string>& seen) const {
    if (!seen.insert(f.key).second) fail(ErrorCode::SyntaxError, f, "duplicate field '" + f.key + "'");
  }
  void message(const Field& f) const {
    if (!f.is_message) fail(ErrorCode::SyntaxError, f, "'" + f.key + "' must be a message block");
  }
  void scalar(const Field& f) const {
    if (f.is_message) fail(ErrorCode::SyntaxError, f, "'" + f.key + "' must be a scalar");
  }
  std::string string_value(const Field& f) const {
    scalar(f);
    if (f.value.kind != TokKind::String) fail(ErrorCode::SyntaxError, f, "'" + f.key + "' expects a quoted string");
    return f.value.text;
  }
  int int_value(const Field& f) const {
    scalar(f);
    int v = 0;
    const auto& s = f.value.text;
    const char* b = s.data() + (s.starts_with('+') ? 1 : 0);
    auto [p, ec] = std::from_chars(b, s.data() + s.size(), v);
    if (f.value.kind != TokKind::Number || ec != std::errc{} || p != s.data() + s.size())
      fail(ErrorCode::SyntaxError, f, "'" + f.key + "' expects an integer");
    return v;
  }
  bool bool_value(const Field& f) const {
    scalar(f);
    if (f.value.kind == TokKind::Ident && f.value.text == "true") return true;
    if (f.value.kind == TokKind::Ident && f.value.text == "false") return false;
    fail(ErrorCode::SyntaxError, f, "'" + f.key + "' expects true or false");
  }
  std::string enum_value(const Field& f) const {
    scalar(f);
    if (f.value.kind != TokKind::Ident) fail(ErrorCode::SyntaxError, f, "'" + f.key + "' expects an enum value");
    return f.value.text;
  }

  ConvSpec conv_param(const Field& f) const {
    message(f);
    ConvSpec c;
    bool have_n = false;
    bool have_k = false;
    std::set<std::string> seen;
    for (const auto& g : f.children) {
      if (g.key == "num_output") {
        once(g, seen);
        c.num_outputs = int_value(g);
        if (c.num_outputs < 1) fail(ErrorCode::SyntaxError, g, "num_output must be >= 1");
        have_n = true;
      } else if (g.key == "kernel_size") {
        once(g, seen);
        c.kernel = int_value(g);
        if (c.kernel < 1 || c.kernel % 2 == 0)
          fail(ErrorCode::SyntaxError, g, "kernel_size must be an odd positive integer");
        have_k = true;
      } else if (g.key == "stride") {
        once(g, seen);
        if (int_value(g) != 1) fail(ErrorCode::SyntaxError, g, "convolution stride must be 1");
      } else if (g.key == "bias_term") {
        once(g, seen);
        c.bias_enabled = bool_value(g);
      } else {
        unknown(g);
      }
    }
    if (!have_n) fail(ErrorCode::MissingRequiredField, f, "convolution_param requires num_output");
    if (!have_k) fail(ErrorCode::MissingRequiredField, f, "convolution_param requires kernel_size");
    return c;
  }

  PoolSpec pool_param(const Field& f) const {
    message(f);
    PoolSpec p;
    std::optional<int> kernel;
    std::optional<int> stride;
    std::set<std::string> seen;
    for (const auto& g : f.children) {
      if (g.key == "pool") {
        once(g, seen);
        if (enum_value(g) != "MAX") fail(ErrorCode::SyntaxError, g, "only MAX pooling is supported");
      } else if (g.key == "kernel_size") {
        once(g, seen);
        kernel = int_value(g);
        if (*kernel < 1) fail(ErrorCode::SyntaxError, g, "kernel_size must be >= 1");
      } else if (g.key == "stride") {
        once(g, seen);
        stride = int_value(g);
        if (*stride < 1) fail(ErrorCode::SyntaxError, g, "stride must be >= 1");
      } else {
        unknown(g);
      }
    }
    p.kernel = kernel.value_or(stride.value_or(2));
    p.stride = stride.value_or(p.kernel);
    if (p.kernel != p.stride) fail(ErrorCode::SyntaxError, f, "pooling kernel_size must equal stride");
    return p;
  }

  void add_layer(const Field& f, Network& net, std::set<std::string>& names) const {
    std::string name;
    std::string type;
    std::string bottom;
    std::string top;
    const Field* conv = nullptr;
    const Field* pool = nullptr;
    std::set<std::string> seen;
    for (const auto& g : f.children) {
      if (g.key == "name") {
        once(g, seen);
        name = string_value(g);
      } else if (g.key == "type") {
        once(g, seen);
        type = string_value(g);
      } else if (g.key == "bottom") {
        once(g, seen);
        bottom = string_value(g);
      } else if (g.key == "top") {
        once(g, seen);
        top = string_value(g);
      } else if (g.key == "convolution_param") {
        once(g, seen);
        conv = &g;
      } else if (g.key == "pooling_param") {
        once(g, seen);
        pool = &g;
      } else {
        unknown(g);
      }
    }
    if (name.empty()) fail(ErrorCode::MissingRequiredField, f, "layer requires a name");
    if (type.empty()) fail(ErrorCode::MissingRequiredField, f, "layer '" + name + "' requires a type");
    if (!names.insert(name).second) fail(ErrorCode::DuplicateLayerName, f, "duplicate layer name '" + name + "'");

    if (type == "Convolution") {
      if (pool) fail(ErrorCode::UnknownKey, *pool, "pooling_param not allowed on a Convolution layer");
      if (!conv) fail(ErrorCode::MissingRequiredField, f, "layer '" + name + "' requires convolution_param");
      LayerBlock b;
      b.name = name;
      b.bottom = bottom;
      b.top = top;
      b.conv = conv_param(*conv);
      net.blocks.push_back(std::move(b));
    } else if (type == "Pooling") {
      if (conv) fail(ErrorCode::UnknownKey, *conv, "convolution_param not allowed on a Pooling layer");
      if (net.blocks.empty()) fail(ErrorCode::BlockOrder, f, "pooling layer '" + name + "' before any convolution");
      auto& b = net.blocks.back();
      if (b.pool || b.activation)
        fail(ErrorCode::BlockOrder, f, "pooling layer '" + name + "' must directly follow a convolution");
      PoolSpec p = pool ? pool_param(*pool) : PoolSpec{};
      p.name = name;
      p.bottom = bottom;
      p.top = top;
      b.pool = std::move(p);
    } else if (type == "TanH") {
      if (conv || pool) fail(ErrorCode::UnknownKey, conv ? *conv : *pool, "parameters not allowed on a TanH layer");
      if (net.blocks.empty()) fail(ErrorCode::BlockOrder, f, "activation '" + name + "' before any convolution");
      auto& b = net.blocks.back();
      if (b.activation) fail(ErrorCode::BlockOrder, f, "second activation '" + name + "' in one block");
      b.activation = ActivationSpec{ActivationKind::Tanh, name, bottom, top};
    } else {
      fail(ErrorCode::UnsupportedLayer, f, "unsupported layer type '" + type + "'");
    }
  }

  std::string_view source_;
};

void quoted(std::ostream& os, std::string_view key, const std::string& v, const char* indent) {
  if (!v.empty()) os << indent << key << ": \"" << v << "\"\n";
}

}  // namespace

Network parse_network(std::string_view text, std::string_view source_name) {
  Lexer lexer(text, source_name);
  auto toks = lexer.run();
  if (toks.size() == 1) lexer.fail(1, 1, "empty topology");
  TreeParser tree(std::move(toks), lexer);
  auto fields = tree.parse_top();
  return Interpreter(source_name).build(fields);
}

std::string serialize_network(const Network& net) {
  std::ostringstream os;
  if (!net.name.empty()) os << "name: \"" << net.name << "\"\n";
  os << "input: \"" << net.input_name << "\"\n";
  os << "input_dim: 1\n";
  os << "input_dim: " << net.input_shape.channels << "\n";
  os << "input_dim: " << net.input_shape.height << "\n";
  os << "input_dim: " << net.input_shape.width << "\n";
  for (const auto& b : net.blocks) {
    os << "layer {\n";
    quoted(os, "name", b.name, "  ");
    os << "  type: \"Convolution\"\n";
    quoted(os, "bottom", b.bottom, "  ");
    quoted(os, "top", b.top, "  ");
    os << "  convolution_param {\n";
    os << "    num_output: " << b.conv.num_outputs << "\n";
    os << "    kernel_size: " << b.conv.kernel << "\n";
    if (!b.conv.bias_enabled) os << "    bias_term: false\n";
    os << "  }\n}\n";
    if (b.pool) {
      os << "layer {\n";
      quoted(os, "name", b.pool->name, "  ");
      os << "  type: \"Pooling\"\n";
      quoted(os, "bottom", b.pool->bottom, "  ");
      quoted(os, "top", b.pool->top, "  ");
      os << "  pooling_param {\n    pool: MAX\n";
      os << "    kernel_size: " << b.pool->kernel << "\n";
      os << "    stride: " << b.pool->stride << "\n  }\n}\n";
    }
    if (b.activation) {
      os << "layer {\n";
      quoted(os, "name", b.activation->name, "  ");
      os << "  type: \"TanH\"\n";
      quoted(os, "bottom", b.activation->bottom, "  ");
      quoted(os, "top", b.activation->top, "  ");
      os << "}\n";
    }
  }
  return os.str();
}

long long ValidatedNetwork::multiplications(std::size_t i) const {
  const auto& b = block(i);
  const long long k = b.conv.kernel;
  return static_cast<long long>(b.conv.num_outputs) * block_shapes(i).input.channels * k * k;
}

ValidatedNetwork validate(const Network& net) {
  if (net.blocks.empty()) throw Error(ErrorCode::MissingRequiredField, "network '" + net.name + "' has no blocks");
  const auto& in = net.input_shape;
  if (in.channels < 1 || in.height < 1 || in.width < 1)
    throw Error(ErrorCode::ShapeUnderflow, "network '" + net.name + "': input shape must be >= 1 in every dimension");

  ValidatedNetwork v;
  v.net_ = net;
  Shape3 cur = in;
  std::string tip = net.input_name;

  auto follow = [&](const std::string& layer, const std::string& bottom, const std::string& top) {
    if (!bottom.empty() && bottom != tip)
      throw Error(ErrorCode::ChannelMismatch, "layer '" + layer + "' reads blob '" + bottom + "' but the stream carries '" +
                                                  tip + "' (" + std::to_string(cur.channels) + " channels)");
    tip = top.empty() ? layer : top;
  };

  for (const auto& b : net.blocks) {
    if (b.conv.num_outputs < 1 || b.conv.kernel < 1 || b.conv.kernel % 2 == 0)
      throw Error(ErrorCode::SyntaxError, "layer '" + b.name + "': invalid convolution parameters");
    follow(b.name, b.bottom, b.top);
    BlockShapes s;
    s.input = cur;
    s.conv_output = Shape3{b.conv.num_outputs, cur.height - b.conv.kernel + 1, cur.width - b.conv.kernel + 1};
    if (s.conv_output.height < 1 || s.conv_output.width < 1)
      throw Error(ErrorCode::ShapeUnderflow, "layer '" + b.name + "': kernel " + std::to_string(b.conv.kernel) +
                                                 " does not fit input " + std::to_string(cur.height) + "x" +
                                                 std::to_string(cur.width));
    s.output = s.conv_output;
    if (b.pool) {
      follow(b.pool->name, b.pool->bottom, b.pool->top);
      const int p = b.pool->kernel;
      if (p < 1 || p != b.pool->stride)
        throw Error(ErrorCode::SyntaxError, "layer '" + b.pool->name + "': pooling kernel must equal stride");
      s.output.height /= p;
      s.output.width /= p;
      if (s.output.height < 1 || s.output.width < 1)
        throw Error(ErrorCode::ShapeUnderflow, "layer '" + b.pool->name + "': pooling window " + std::to_string(p) +
                                                   " exceeds map " + std::to_string(s.conv_output.height) + "x" +
                                                   std::to_string(s.conv_output.width));
    }
    if (b.activation) follow(b.activation->name, b.activation->bottom, b.activation->top);
    cur = s.output;
    v.shapes_.push_back(s);
  }
  return v;
}

}  // namespace dhmgen
