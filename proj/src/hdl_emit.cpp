#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>

#include "dhmgen/error.hpp"
#include "dhmgen/hdl.hpp"
#include "dhmgen/identifier.hpp"

namespace dhmgen {

const HdlFile* HdlBundle::find(const std::string& name) const {
  for (const auto& f : files)
    if (f.name == name) return &f;
  return nullptr;
}

namespace {

constexpr const char* kVersion = "dhmgen 1.0";

std::string n2s(long long v) { return std::to_string(v); }

std::string range(int width) { return "(" + n2s(width - 1) + " downto 0)"; }

/// Two's-complement bit-string literal.
std::string bits(std::int64_t v, int width) {
  std::string s(width, '0');
  for (int i = 0; i < width; ++i)
    if ((static_cast<std::uint64_t>(v) >> i) & 1u) s[width - 1 - i] = '1';
  return "\"" + s + "\"";
}

std::string slv(int width) { return "std_logic_vector" + range(width); }

class Text {
 public:
  Text& operator()(const std::string& line = "") {
    if (!line.empty()) os_ << std::string(indent_ * 2, ' ') << line;
    os_ << "\n";
    return *this;
  }
  void in() { ++indent_; }
  void out() { --indent_; }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
  int indent_ = 0;
};

void file_header(Text& t, const std::string& file, const std::string& what, const EmitOptions& o) {
  t("-- " + file + ": " + what);
  t("-- Generated by " + std::string(kVersion) + ". Do not edit.");
  if (!o.stamp.empty()) t("-- " + o.stamp);
}

void library_clause(Text& t) {
  t("library ieee;");
  t("use ieee.std_logic_1164.all;");
  t("use ieee.numeric_std.all;");
}

struct PortLine {
  std::string name;
  std::string dir;
  std::string type;
};

void entity_decl(Text& t, const std::string& name, const std::vector<PortLine>& ports) {
  t("entity " + name + " is");
  t.in();
  t("port (");
  t.in();
  std::size_t w = 0;
  for (const auto& p : ports) w = std::max(w, p.name.size());
  for (std::size_t i = 0; i < ports.size(); ++i) {
    const auto& p = ports[i];
    t(p.name + std::string(w - p.name.size() + 1, ' ') + ": " + p.dir + " " + p.type +
      (i + 1 < ports.size() ? ";" : ""));
  }
  t.out();
  t(");");
  t.out();
  t("end entity " + name + ";");
}

std::vector<PortLine> stream_ports(int in_width, int out_width, int inputs = 1) {
  std::vector<PortLine> p{{"clk", "in ", "std_logic"}, {"rst_n", "in ", "std_logic"}};
  if (inputs == 1) {
    p.push_back({"in_data", "in ", slv(in_width)});
  } else {
    for (int i = 0; i < inputs; ++i) p.push_back({"in_data_" + n2s(i), "in ", slv(in_width)});
  }
  p.push_back({"in_dv", "in ", "std_logic"});
  p.push_back({"in_fv", "in ", "std_logic"});
  p.push_back({"out_data", "out", slv(out_width)});
  p.push_back({"out_dv", "out", "std_logic"});
  p.push_back({"out_fv", "out", "std_logic"});
  return p;
}

/// Round-half-even shift and saturation of `src` (src_bits wide) into the
/// data width; result in signal rq_out. Emits declarations into `decl` and
/// statements into `body`.
void requantize_stage(Text& decl, Text& body, const std::string& src, const Requantize& r) {
  const int w = r.from_bits;
  const int s = r.shift;
  decl("signal rq_round : signed" + range(w + 1) + ";");
  decl("signal rq_out   : signed" + range(r.bits) + ";");
  if (s > 0) {
    decl("signal rq_floor : signed" + range(w) + ";");
    decl("signal rq_up    : std_logic;");
    body("rq_floor <= shift_right(" + src + ", " + n2s(s) + ");");
    const std::string rem = "unsigned(" + src + "(" + n2s(s - 1) + " downto 0))";
    const std::string half = "unsigned'(" + bits(std::int64_t{1} << (s - 1), s) + ")";
    body("rq_up    <= '1' when " + rem + " > " + half + " or (" + rem + " = " + half +
         " and rq_floor(0) = '1') else '0';");
    body("rq_round <= resize(rq_floor, " + n2s(w + 1) + ") + 1 when rq_up = '1' else resize(rq_floor, " +
         n2s(w + 1) + ");");
  } else {
    body("rq_round <= resize(" + src + ", " + n2s(w + 1) + ");");
  }
  const std::int64_t hi = (std::int64_t{1} << (r.bits - 1)) - 1;
  const std::string hi_lit = "signed'(" + bits(hi, w + 1) + ")";
  const std::string lo_lit = "signed'(" + bits(-hi - 1, w + 1) + ")";
  body("rq_out   <= signed'(" + bits(hi, r.bits) + ") when rq_round > " + hi_lit + " else");
  body("            signed'(" + bits(-hi - 1, r.bits) + ") when rq_round < " + lo_lit + " else");
  body("            resize(rq_round, " + n2s(r.bits) + ");");
}

/// Registered arithmetic actor: `expr` (signed, width `w`) is captured into
/// acc_q on every valid input, then optionally requantized.
void registered_arch(Text& t, const std::string& entity, int w, const std::vector<std::string>& expr_lines,
                     const std::optional<Requantize>& rq, const std::string& dv_src, const std::string& fv_src) {
  Text decl;
  Text body;
  decl.in();
  body.in();
  decl("signal acc   : signed" + range(w) + ";");
  decl("signal acc_q : signed" + range(w) + ";");
  decl("signal dv_q  : std_logic;");
  decl("signal fv_q  : std_logic;");
  for (const auto& l : expr_lines) body(l);
  body("reg_p : process (clk)");
  body("begin");
  body.in();
  body("if rising_edge(clk) then");
  body.in();
  body("if rst_n = '0' then");
  body.in();
  body("acc_q <= (others => '0');");
  body("dv_q  <= '0';");
  body("fv_q  <= '0';");
  body.out();
  body("else");
  body.in();
  body("acc_q <= acc;");
  body("dv_q  <= " + dv_src + ";");
  body("fv_q  <= " + fv_src + ";");
  body.out();
  body("end if;");
  body.out();
  body("end if;");
  body.out();
  body("end process reg_p;");
  if (rq) {
    requantize_stage(decl, body, "acc_q", *rq);
    body("out_data <= std_logic_vector(rq_out);");
  } else {
    body("out_data <= std_logic_vector(acc_q);");
  }
  body("out_dv   <= dv_q;");
  body("out_fv   <= fv_q;");
  t("architecture rtl of " + entity + " is");
  t(decl.str().substr(0, decl.str().size() - 1));
  t("begin");
  t(body.str().substr(0, body.str().size() - 1));
  t("end architecture rtl;");
}

void line_buffer_entity(Text& t, const std::string& name, const Actor& a) {
  const auto& p = a.as<LineBufferParams>();
  const int b = a.in_width;
  const int k = p.kernel;
  const int depth = p.depth();
  entity_decl(t, name, stream_ports(b, b * k * k));
  t();
  t("architecture rtl of " + name + " is");
  t.in();
  t("-- delay line of " + n2s(k - 1) + " rows plus " + n2s(k) + " registers");
  t("type delay_line_t is array (0 to " + n2s(depth - 1) + ") of " + slv(b) + ";");
  t("signal taps  : delay_line_t;");
  t("signal col   : natural range 0 to " + n2s(p.width - 1) + ";");
  t("signal row   : natural range 0 to " + n2s(p.height - 1) + ";");
  t("signal valid : std_logic;");
  t("signal frame : std_logic;");
  t.out();
  t("begin");
  t.in();
  t("shift_p : process (clk)");
  t("begin");
  t.in();
  t("if rising_edge(clk) then");
  t.in();
  t("if rst_n = '0' then");
  t.in();
  t("col   <= 0;");
  t("row   <= 0;");
  t("valid <= '0';");
  t("frame <= '0';");
  t.out();
  t("else");
  t.in();
  t("frame <= in_fv;");
  t("valid <= '0';");
  t("if in_fv = '0' then");
  t.in();
  t("col <= 0;");
  t("row <= 0;");
  t.out();
  t("elsif in_dv = '1' then");
  t.in();
  t("taps(0) <= in_data;");
  t("for i in 1 to " + n2s(depth - 1) + " loop");
  t.in();
  t("taps(i) <= taps(i - 1);");
  t.out();
  t("end loop;");
  t("if row >= " + n2s(k - 1) + " and col >= " + n2s(k - 1) + " then");
  t.in();
  t("valid <= '1';");
  t.out();
  t("end if;");
  t("if col = " + n2s(p.width - 1) + " then");
  t.in();
  t("col <= 0;");
  t("if row = " + n2s(p.height - 1) + " then");
  t.in();
  t("row <= 0;");
  t.out();
  t("else");
  t.in();
  t("row <= row + 1;");
  t.out();
  t("end if;");
  t.out();
  t("else");
  t.in();
  t("col <= col + 1;");
  t.out();
  t("end if;");
  t.out();
  t("end if;");
  t.out();
  t("end if;");
  t.out();
  t("end if;");
  t.out();
  t("end process shift_p;");
  for (int ky = 0; ky < k; ++ky)
    for (int kx = 0; kx < k; ++kx) {
      const int e = ky * k + kx;
      const int back = (k - 1 - ky) * p.width + (k - 1 - kx);
      t("out_data(" + n2s((e + 1) * b - 1) + " downto " + n2s(e * b) + ") <= taps(" + n2s(back) + ");");
    }
  t("out_dv <= valid;");
  t("out_fv <= frame;");
  t.out();
  t("end architecture rtl;");
}

void engine_entity(Text& t, const std::string& name, const Actor& a, int weight_bits) {
  const auto& p = a.as<ConvEngineParams>();
  const int b = a.in_width;
  const int w = a.out_width;
  entity_decl(t, name, stream_ports(b * p.kernel * p.kernel, w));
  t();
  const bool generic = std::any_of(p.cells.begin(), p.cells.end(), [](const MultCell& c) { return c.op == CellOp::Multiply; });
  auto tap = [&](const MultCell& c) {
    return "signed(in_data(" + n2s((c.tap + 1) * b - 1) + " downto " + n2s(c.tap * b) + "))";
  };
  auto term = [&](const MultCell& c) {
    switch (c.op) {
      case CellOp::Wire: return "resize(" + tap(c) + ", " + n2s(w) + ")";
      case CellOp::Shift: return "shift_left(resize(" + tap(c) + ", " + n2s(w) + "), " + n2s(c.shift) + ")";
      case CellOp::Multiply:
        return "resize(" + tap(c) + " * signed'(" + bits(c.constant, weight_bits) + "), " + n2s(w) + ")";
    }
    return std::string();
  };
  t("architecture rtl of " + name + " is");
  t.in();
  if (generic) {
    t("-- constant multipliers are mapped to logic elements, not DSP blocks");
    t("attribute multstyle : string;");
    t("attribute multstyle of rtl : architecture is \"logic\";");
    t("attribute use_dsp : string;");
    t("attribute use_dsp of rtl : architecture is \"no\";");
  }
  if (p.cells.size() > 1)
    for (std::size_t i = 0; i < p.cells.size(); ++i) t("signal t" + n2s(static_cast<long long>(i)) + " : signed" + range(w) + ";");
  t.out();
  t("begin");
  t.in();
  if (p.cells.empty()) {
    t("out_data <= (others => '0');");
  } else if (p.cells.size() == 1) {
    const auto& c = p.cells[0];
    t("out_data <= std_logic_vector(" + std::string(c.negate ? "-" : "") + term(c) + ");");
  } else {
    std::string sum;
    for (std::size_t i = 0; i < p.cells.size(); ++i) {
      const auto& c = p.cells[i];
      t("t" + n2s(static_cast<long long>(i)) + " <= " + term(c) + ";");
      const std::string id = "t" + n2s(static_cast<long long>(i));
      if (i == 0)
        sum = (c.negate ? "-" : "") + id;
      else
        sum += (c.negate ? " - " : " + ") + id;
    }
    t("out_data <= std_logic_vector(" + sum + ");");
  }
  t("out_dv   <= in_dv;");
  t("out_fv   <= in_fv;");
  t.out();
  t("end architecture rtl;");
}

void sum_entity(Text& t, const std::string& name, const Actor& a) {
  const int arity = a.as<ChannelSumParams>().arity;
  const int w = a.requantize ? a.requantize->from_bits : a.out_width;
  entity_decl(t, name, stream_ports(a.in_width, a.out_width, arity));
  t();
  std::string expr = "acc <= ";
  for (int i = 0; i < arity; ++i)
    expr += (i ? " + " : "") + std::string("resize(signed(") + (arity == 1 ? "in_data" : "in_data_" + n2s(i)) + "), " +
            n2s(w) + ")";
  registered_arch(t, name, w, {expr + ";"}, a.requantize, "in_dv", "in_fv");
}

void bias_entity(Text& t, const std::string& name, const Actor& a) {
  const int w = a.requantize ? a.requantize->from_bits : a.out_width;
  entity_decl(t, name, stream_ports(a.in_width, a.out_width));
  t();
  registered_arch(t, name, w,
                  {"acc <= resize(signed(in_data), " + n2s(w) + ") + signed'(" + bits(a.as<BiasAddParams>().bias, w) +
                   ");"},
                  a.requantize, "in_dv", "in_fv");
}

void pool_entity(Text& t, const std::string& name, const Actor& a) {
  const auto& p = a.as<MaxPoolParams>();
  const int w = a.in_width;
  const int out_w = p.width / p.pool;
  const int out_h = p.height / p.pool;
  entity_decl(t, name, stream_ports(a.in_width, a.out_width));
  t();
  Text decl;
  Text body;
  decl.in();
  body.in();
  decl("-- running maxima of the current pooling band");
  decl("type partial_t is array (0 to " + n2s(out_w - 1) + ") of signed" + range(w) + ";");
  decl("signal partial : partial_t;");
  decl("signal col     : natural range 0 to " + n2s(p.width - 1) + ";");
  decl("signal row     : natural range 0 to " + n2s(p.height - 1) + ";");
  decl("signal max_q   : signed" + range(w) + ";");
  decl("signal dv_q    : std_logic;");
  decl("signal fv_q    : std_logic;");
  body("pool_p : process (clk)");
  body.in();
  body("variable m : signed" + range(w) + ";");
  body("variable j : natural range 0 to " + n2s(out_w - 1) + ";");
  body.out();
  body("begin");
  body.in();
  body("if rising_edge(clk) then");
  body.in();
  body("if rst_n = '0' then");
  body.in();
  body("col   <= 0;");
  body("row   <= 0;");
  body("max_q <= (others => '0');");
  body("dv_q  <= '0';");
  body("fv_q  <= '0';");
  body.out();
  body("else");
  body.in();
  body("fv_q <= in_fv;");
  body("dv_q <= '0';");
  body("if in_fv = '0' then");
  body.in();
  body("col <= 0;");
  body("row <= 0;");
  body.out();
  body("elsif in_dv = '1' then");
  body.in();
  body("if row < " + n2s(out_h * p.pool) + " and col < " + n2s(out_w * p.pool) + " then");
  body.in();
  body("j := col / " + n2s(p.pool) + ";");
  body("if row mod " + n2s(p.pool) + " = 0 and col mod " + n2s(p.pool) + " = 0 then");
  body.in();
  body("m := signed(in_data);");
  body.out();
  body("elsif partial(j) > signed(in_data) then");
  body.in();
  body("m := partial(j);");
  body.out();
  body("else");
  body.in();
  body("m := signed(in_data);");
  body.out();
  body("end if;");
  body("partial(j) <= m;");
  body("if row mod " + n2s(p.pool) + " = " + n2s(p.pool - 1) + " and col mod " + n2s(p.pool) + " = " +
       n2s(p.pool - 1) + " then");
  body.in();
  body("max_q <= m;");
  body("dv_q  <= '1';");
  body.out();
  body("end if;");
  body.out();
  body("end if;");
  body("if col = " + n2s(p.width - 1) + " then");
  body.in();
  body("col <= 0;");
  body("if row = " + n2s(p.height - 1) + " then");
  body.in();
  body("row <= 0;");
  body.out();
  body("else");
  body.in();
  body("row <= row + 1;");
  body.out();
  body("end if;");
  body.out();
  body("else");
  body.in();
  body("col <= col + 1;");
  body.out();
  body("end if;");
  body.out();
  body("end if;");
  body.out();
  body("end if;");
  body.out();
  body("end if;");
  body.out();
  body("end process pool_p;");
  if (a.requantize) {
    requantize_stage(decl, body, "max_q", *a.requantize);
    body("out_data <= std_logic_vector(rq_out);");
  } else {
    body("out_data <= std_logic_vector(max_q);");
  }
  body("out_dv   <= dv_q;");
  body("out_fv   <= fv_q;");
  t("architecture rtl of " + name + " is");
  t(decl.str().substr(0, decl.str().size() - 1));
  t("begin");
  t(body.str().substr(0, body.str().size() - 1));
  t("end architecture rtl;");
}

void tanh_entity(Text& t, const std::string& name, const Actor& a, const std::string& pkg, const std::string& rom) {
  const auto& tab = a.as<TanhLutParams>().table;
  const int w = a.in_width;
  const int ab = tab.address_bits;
  entity_decl(t, name, stream_ports(a.in_width, a.out_width));
  t();
  t("use work." + pkg + ".all;");
  t("architecture rtl of " + name + " is");
  t.in();
  t("signal biased  : signed" + range(w + 1) + ";");
  t("signal shifted : signed" + range(w + 1) + ";");
  t("signal index   : signed" + range(ab) + ";");
  t("signal addr    : natural range 0 to " + n2s((std::int64_t{1} << ab) - 1) + ";");
  t("signal data_q  : " + slv(a.out_width) + ";");
  t("signal dv_q    : std_logic;");
  t("signal fv_q    : std_logic;");
  t.out();
  t("begin");
  t.in();
  if (tab.shift > 0)
    t("biased  <= resize(signed(in_data), " + n2s(w + 1) + ") + signed'(" +
      bits(std::int64_t{1} << (tab.shift - 1), w + 1) + ");");
  else
    t("biased  <= resize(signed(in_data), " + n2s(w + 1) + ");");
  t("shifted <= shift_right(biased, " + n2s(tab.shift) + ");");
  t("index   <= signed'(" + bits(tab.max_index(), ab) + ") when shifted > signed'(" + bits(tab.max_index(), w + 1) +
    ") else");
  t("           signed'(" + bits(tab.min_index(), ab) + ") when shifted < signed'(" + bits(tab.min_index(), w + 1) +
    ") else");
  t("           resize(shifted, " + n2s(ab) + ");");
  t("addr    <= to_integer(unsigned(not index(" + n2s(ab - 1) + ") & index(" + n2s(ab - 2) + " downto 0)));");
  t("rom_p : process (clk)");
  t("begin");
  t.in();
  t("if rising_edge(clk) then");
  t.in();
  t("if rst_n = '0' then");
  t.in();
  t("data_q <= (others => '0');");
  t("dv_q   <= '0';");
  t("fv_q   <= '0';");
  t.out();
  t("else");
  t.in();
  t("data_q <= " + rom + "(addr);");
  t("dv_q   <= in_dv;");
  t("fv_q   <= in_fv;");
  t.out();
  t("end if;");
  t.out();
  t("end if;");
  t.out();
  t("end process rom_p;");
  t("out_data <= data_q;");
  t("out_dv   <= dv_q;");
  t("out_fv   <= fv_q;");
  t.out();
  t("end architecture rtl;");
}

/// Entity name realizing an actor; actors sharing identical hardware share
/// one entity.
std::string entity_of(const DhmGraph& g, const Actor& a) {
  const auto& L = g.blocks[a.block].label;
  switch (a.kind()) {
    case ActorKind::LineBuffer: return L + "_lb";
    case ActorKind::ConvEngine: return a.label;
    case ActorKind::ChannelSum: return L + "_sum";
    case ActorKind::BiasAdd: return a.label;
    case ActorKind::MaxPool: return L + "_pool";
    case ActorKind::TanhLut: return L + "_tanh";
    default: return {};
  }
}

std::string rom_name(const GraphBlock& b) { return b.label + "_tanh_rom"; }

}  // namespace

HdlBundle emit(const DhmGraph& g, const EmitOptions& opts) {
  if (!is_legal_identifier(opts.top_name))
    throw Error(ErrorCode::BadValue, "top name '" + opts.top_name + "' is not a legal VHDL identifier");

  HdlBundle bundle;
  bundle.top_name = opts.top_name;
  const std::string pkg = opts.top_name + "_pkg";
  const int bd = g.data_fmt.total_bits;

  // Package: formats, widths and activation ROMs.
  {
    Text t;
    file_header(t, pkg + ".vhd", "formats and constants", opts);
    t();
    library_clause(t);
    t();
    t("package " + pkg + " is");
    t.in();
    t("constant DATA_BITS      : natural := " + n2s(bd) + ";");
    t("constant DATA_FRAC_BITS : natural := " + n2s(g.data_fmt.frac_bits) + ";");
    for (const auto& b : g.blocks) {
      t();
      t("-- block " + b.name + ": N=" + n2s(b.num_outputs) + " C=" + n2s(b.channels) + " K=" + n2s(b.kernel));
      const std::string U = [&] {
        std::string s = b.label;
        std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
        return s;
      }();
      t("constant " + U + "_WEIGHT_BITS      : natural := " + n2s(b.weight_fmt.total_bits) + ";");
      t("constant " + U + "_WEIGHT_FRAC_BITS : natural := " + n2s(b.weight_fmt.frac_bits) + ";");
      t("constant " + U + "_PRODUCT_BITS     : natural := " + n2s(b.plan.product_bits) + ";");
      t("constant " + U + "_TREE_BITS        : natural := " + n2s(b.plan.tree_bits) + ";");
      t("constant " + U + "_SUM_BITS         : natural := " + n2s(b.plan.sum_bits) + ";");
      t("constant " + U + "_ACC_BITS         : natural := " + n2s(b.plan.post_bias_bits) + ";");
      t("constant " + U + "_ACC_FRAC_BITS    : natural := " + n2s(b.plan.frac_bits) + ";");
      if (b.has_activation) {
        const auto first = g.actors.begin() + b.first_actor;
        const auto it = std::find_if(first, g.actors.begin() + b.end_actor,
                                     [](const Actor& a) { return a.kind() == ActorKind::TanhLut; });
        const auto& tab = it->as<TanhLutParams>().table;
        const std::string type = b.label + "_tanh_rom_t";
        t("type " + type + " is array (0 to " + n2s(static_cast<long long>(tab.size()) - 1) + ") of " + slv(bd) + ";");
        t("constant " + rom_name(b) + " : " + type + " := (");
        t.in();
        for (std::size_t i = 0; i < tab.size(); ++i)
          t(bits(tab.entries[i], bd) + (i + 1 < tab.size() ? "," : "") + "  -- " +
            n2s(static_cast<long long>(i) + tab.min_index()));
        t.out();
        t(");");
      }
    }
    t.out();
    t("end package " + pkg + ";");
    bundle.files.push_back({pkg + ".vhd", t.str()});
  }

  // One file per block holding the entities of its actors.
  for (std::size_t bi = 0; bi < g.blocks.size(); ++bi) {
    const auto& b = g.blocks[bi];
    Text t;
    file_header(t, b.label + ".vhd",
                "block " + b.name + " (N=" + n2s(b.num_outputs) + ", C=" + n2s(b.channels) + ", K=" + n2s(b.kernel) +
                    ")",
                opts);
    std::map<std::string, bool> done;
    for (int id = b.first_actor; id < b.end_actor; ++id) {
      const auto& a = g.actors[id];
      if (a.kind() == ActorKind::Sink) continue;
      const std::string ent = entity_of(g, a);
      if (done[ent]) continue;
      done[ent] = true;
      t();
      library_clause(t);
      t();
      switch (a.kind()) {
        case ActorKind::LineBuffer: line_buffer_entity(t, ent, a); break;
        case ActorKind::ConvEngine: engine_entity(t, ent, a, b.weight_fmt.total_bits); break;
        case ActorKind::ChannelSum: sum_entity(t, ent, a); break;
        case ActorKind::BiasAdd: bias_entity(t, ent, a); break;
        case ActorKind::MaxPool: pool_entity(t, ent, a); break;
        case ActorKind::TanhLut: tanh_entity(t, ent, a, pkg, rom_name(b)); break;
        default: throw Error(ErrorCode::UnsupportedActor, "actor " + a.label + " has no HDL template");
      }
    }
    bundle.files.push_back({b.label + ".vhd", t.str()});
  }

  // Flat structural top level.
  {
    std::vector<PortLine> ports{{"clk", "in ", "std_logic"}, {"rst_n", "in ", "std_logic"}};
    bundle.ports.push_back({"clk", PortDirection::In, 1});
    bundle.ports.push_back({"rst_n", PortDirection::In, 1});
    for (int c = 0; c < g.input.channels; ++c) {
      ports.push_back({"in_c" + n2s(c) + "_data", "in ", slv(bd)});
      bundle.ports.push_back({"in_c" + n2s(c) + "_data", PortDirection::In, bd});
    }
    ports.push_back({"in_dv", "in ", "std_logic"});
    ports.push_back({"in_fv", "in ", "std_logic"});
    bundle.ports.push_back({"in_dv", PortDirection::In, 1});
    bundle.ports.push_back({"in_fv", PortDirection::In, 1});
    const int last = static_cast<int>(g.blocks.size()) - 1;
    const auto out_sinks = g.sinks(last);
    for (std::size_t n = 0; n < out_sinks.size(); ++n) {
      const int w = g.actors[out_sinks[n]].in_width;
      ports.push_back({"out_n" + n2s(static_cast<long long>(n)) + "_data", "out", slv(w)});
      bundle.ports.push_back({"out_n" + n2s(static_cast<long long>(n)) + "_data", PortDirection::Out, w});
    }
    ports.push_back({"out_dv", "out", "std_logic"});
    ports.push_back({"out_fv", "out", "std_logic"});
    bundle.ports.push_back({"out_dv", PortDirection::Out, 1});
    bundle.ports.push_back({"out_fv", PortDirection::Out, 1});

    // Producer feeding each (actor, port).
    std::map<std::pair<int, int>, int> driver;
    for (const auto& e : g.edges) driver[{e.to, e.port}] = e.from;

    Text t;
    file_header(t, opts.top_name + ".vhd", "structural top level", opts);
    t();
    library_clause(t);
    t();
    entity_decl(t, opts.top_name, ports);
    t();
    t("architecture structural of " + opts.top_name + " is");
    t.in();
    for (const auto& a : g.actors) {
      if (a.kind() == ActorKind::Sink) continue;
      t("signal " + a.label + "_data : " + slv(a.out_width * a.out_lanes) + ";");
      t("signal " + a.label + "_dv   : std_logic;");
      t("signal " + a.label + "_fv   : std_logic;");
    }
    t.out();
    t("begin");
    t.in();
    for (const auto& a : g.actors) {
      if (a.kind() == ActorKind::Source) {
        const int c = a.as<SourceParams>().channel;
        t(a.label + "_data <= in_c" + n2s(c) + "_data;");
        t(a.label + "_dv   <= in_dv;");
        t(a.label + "_fv   <= in_fv;");
        continue;
      }
      if (a.kind() == ActorKind::Sink) continue;
      t();
      t("u_" + a.label + " : entity work." + entity_of(g, a));
      t.in();
      t("port map (");
      t.in();
      const std::string first = g.actors[driver.at({a.id, 0})].label;
      std::vector<std::string> maps{"clk      => clk", "rst_n    => rst_n"};
      if (a.input_ports == 1) {
        maps.push_back("in_data  => " + first + "_data");
      } else {
        for (int port = 0; port < a.input_ports; ++port)
          maps.push_back("in_data_" + n2s(port) + " => " + g.actors[driver.at({a.id, port})].label + "_data");
      }
      maps.push_back("in_dv    => " + first + "_dv");
      maps.push_back("in_fv    => " + first + "_fv");
      maps.push_back("out_data => " + a.label + "_data");
      maps.push_back("out_dv   => " + a.label + "_dv");
      maps.push_back("out_fv   => " + a.label + "_fv");
      for (std::size_t i = 0; i < maps.size(); ++i) t(maps[i] + (i + 1 < maps.size() ? "," : ""));
      t.out();
      t(");");
      t.out();
    }
    t();
    for (std::size_t n = 0; n < out_sinks.size(); ++n) {
      const auto& src = g.actors[driver.at({out_sinks[n], 0})];
      t("out_n" + n2s(static_cast<long long>(n)) + "_data <= " + src.label + "_data;");
    }
    const auto& src0 = g.actors[driver.at({out_sinks.front(), 0})];
    t("out_dv <= " + src0.label + "_dv;");
    t("out_fv <= " + src0.label + "_fv;");
    t.out();
    t("end architecture structural;");
    bundle.files.push_back({opts.top_name + ".vhd", t.str()});
  }
  return bundle;
}

}  // namespace dhmgen
