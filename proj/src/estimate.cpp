#include "dhmgen/estimate.hpp"

#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dhmgen/error.hpp"

namespace dhmgen {

BlockResources& BlockResources::operator+=(const BlockResources& o) {
  removed_cells += o.removed_cells;
  wire_cells += o.wire_cells;
  shift_cells += o.shift_cells;
  generic_cells += o.generic_cells;
  adder_cells += o.adder_cells;
  adder_bits += o.adder_bits;
  line_buffer_bits += o.line_buffer_bits;
  window_register_bits += o.window_register_bits;
  tanh_rom_bits += o.tanh_rom_bits;
  pool_buffer_bits += o.pool_buffer_bits;
  multiplier_units += o.multiplier_units;
  return *this;
}

ResourceReport estimate(const DhmGraph& g) {
  ResourceReport r;
  r.total.name = "total";
  for (const auto& b : g.blocks) {
    BlockResources br;
    br.name = b.name;
    const long long wb = b.weight_fmt.total_bits;
    for (int id = b.first_actor; id < b.end_actor; ++id) {
      const Actor& a = g.actors[id];
      switch (a.kind()) {
        case ActorKind::LineBuffer: {
          const auto& p = a.as<LineBufferParams>();
          br.line_buffer_bits += static_cast<long long>(p.kernel - 1) * p.width * a.in_width;
          br.window_register_bits += static_cast<long long>(p.kernel) * a.in_width;
          break;
        }
        case ActorKind::ConvEngine: {
          const auto& p = a.as<ConvEngineParams>();
          br.removed_cells += static_cast<long long>(p.kernel) * p.kernel - static_cast<long long>(p.cells.size());
          for (const auto& c : p.cells) {
            switch (c.op) {
              case CellOp::Wire: ++br.wire_cells; break;
              case CellOp::Shift: ++br.shift_cells; break;
              case CellOp::Multiply:
                ++br.generic_cells;
                br.multiplier_units += a.in_width * wb;
                break;
            }
          }
          if (p.cells.size() > 1) {
            const long long adders = static_cast<long long>(p.cells.size()) - 1;
            br.adder_cells += adders;
            br.adder_bits += adders * a.out_width;
          }
          break;
        }
        case ActorKind::ChannelSum: {
          const long long adders = a.input_ports - 1;
          const int w = a.requantize ? a.requantize->from_bits : a.out_width;
          br.adder_cells += adders;
          br.adder_bits += adders * w;
          break;
        }
        case ActorKind::BiasAdd:
          br.adder_cells += 1;
          br.adder_bits += a.requantize ? a.requantize->from_bits : a.out_width;
          break;
        case ActorKind::TanhLut: {
          const auto& t = a.as<TanhLutParams>().table;
          br.tanh_rom_bits += static_cast<long long>(t.size()) * t.out_fmt.total_bits;
          break;
        }
        case ActorKind::MaxPool: {
          const auto& p = a.as<MaxPoolParams>();
          br.pool_buffer_bits += static_cast<long long>(p.width / p.pool) * a.in_width;
          break;
        }
        default: break;
      }
    }
    r.total += br;
    r.blocks.push_back(std::move(br));
  }
  return r;
}

namespace {

/// Same network, same constants; only the realization of cells may differ.
void require_same_structure(const DhmGraph& a, const DhmGraph& b) {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::GraphMismatch, "graphs differ: " + why); };
  if (a.blocks.size() != b.blocks.size()) fail("block count");
  if (a.actors.size() != b.actors.size()) fail("actor count");
  if (a.edges != b.edges) fail("edges");
  if (a.input != b.input || a.data_fmt != b.data_fmt) fail("input or data format");
  for (std::size_t i = 0; i < a.blocks.size(); ++i)
    if (a.blocks[i] != b.blocks[i]) fail("block " + a.blocks[i].name);
  for (std::size_t i = 0; i < a.actors.size(); ++i) {
    const Actor& x = a.actors[i];
    const Actor& y = b.actors[i];
    if (x.label != y.label || x.kind() != y.kind()) fail("actor " + x.label);
    if (x.kind() == ActorKind::ConvEngine) {
      if (x.as<ConvEngineParams>().constants != y.as<ConvEngineParams>().constants) fail("constants of " + x.label);
    } else if (x.params != y.params) {
      fail("parameters of " + x.label);
    }
  }
}

std::optional<double> ratio(long long before, long long after) {
  if (after == 0) {
    if (before == 0) return 1.0;
    return std::nullopt;
  }
  return static_cast<double>(before) / static_cast<double>(after);
}

std::string ratio_text(const std::optional<double>& r) {
  if (!r) return "unbounded";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << *r << "x";
  return os.str();
}

nlohmann::ordered_json to_json(const BlockResources& b) {
  nlohmann::ordered_json j;
  j["name"] = b.name;
  j["cells"] = {{"zero", b.removed_cells}, {"wire", b.wire_cells}, {"shift", b.shift_cells}, {"generic", b.generic_cells}};
  j["adders"] = {{"count", b.adder_cells}, {"bits", b.adder_bits}};
  j["memory_bits"] = {{"line_buffer", b.line_buffer_bits},
                      {"window_registers", b.window_register_bits},
                      {"tanh_rom", b.tanh_rom_bits},
                      {"pool_buffer", b.pool_buffer_bits},
                      {"total", b.memory_bits()}};
  j["units"] = {{"multipliers", b.multiplier_units}, {"adders", b.adder_units()}, {"logic", b.logic_units()}};
  return j;
}

nlohmann::ordered_json to_json(const ResourceReport& r) {
  nlohmann::ordered_json j;
  j["blocks"] = nlohmann::ordered_json::array();
  for (const auto& b : r.blocks) j["blocks"].push_back(to_json(b));
  j["total"] = to_json(r.total);
  j["dsp_blocks"] = r.dsp_blocks;
  return j;
}

}  // namespace

StrategyReport compare_strategies(const DhmGraph& unspecialized, const DhmGraph& specialized) {
  require_same_structure(unspecialized, specialized);
  StrategyReport s;
  s.unspecialized = estimate(unspecialized);
  s.specialized = estimate(specialized);
  s.multiplier_ratio = ratio(s.unspecialized.total.multiplier_units, s.specialized.total.multiplier_units);
  s.logic_ratio = ratio(s.unspecialized.total.logic_units(), s.specialized.total.logic_units());
  return s;
}

std::string format_report_text(const ResourceReport& r) {
  const std::vector<std::string> head{"block", "zero", "wire", "shift", "generic", "adders", "lb_bits",
                                      "win_bits", "rom_bits", "pool_bits", "mult_units", "logic_units"};
  std::vector<std::vector<std::string>> rows{head};
  auto row = [](const BlockResources& b) {
    return std::vector<std::string>{b.name,
                                    std::to_string(b.removed_cells),
                                    std::to_string(b.wire_cells),
                                    std::to_string(b.shift_cells),
                                    std::to_string(b.generic_cells),
                                    std::to_string(b.adder_cells),
                                    std::to_string(b.line_buffer_bits),
                                    std::to_string(b.window_register_bits),
                                    std::to_string(b.tanh_rom_bits),
                                    std::to_string(b.pool_buffer_bits),
                                    std::to_string(b.multiplier_units),
                                    std::to_string(b.logic_units())};
  };
  for (const auto& b : r.blocks) rows.push_back(row(b));
  rows.push_back(row(r.total));
  std::vector<std::size_t> w(head.size(), 0);
  for (const auto& rr : rows)
    for (std::size_t i = 0; i < rr.size(); ++i) w[i] = std::max(w[i], rr[i].size());
  std::ostringstream os;
  for (const auto& rr : rows) {
    for (std::size_t i = 0; i < rr.size(); ++i) {
      if (i == 0)
        os << std::left << std::setw(static_cast<int>(w[i])) << rr[i];
      else
        os << "  " << std::right << std::setw(static_cast<int>(w[i])) << rr[i];
    }
    os << "\n";
  }
  os << "memory bits: " << r.total.memory_bits() << "\n";
  os << "DSP blocks:  " << r.dsp_blocks << "\n";
  return os.str();
}

std::string format_report_json(const ResourceReport& r) { return to_json(r).dump(2) + "\n"; }

std::string format_strategy_text(const StrategyReport& s) {
  std::ostringstream os;
  os << "strategy        generic  mult_units  logic_units  memory_bits\n";
  auto line = [&](const char* name, const ResourceReport& r) {
    os << std::left << std::setw(14) << name << std::right << std::setw(9) << r.total.generic_cells
       << std::setw(12) << r.total.multiplier_units << std::setw(13) << r.total.logic_units() << std::setw(13)
       << r.total.memory_bits() << "\n";
  };
  line("generic-const", s.unspecialized);
  line("specialized", s.specialized);
  os << "multiplier reduction: " << ratio_text(s.multiplier_ratio) << "\n";
  os << "logic reduction:      " << ratio_text(s.logic_ratio) << "\n";
  return os.str();
}

std::string format_strategy_json(const StrategyReport& s) {
  nlohmann::ordered_json j;
  j["unspecialized"] = to_json(s.unspecialized);
  j["specialized"] = to_json(s.specialized);
  j["multiplier_ratio"] = s.multiplier_ratio ? nlohmann::ordered_json(*s.multiplier_ratio) : "unbounded";
  j["logic_ratio"] = s.logic_ratio ? nlohmann::ordered_json(*s.logic_ratio) : "unbounded";
  return j.dump(2) + "\n";
}

}  // namespace dhmgen
