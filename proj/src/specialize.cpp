#include "dhmgen/specialize.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dhmgen {

MultKind classify_weight(std::int64_t c) {
  if (c == 0) return MultKind{MultKind::Tag::Zero, 1, 0, 0};
  const int sign = c < 0 ? -1 : 1;
  const auto mag = static_cast<std::uint64_t>(c < 0 ? -(c + 1) : c) + (c < 0 ? 1u : 0u);
  if (mag == 1) return MultKind{MultKind::Tag::One, sign, 0, c};
  if ((mag & (mag - 1)) == 0) {
    int s = 0;
    while ((std::uint64_t{1} << s) != mag) ++s;
    return MultKind{MultKind::Tag::Pow2, sign, s, c};
  }
  return MultKind{MultKind::Tag::Generic, sign, 0, c};
}

DhmGraph specialize_graph(const DhmGraph& g) {
  DhmGraph out = g;
  for (auto& a : out.actors) {
    if (a.kind() != ActorKind::ConvEngine) continue;
    auto& p = a.as<ConvEngineParams>();
    std::vector<MultCell> cells;
    for (const auto& cell : p.cells) {
      const MultKind k = classify_weight(cell.constant);
      switch (k.tag) {
        case MultKind::Tag::Zero: break;
        case MultKind::Tag::One: cells.push_back(MultCell{cell.tap, cell.constant, CellOp::Wire, 0, k.sign < 0}); break;
        case MultKind::Tag::Pow2:
          cells.push_back(MultCell{cell.tap, cell.constant, CellOp::Shift, k.shift, k.sign < 0});
          break;
        case MultKind::Tag::Generic:
          cells.push_back(MultCell{cell.tap, cell.constant, CellOp::Multiply, 0, false});
          break;
      }
    }
    p.cells = std::move(cells);
  }
  return out;
}

double ClassStats::percent(long long count) const {
  if (total() == 0) return 0.0;
  return std::round(10000.0 * static_cast<double>(count) / static_cast<double>(total())) / 100.0;
}

ClassStats param_stats(const QuantizedWeights& qw) {
  ClassStats s;
  for (const auto& b : qw.blocks) {
    for (std::int64_t w : b.weights) {
      switch (classify_weight(w).tag) {
        case MultKind::Tag::Zero: ++s.zero; break;
        case MultKind::Tag::One: ++s.one; break;
        case MultKind::Tag::Pow2: ++s.pow2; break;
        case MultKind::Tag::Generic: ++s.other; break;
      }
    }
  }
  return s;
}

std::string format_stats_text(const ClassStats& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  auto row = [&](const char* name, long long n) {
    os << std::left << std::setw(22) << name << std::right << std::setw(10) << n << std::setw(9) << s.percent(n)
       << "\n";
  };
  os << std::left << std::setw(22) << "class" << std::right << std::setw(10) << "count" << std::setw(9) << "%"
     << "\n";
  row("zero parameters", s.zero);
  row("one parameters", s.one);
  row("pow2 parameters", s.pow2);
  row("other", s.other);
  row("total", s.total());
  return os.str();
}

std::string format_stats_json(const ClassStats& s) {
  nlohmann::ordered_json j;
  auto entry = [&](long long n) { return nlohmann::ordered_json{{"count", n}, {"percent", s.percent(n)}}; };
  j["zero"] = entry(s.zero);
  j["one"] = entry(s.one);
  j["pow2"] = entry(s.pow2);
  j["other"] = entry(s.other);
  j["total"] = s.total();
  return j.dump(2) + "\n";
}

}  // namespace dhmgen
