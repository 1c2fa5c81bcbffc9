#include "dhmgen/identifier.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>

namespace dhmgen {
namespace {

constexpr std::string_view kReserved[] = {
    "abs",      "access",    "after",     "alias",    "all",       "and",      "architecture", "array",
    "assert",   "attribute", "begin",     "block",    "body",      "buffer",   "bus",          "case",
    "component", "configuration", "constant", "disconnect", "downto", "else",  "elsif",        "end",
    "entity",   "exit",      "file",      "for",      "function",  "generate", "generic",      "group",
    "guarded",  "if",        "impure",    "in",       "inertial",  "inout",    "is",           "label",
    "library",  "linkage",   "literal",   "loop",     "map",       "mod",      "nand",         "new",
    "next",     "nor",       "not",       "null",     "of",        "on",       "open",         "or",
    "others",   "out",       "package",   "port",     "postponed", "procedure", "process",     "pure",
    "range",    "record",    "register",  "reject",   "rem",       "report",   "return",       "rol",
    "ror",      "select",    "severity",  "signal",   "shared",    "sla",      "sll",          "sra",
    "srl",      "subtype",   "then",      "to",       "transport", "type",     "unaffected",   "units",
    "until",    "use",       "variable",  "wait",     "when",      "while",    "with",         "xnor",
    "xor"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

bool is_vhdl_reserved(std::string_view word) {
  const auto w = lower(word);
  return std::find(std::begin(kReserved), std::end(kReserved), w) != std::end(kReserved);
}

bool is_legal_identifier(std::string_view id) {
  if (id.empty() || !std::isalpha(static_cast<unsigned char>(id.front()))) return false;
  if (id.back() == '_') return false;
  for (std::size_t i = 0; i < id.size(); ++i) {
    const auto c = static_cast<unsigned char>(id[i]);
    if (!std::isalnum(c) && c != '_') return false;
    if (c > 127) return false;
    if (c == '_' && i + 1 < id.size() && id[i + 1] == '_') return false;
  }
  return !is_vhdl_reserved(id);
}

std::string make_identifier(std::string_view name) {
  std::string out;
  for (unsigned char c : name) {
    const char ch = (c < 128 && std::isalnum(c)) ? static_cast<char>(std::tolower(c)) : '_';
    if (ch == '_' && (out.empty() || out.back() == '_')) continue;
    out.push_back(ch);
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (out.empty() || !std::isalpha(static_cast<unsigned char>(out.front()))) out = "l_" + out;
  while (!out.empty() && out.back() == '_') out.pop_back();
  if (is_vhdl_reserved(out)) out += "_l";
  return out;
}

}  // namespace dhmgen
