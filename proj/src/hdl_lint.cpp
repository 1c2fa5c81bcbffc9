#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "dhmgen/hdl.hpp"
#include "dhmgen/identifier.hpp"

namespace dhmgen {

std::string_view to_string(LintRule rule) {
  switch (rule) {
    case LintRule::UnbalancedBlock: return "UnbalancedBlock";
    case LintRule::UndeclaredEntity: return "UndeclaredEntity";
    case LintRule::UndeclaredSignal: return "UndeclaredSignal";
    case LintRule::MissingWidth: return "MissingWidth";
    case LintRule::IllegalIdentifier: return "IllegalIdentifier";
    case LintRule::DuplicateLabel: return "DuplicateLabel";
    case LintRule::DuplicateEntity: return "DuplicateEntity";
    case LintRule::PortWidthMismatch: return "PortWidthMismatch";
  }
  return "?";
}

bool LintReport::has(LintRule r) const {
  return std::any_of(violations.begin(), violations.end(), [&](const LintViolation& v) { return v.rule == r; });
}

namespace {

/// Drop a trailing `--` comment, ignoring dashes inside string literals.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (!in_string && line[i] == '-' && i + 1 < line.size() && line[i + 1] == '-') return line.substr(0, i);
  }
  return line;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> words(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_string = false;
  for (char ch : line) {
    if (ch == '"') in_string = !in_string;
    if (in_string) continue;
    if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.') {
      cur += ch;
    } else {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
      if (ch == ';') out.emplace_back(";");
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

const std::set<std::string> kOpeners{"entity",  "architecture", "package", "component", "process",
                                     "if",      "loop",         "case",    "record",    "generate"};

bool is_width_type(const std::string& type) {
  static const std::regex vec(R"(^\s*(std_logic_vector|signed|unsigned)\b)");
  return std::regex_search(type, vec);
}

bool has_range(const std::string& type) { return type.find('(') != std::string::npos; }

/// Bit width of a scalar or `(h downto 0)` vector type; -1 when not a bit type.
int width_of(const std::string& type) {
  static const std::regex vec(R"(^\s*(std_logic_vector|signed|unsigned)\s*\(\s*(\d+)\s+downto\s+(\d+)\s*\))");
  static const std::regex bit(R"(^\s*std_logic\s*$)");
  std::smatch m;
  if (std::regex_search(type, m, vec)) return std::stoi(m[2]) - std::stoi(m[3]) + 1;
  if (std::regex_search(type, m, bit)) return 1;
  return -1;
}

const std::regex kEntityRe(R"(^\s*entity\s+(\w+)\s+is\b)");
const std::regex kPortRe(R"(^\s*(\w+)\s*:\s*(in|out|inout)\s+([^;]+))");

/// Words a statement may use besides declared names.
const std::set<std::string> kVocabulary{
    "if",          "then",          "elsif",      "else",        "end",        "when",       "and",
    "or",          "not",           "xor",        "downto",      "to",         "others",     "rising_edge",
    "resize",      "signed",        "unsigned",   "std_logic_vector", "shift_left", "shift_right", "to_integer",
    "loop",        "for",           "in",         "mod",         "rem",        "abs",        "process",
    "begin",       "is",            "report",     "severity",    "null"};

using PortWidths = std::map<std::string, std::map<std::string, int>>;

class FileLinter {
 public:
  FileLinter(const HdlFile& f, const std::set<std::string>& entities, const PortWidths& ports,
             const std::set<std::string>& constants, LintReport& out)
      : file_(f), entities_(entities), entity_ports_(ports), constants_(constants), out_(out) {}

  void run() {
    std::istringstream in(file_.text);
    std::string raw;
    while (std::getline(in, raw)) {
      ++line_;
      const std::string text = lower(strip_comment(raw));
      balance(words(text));
      declarations(text);
      statements(text);
    }
    for (const auto& open : stack_)
      report(LintRule::UnbalancedBlock, "'" + open + "' never closed");
  }

 private:
  void report(LintRule r, const std::string& msg) { out_.violations.push_back({r, file_.name, line_, msg}); }

  void balance(const std::vector<std::string>& w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      const std::string& tok = w[i];
      if (tok == "end") {
        std::string kind = i + 1 < w.size() ? w[i + 1] : ";";
        if (kind == "package" && i + 2 < w.size() && w[i + 2] == "body") ++i;
        if (stack_.empty()) {
          report(LintRule::UnbalancedBlock, "'end' without an open block");
        } else if (kOpeners.count(kind) && stack_.back() != kind) {
          report(LintRule::UnbalancedBlock, "'end " + kind + "' closes '" + stack_.back() + "'");
          stack_.pop_back();
        } else {
          stack_.pop_back();
        }
        // Skip the closing keyword and optional name.
        while (i + 1 < w.size() && w[i + 1] != ";") ++i;
        continue;
      }
      if (!kOpeners.count(tok)) continue;
      // Design units open only at the start of a statement; elsewhere these
      // words are instantiations or attribute specifications.
      const bool unit = tok == "entity" || tok == "architecture" || tok == "package" || tok == "component";
      if (unit && (i != 0 || i + 1 >= w.size() || w[i + 1].rfind("work.", 0) == 0)) continue;
      if (tok == "package" && i + 1 < w.size() && w[i + 1] == "body") ++i;
      if (tok == "loop" && i > 0 && w[i - 1] == "end") continue;
      stack_.push_back(tok);
    }
  }

  void declarations(const std::string& text) {
    const std::regex& entity_re = kEntityRe;
    static const std::regex arch_re(R"(^\s*architecture\s+(\w+)\s+of\s+(\w+)\s+is\b)");
    const std::regex& port_re = kPortRe;
    static const std::regex signal_re(R"(^\s*(signal|variable|constant)\s+([\w\s,]+?)\s*:\s*([^;:]+))");
    static const std::regex type_re(R"(^\s*type\s+(\w+)\s+is\b)");
    std::smatch m;
    if (std::regex_search(text, m, entity_re)) {
      current_entity_ = m[1];
      ports_[current_entity_];
      check_identifier(m[1]);
      return;
    }
    if (std::regex_search(text, m, arch_re)) {
      scope_ = ports_[m[2]];
      labels_.clear();
      check_identifier(m[1]);
      if (!entities_.count(m[2])) report(LintRule::UndeclaredEntity, "architecture of undeclared entity " + m[2].str());
      return;
    }
    if (std::regex_search(text, m, port_re) && !stack_.empty() && stack_.back() == "entity") {
      ports_[current_entity_][m[1]] = width_of(m[3]);
      check_identifier(m[1]);
      check_width(m[1], m[3]);
      return;
    }
    if (std::regex_search(text, m, signal_re)) {
      std::istringstream names(m[2].str());
      std::string name;
      while (std::getline(names, name, ',')) {
        name.erase(0, name.find_first_not_of(" \t"));
        name.erase(name.find_last_not_of(" \t") + 1);
        scope_[name] = width_of(m[3]);
        check_identifier(name);
        check_width(name, m[3]);
      }
      return;
    }
    if (std::regex_search(text, m, type_re)) check_identifier(m[1]);
  }

  void statements(const std::string& text) {
    static const std::regex inst_re(R"(^\s*(\w+)\s*:\s*entity\s+work\.(\w+))");
    static const std::regex label_re(R"(^\s*(\w+)\s*:\s*(process|entity)\b)");
    static const std::regex assign_re(R"(^\s*(\w+)\s*(\([^<]*\))?\s*<=)");
    static const std::regex copy_re(R"(^\s*(\w+)\s*<=\s*(\w+)\s*;)");
    static const std::regex assoc_re(R"(^\s*(\w+)\s*=>\s*(\w+)\s*,?\s*$)");
    std::smatch m;
    if (std::regex_search(text, m, inst_re)) {
      instance_of_ = m[2];
      if (!entities_.count(m[2])) report(LintRule::UndeclaredEntity, "instance of undeclared entity " + m[2].str());
    }
    if (!instance_of_.empty() && std::regex_search(text, m, assoc_re)) {
      const auto ent = entity_ports_.find(instance_of_);
      if (ent != entity_ports_.end()) {
        const auto formal = ent->second.find(m[1]);
        if (formal == ent->second.end()) {
          report(LintRule::UndeclaredSignal, instance_of_ + " has no port " + m[1].str());
        } else {
          const int actual = width(m[2]);
          if (actual < 0)
            report(LintRule::UndeclaredSignal, "port map uses undeclared signal " + m[2].str());
          else if (formal->second >= 0 && actual != formal->second)
            report(LintRule::PortWidthMismatch, instance_of_ + "." + m[1].str() + " is " +
                                                    std::to_string(formal->second) + " bits, " + m[2].str() + " is " +
                                                    std::to_string(actual));
        }
      }
    }
    if (!instance_of_.empty() && text.find(");") != std::string::npos) instance_of_.clear();
    if (std::regex_search(text, m, copy_re)) {
      const int to = width(m[1]);
      const int from = width(m[2]);
      if (to > 0 && from > 0 && to != from)
        report(LintRule::PortWidthMismatch, m[1].str() + " is " + std::to_string(to) + " bits, " + m[2].str() +
                                                " is " + std::to_string(from));
    }
    if (std::regex_search(text, m, label_re)) {
      check_identifier(m[1]);
      if (!labels_.insert(m[1]).second) report(LintRule::DuplicateLabel, "label " + m[1].str() + " used twice");
    }
    if (std::regex_search(text, m, assign_re) && !scope_.count(m[1]))
      report(LintRule::UndeclaredSignal, "assignment to undeclared signal " + m[1].str());
    reads(text);
  }

  /// Every name a statement in an architecture body reads must be declared
  /// (ports, signals, variables, loop indices, package constants).
  void reads(const std::string& text) {
    static const std::regex loop_re(R"(^\s*for\s+(\w+)\s+in\b)");
    static const std::regex skip_re(R"(^\s*(\w+\s*:|port\s+map|\);|begin\b|end\b|variable\b))");
    std::smatch m;
    const auto ws = words(text);
    if (ws.size() == 1 && ws[0] == "begin" && !stack_.empty() && stack_.back() == "architecture") in_body_ = true;
    if (text.find("end architecture") != std::string::npos) in_body_ = false;
    if (!in_body_ || !instance_of_.empty() || std::regex_search(text, skip_re)) return;
    if (std::regex_search(text, m, loop_re)) scope_[m[1]] = -1;
    for (const auto& w : ws) {
      const bool literal = std::isdigit(static_cast<unsigned char>(w[0]));
      if (!literal && w != ";" && !kVocabulary.count(w) && !scope_.count(w) && !constants_.count(w))
        report(LintRule::UndeclaredSignal, "use of undeclared name " + w);
    }
  }

  int width(const std::string& name) const {
    const auto it = scope_.find(name);
    return it == scope_.end() ? -1 : it->second;
  }

  void check_identifier(const std::string& id) {
    if (!is_legal_identifier(id)) report(LintRule::IllegalIdentifier, "illegal identifier '" + id + "'");
  }

  void check_width(const std::string& name, const std::string& type) {
    if (is_width_type(type) && !has_range(type)) report(LintRule::MissingWidth, name + " has no width");
  }

  const HdlFile& file_;
  const std::set<std::string>& entities_;
  const PortWidths& entity_ports_;
  const std::set<std::string>& constants_;
  LintReport& out_;
  bool in_body_ = false;
  int line_ = 0;
  std::vector<std::string> stack_;
  std::string current_entity_;
  PortWidths ports_;
  std::map<std::string, int> scope_;
  std::string instance_of_;
  std::set<std::string> labels_;
};

}  // namespace

LintReport lint_bundle(const HdlBundle& b) {
  LintReport report;
  static const std::regex constant_re(R"(^\s*(constant|type)\s+(\w+))");
  std::set<std::string> entities;
  std::set<std::string> constants;
  PortWidths ports;
  for (const auto& f : b.files) {
    std::istringstream in(f.text);
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const std::string text = lower(strip_comment(raw));
      std::smatch m;
      if (std::regex_search(text, m, constant_re)) constants.insert(m[2]);
      if (std::regex_search(text, m, kEntityRe)) {
        current = m[1];
        if (!entities.insert(current).second)
          report.violations.push_back({LintRule::DuplicateEntity, f.name, line, "entity " + current + " declared twice"});
      } else if (text.find("end entity") != std::string::npos) {
        current.clear();
      } else if (!current.empty() && std::regex_search(text, m, kPortRe)) {
        ports[current][m[1]] = width_of(m[3]);
      }
    }
  }
  for (const auto& f : b.files) FileLinter(f, entities, ports, constants, report).run();
  return report;
}

long long count_multiplications(const std::string& vhdl) {
  std::istringstream in(vhdl);
  std::string line;
  long long n = 0;
  while (std::getline(in, line)) {
    const std::string code = strip_comment(line);
    n += std::count(code.begin(), code.end(), '*');
  }
  return n;
}

}  // namespace dhmgen
