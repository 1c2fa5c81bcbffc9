#pragma once

#include <string>
#include <vector>

#include "dhmgen/graph.hpp"

namespace dhmgen {

struct EmitOptions {
  std::string top_name = "dhm_top";
  /// Optional provenance line written into every file header. Left empty,
  /// output is byte-identical across runs.
  std::string stamp;
};

struct HdlFile {
  std::string name;
  std::string text;
};

enum class PortDirection { In, Out };

struct PortSpec {
  std::string name;
  PortDirection direction = PortDirection::In;
  int width = 1;

  friend bool operator==(const PortSpec&, const PortSpec&) = default;
};

struct HdlBundle {
  std::string top_name;
  std::vector<HdlFile> files;  // package, one per block, top
  std::vector<PortSpec> ports;

  const HdlFile* find(const std::string& name) const;
};

/// Generate VHDL-93 for a (specialized) graph. Zero cells emit nothing, wires
/// a plain assignment, shifts a shift_left; only generic constants produce a
/// `*` operator.
HdlBundle emit(const DhmGraph& g, const EmitOptions& opts = {});

enum class LintRule {
  UnbalancedBlock,
  UndeclaredEntity,
  UndeclaredSignal,
  MissingWidth,
  IllegalIdentifier,
  DuplicateLabel,
  DuplicateEntity,
  PortWidthMismatch,
};

std::string_view to_string(LintRule rule);

struct LintViolation {
  LintRule rule;
  std::string file;
  int line = 0;
  std::string message;
};

struct LintReport {
  std::vector<LintViolation> violations;
  bool clean() const { return violations.empty(); }
  bool has(LintRule r) const;
};

/// Structural self-checks over generated text: balanced design units and
/// statement blocks, instantiated entities declared, assigned signals
/// declared with widths, identifier legality, unique labels, and matching
/// widths across port maps and plain signal copies.
LintReport lint_bundle(const HdlBundle& b);

/// Number of `*` operators outside comments.
long long count_multiplications(const std::string& vhdl);

}  // namespace dhmgen
