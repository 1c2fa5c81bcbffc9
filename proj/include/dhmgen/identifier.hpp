#pragma once

#include <string>
#include <string_view>

namespace dhmgen {

bool is_vhdl_reserved(std::string_view word);

/// VHDL-93 basic identifier: letter first, then letters, digits and single
/// underscores, no trailing underscore, not a reserved word.
bool is_legal_identifier(std::string_view id);

/// Legal lower-case identifier derived from an arbitrary layer name.
std::string make_identifier(std::string_view name);

}  // namespace dhmgen
