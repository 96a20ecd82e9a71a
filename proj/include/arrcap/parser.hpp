#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "arrcap/ast.hpp"
#include "arrcap/diagnostic.hpp"

namespace arrcap::lang {

struct ParseResult {
  std::optional<Program> program;
  /// Syntax errors, plus RENAME notes for alpha-renamed duplicate binders.
  std::vector<Diagnostic> diagnostics;
};

ParseResult parse(std::string_view source);

/// Parses a lone type such as `unique [var bool]`; throws Error(ParseError).
Type parse_type(std::string_view text);

}  // namespace arrcap::lang
