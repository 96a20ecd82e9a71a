#pragma once

#include <string>
#include <vector>

#include "arrcap/ast.hpp"

namespace arrcap::lang {

struct Diagnostic {
  enum class Severity { Error, Note };
  Severity severity = Severity::Error;
  SourceLoc loc;
  /// Rule name, e.g. E-ARRAY-ASSIGN; PARSE for syntax errors.
  std::string rule;
  std::string message;
};

/// `file:line:col: RULE: message`
std::string format(const Diagnostic& d, const std::string& file);

bool has_errors(const std::vector<Diagnostic>& diags);

}  // namespace arrcap::lang
