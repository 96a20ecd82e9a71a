#pragma once

#include <doctest.h>

#include <string>

#include "arrcap/frontend.hpp"

namespace test_support {

inline std::string program_path(const std::string& rel) { return std::string(ARRCAP_PROGRAMS_DIR) + "/" + rel; }

inline arrcap::Compiled compile_file(const std::string& rel) {
  return arrcap::compile(arrcap::read_file(program_path(rel)));
}

/// Compiles and requires success.
inline std::shared_ptr<const arrcap::lang::Program> checked(std::string_view source) {
  auto c = arrcap::compile(source);
  for (const auto& d : c.diagnostics) INFO(arrcap::lang::format(d, "<src>"));
  REQUIRE(c.program);
  return c.program;
}

/// The rule named by the first error diagnostic, or "" when accepted.
inline std::string rejection(std::string_view source) {
  auto c = arrcap::compile(source);
  for (const auto& d : c.diagnostics) {
    if (d.severity == arrcap::lang::Diagnostic::Severity::Error) return d.rule;
  }
  return "";
}

}  // namespace test_support
