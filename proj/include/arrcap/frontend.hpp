#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "arrcap/ast.hpp"
#include "arrcap/diagnostic.hpp"

namespace arrcap {

/// Parse then type-check. `program` is the elaborated program, or null when
/// either phase reported an error.
struct Compiled {
  std::shared_ptr<const lang::Program> program;
  std::vector<lang::Diagnostic> diagnostics;
  bool syntax_error = false;
};

Compiled compile(std::string_view source);

/// Throws std::runtime_error when the file cannot be read.
std::string read_file(const std::filesystem::path& path);

}  // namespace arrcap
