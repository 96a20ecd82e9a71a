#pragma once

// Type-directed random programs for the soundness gauntlet.

#include <cstdint>
#include <stdexcept>

#include "arrcap/ast.hpp"

namespace arrcap::meta {

enum class GenMode {
  Safe,  // indices and index maps stay within the tracked lengths; no dynamic error
  Wild,  // may index out of range, use consumed variables, merge unrelated arrays
};

struct GenOptions {
  /// Upper bound on AST nodes over all functions.
  std::size_t budget = 30;
  GenMode mode = GenMode::Safe;
  bool require_fork = false;
  /// finish blocks in the whole program.
  std::size_t max_forks = 2;
};

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A program accepted by check_program, deterministic in (seed, options).
lang::Program generate(std::uint64_t seed, const GenOptions& options = {});

std::size_t program_size(const lang::Program& p);
std::size_t fork_count(const lang::Program& p);

}  // namespace arrcap::meta
