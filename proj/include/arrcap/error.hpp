#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arrcap {

/// Failure categories shared by the index algebra and the capability kernel.
enum class Errc {
  OutOfDomain,
  InvalidSplit,
  Overlap,
  OutOfBounds,
  Consumed,
  Buried,
  ReadOnly,
  DifferentArrays,
  Incompatible,
  HasSiblings,
  Partial,
  DimensionMismatch,
  ParseError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace arrcap
