#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace arrcap::cli {

enum ExitCode : int {
  kOk = 0,
  kTypeError = 1,
  kErrorState = 2,
  kInvariant = 3,
  kUsage = 4,
  kBudget = 5,
};

/// `args` excludes the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace arrcap::cli
