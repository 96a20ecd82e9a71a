#include <iostream>

#include "arrcap/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return arrcap::cli::main(args, std::cout, std::cerr);
}
