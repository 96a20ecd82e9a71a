#include "arrcap/frontend.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "arrcap/parser.hpp"
#include "arrcap/typecheck.hpp"

namespace arrcap {

Compiled compile(std::string_view source) {
  Compiled out;
  auto parsed = lang::parse(source);
  out.diagnostics = std::move(parsed.diagnostics);
  if (!parsed.program) {
    out.syntax_error = true;
    return out;
  }
  auto checked = typecheck::check_program(*parsed.program);
  out.diagnostics.insert(out.diagnostics.end(), checked.diagnostics.begin(), checked.diagnostics.end());
  if (checked.program) out.program = std::make_shared<const lang::Program>(std::move(*checked.program));
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace arrcap
