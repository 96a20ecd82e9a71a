#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arrcap/ast.hpp"
#include "arrcap/diagnostic.hpp"

namespace arrcap::typecheck {

using lang::ArrayId;
using lang::Expr;
using lang::ExprPtr;
using lang::Program;
using lang::Type;

/// Γ. A marked entry is `Γ • x : t`.
struct EnvEntry {
  std::string name;
  Type type;
  bool marked = false;
};

class TypeEnv {
 public:
  TypeEnv() = default;
  explicit TypeEnv(std::vector<EnvEntry> entries) : entries_(std::move(entries)) {}

  /// Rightmost binding.
  const EnvEntry* lookup(const std::string& name) const;
  bool binds(const std::string& name) const { return lookup(name) != nullptr; }
  void push(std::string name, Type t) { entries_.push_back({std::move(name), std::move(t), false}); }
  void push_marked(std::string name, Type t) { entries_.push_back({std::move(name), std::move(t), true}); }

  std::size_t markers() const;
  /// Entries before the (depth+1)-th marker: what an expression at borrowing
  /// depth `depth` can see.
  TypeEnv visible(std::size_t depth) const;

  const std::vector<EnvEntry>& entries() const noexcept { return entries_; }

 private:
  std::vector<EnvEntry> entries_;
};

/// Δ
using RuntimeTypeEnv = std::map<ArrayId, Type>;

bool wf_env(const TypeEnv& gamma);
bool wf_runtime_env(const RuntimeTypeEnv& delta);

/// `t` may stand for a reference into an array of type `base`: same element
/// type and modifier, or the read-only weakening val R(elem). Annotations
/// other than buried may differ.
bool is_view(const Type& t, const Type& base);

/// Δ ⊢ v : t, or the reason it fails.
std::optional<std::string> check_value(const RuntimeTypeEnv& delta, const lang::Value& v, const Type& t);

class TypeError : public std::runtime_error {
 public:
  TypeError(std::string rule, lang::SourceLoc loc, const std::string& message)
      : std::runtime_error(message), rule_(std::move(rule)), loc_(loc) {}
  const std::string& rule() const noexcept { return rule_; }
  lang::SourceLoc loc() const noexcept { return loc_; }

 private:
  std::string rule_;
  lang::SourceLoc loc_;
};

class Checker {
 public:
  explicit Checker(const Program& program) : program_(program) {}

  /// Δ; Γ ⊢ e : t for an expression at borrowing depth `depth`. Returns the
  /// elaborated expression (types attached); throws TypeError naming the rule.
  /// `expected` types a bare null literal.
  ExprPtr infer(const RuntimeTypeEnv& delta, const TypeEnv& gamma, std::size_t depth, const ExprPtr& e,
                const Type* expected = nullptr) const;

  /// WF-FUNCTION; returns the elaborated declaration.
  lang::FunDecl check_function(const lang::FunDecl& f) const;

 private:
  const Program& program_;
};

struct CheckResult {
  std::optional<Program> program;
  std::vector<lang::Diagnostic> diagnostics;
};

/// WF-PROGRAM over every function, requiring `main`.
CheckResult check_program(const Program& p);

}  // namespace arrcap::typecheck
