#pragma once

// Abstract syntax of the core calculus. Expressions are immutable and shared;
// the evaluator rebuilds only the spine above a redex.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "arrcap/sigma.hpp"
#include "arrcap/types.hpp"

namespace arrcap::lang {

using ArrayId = std::uint64_t;

struct SourceLoc {
  int line = 0;
  int col = 0;
};

/// v ::= ι_σ | null | true | false
struct Value {
  enum class Kind { Ref, Null, True, False };
  Kind kind = Kind::Null;
  ArrayId id = 0;
  IndexMap sigma;

  static Value null() { return {}; }
  static Value boolean(bool b) { return {b ? Kind::True : Kind::False, 0, {}}; }
  static Value ref(ArrayId id, IndexMap sigma) { return {Kind::Ref, id, std::move(sigma)}; }

  bool is_ref() const noexcept { return kind == Kind::Ref; }
  bool is_null() const noexcept { return kind == Kind::Null; }
  bool is_bool() const noexcept { return kind == Kind::True || kind == Kind::False; }

  friend bool operator==(const Value&, const Value&) = default;
};

std::string to_string(const Value& v);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class ExprKind {
  Var,     // x
  Val,     // v
  Call,    // f(a)
  Let,     // let x = a in b
  Lookup,  // x[i]
  Assign,  // x[i] = a
  Split,   // let y{s1} ++ z{s2} = x in a
  Merge,   // x ++ y
  New,     // new type(i)
  Finish,  // finish { async { a } async { b } }; c
  Borrow,  // borrow x as [read] y in a
  Frame,   // B(a), runtime only
};

struct Expr {
  ExprKind kind = ExprKind::Val;
  SourceLoc loc;

  std::string x, y, z;  // variable names; y/z binders where applicable
  std::string fn;       // Call target
  Value value;          // Val
  std::size_t index = 0;  // Lookup/Assign index, New length
  IndexMap s1, s2;      // Split literals
  Type type;            // New type; Val null annotation when has_type
  bool has_type = false;
  bool as_read = false;
  ExprPtr a, b, c;

  // Elaboration: filled by the type checker.
  bool typed = false;
  Type ty;   // type of the expression itself
  Type xty;  // type of x (Var, Lookup, Assign, Split, Merge, Borrow) or Let binder
  Type yty;  // type of y (Merge) or the borrowed alias
};

ExprPtr make(Expr e);

bool is_value(const Expr& e) noexcept;
/// Free variables. Let binds x in b; Split binds y, z; Borrow binds y and
/// mentions x.
std::set<std::string> free_vars(const Expr& e);
/// Structural equality ignoring locations and elaboration.
bool same_shape(const Expr& a, const Expr& b);
/// Counts B(...) wrappers along the evaluation spine.
std::size_t frame_depth(const Expr& e);
/// Number of nodes.
std::size_t size(const Expr& e);

struct FunDecl {
  std::string name;
  std::string param;
  Type param_type;
  Type ret_type;
  ExprPtr body;
  SourceLoc loc;
};

struct Program {
  std::vector<FunDecl> functions;

  const FunDecl* find(const std::string& name) const;
};

bool same_shape(const Program& a, const Program& b);

std::string pretty(const Expr& e, int indent = 0);
std::string pretty(const FunDecl& f);
std::string pretty(const Program& p);

}  // namespace arrcap::lang
