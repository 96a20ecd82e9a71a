#include "arrcap/typecheck.hpp"

#include <set>

namespace arrcap::typecheck {

using lang::Annot;
using lang::ExprKind;
using lang::Mod;
using lang::to_string;

const EnvEntry* TypeEnv::lookup(const std::string& name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->name == name) return &*it;
  }
  return nullptr;
}

std::size_t TypeEnv::markers() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.marked ? 1 : 0;
  return n;
}

TypeEnv TypeEnv::visible(std::size_t depth) const {
  std::vector<EnvEntry> out;
  std::size_t seen = 0;
  for (const auto& e : entries_) {
    if (e.marked && seen++ == depth) break;
    out.push_back(e);
  }
  return TypeEnv(std::move(out));
}

bool wf_env(const TypeEnv& gamma) {
  std::set<std::string> vars;
  for (const auto& e : gamma.entries()) {
    if (!lang::wf_type(e.type)) return false;
    const bool bound = vars.contains(e.name);
    // WF-VAR forbids rebinding, WF-BLOCK requires it
    if (e.marked != bound) return false;
    vars.insert(e.name);
  }
  return true;
}

bool wf_runtime_env(const RuntimeTypeEnv& delta) {
  for (const auto& [id, t] : delta) {
    if (!t.is_array() || !lang::wf_type(t)) return false;
  }
  return true;
}

bool is_view(const Type& t, const Type& base) {
  if (!t.is_array() || !base.is_array() || t.annot() == Annot::Buried) return false;
  if (t.mod() == base.mod() && t.elem() == base.elem()) return true;
  return t.mod() == Mod::Val && t.elem() == lang::R(base.elem());
}

std::optional<std::string> check_value(const RuntimeTypeEnv& delta, const lang::Value& v, const Type& t) {
  switch (v.kind) {
    case lang::Value::Kind::True:
    case lang::Value::Kind::False:
      if (!t.is_bool()) return "boolean at type " + to_string(t);
      return std::nullopt;
    case lang::Value::Kind::Null:
      if (!t.is_array()) return "null at non-array type " + to_string(t);
      return std::nullopt;
    case lang::Value::Kind::Ref: {
      auto it = delta.find(v.id);
      if (it == delta.end()) return "reference to unknown array ι" + std::to_string(v.id);
      if (!is_view(t, it->second)) {
        return "ι" + std::to_string(v.id) + " of type " + to_string(it->second) + " used at " + to_string(t);
      }
      return std::nullopt;
    }
  }
  return "unknown value";
}

namespace {

[[noreturn]] void fail(const std::string& rule, const Expr& e, const std::string& msg) {
  throw TypeError(rule, e.loc, msg);
}

// E-VAR
const Type& var_type(const TypeEnv& gamma, const std::string& x, const Expr& at) {
  const auto* entry = gamma.lookup(x);
  if (!entry) fail("E-VAR", at, "unbound variable '" + x + "'");
  if (lang::is_buried(entry->type)) fail("E-VAR", at, "variable '" + x + "' is buried");
  return entry->type;
}

void fresh_binder(const TypeEnv& gamma, const std::string& x, const Expr& at) {
  if (gamma.binds(x)) fail("WF-VAR", at, "variable '" + x + "' is already bound");
}

}  // namespace

ExprPtr Checker::infer(const RuntimeTypeEnv& delta, const TypeEnv& full, std::size_t depth, const ExprPtr& p,
                       const Type* expected) const {
  const Expr& e = *p;
  const TypeEnv gamma = full.visible(depth);
  Expr out = e;
  out.typed = true;

  switch (e.kind) {
    case ExprKind::Var:
      out.xty = var_type(gamma, e.x, e);
      out.ty = out.xty;
      break;

    case ExprKind::Val:
      if (e.value.is_bool()) {
        out.ty = Type::boolean();  // E-BOOL
      } else if (e.value.is_null()) {
        // E-NULL, with the type taken from an annotation or the context
        if (e.has_type) {
          out.ty = e.type;
        } else if (e.typed) {
          out.ty = e.ty;
        } else if (expected) {
          out.ty = *expected;
        } else {
          fail("E-NULL", e, "cannot determine the array type of null; write null : <type>");
        }
        if (!out.ty.is_array()) fail("E-NULL", e, "null at non-array type " + to_string(out.ty));
      } else {
        if (!e.typed) fail("WF-VALUE", e, "array reference without a type");
        if (auto err = check_value(delta, e.value, e.ty)) fail("WF-VALUE", e, *err);
        out.ty = e.ty;
      }
      break;

    case ExprKind::Call: {
      const auto* f = program_.find(e.fn);
      if (!f) fail("E-CALL", e, "unknown function '" + e.fn + "'");
      out.a = infer(delta, full, depth, e.a, &f->param_type);
      if (!(out.a->ty == f->param_type)) {
        fail("E-CALL", e, "argument of type " + to_string(out.a->ty) + " passed to '" + e.fn +
                              "' expecting " + to_string(f->param_type));
      }
      out.ty = f->ret_type;
      break;
    }

    case ExprKind::Let: {
      out.a = infer(delta, full, depth, e.a);
      fresh_binder(gamma, e.x, e);
      TypeEnv inner = gamma;
      inner.push(e.x, out.a->ty);
      out.xty = out.a->ty;
      out.b = infer(delta, inner, depth, e.b, expected);
      out.ty = out.b->ty;
      break;
    }

    case ExprKind::Lookup: {
      const Type& t = var_type(gamma, e.x, e);
      if (!t.is_array()) fail("E-ARRAY-LOOKUP", e, "'" + e.x + "' is not an array");
      if (!lang::read_only(t.elem()) && t.mod() != Mod::Var) {
        fail("E-ARRAY-LOOKUP", e,
             "cannot extract non-read-only element of type " + to_string(t.elem()) + " from val array '" +
                 e.x + "'");
      }
      out.xty = t;
      out.ty = t.elem();
      // A read-only element seen through a borrowed array stays borrowed, so it
      // cannot be stored beyond the borrowing scope.
      if (lang::is_borrowed(t) && t.elem().is_array() && lang::read_only(t.elem())) {
        out.ty = t.elem().with_annot(Annot::Borrowed);
      }
      break;
    }

    case ExprKind::Assign: {
      const Type& t = var_type(gamma, e.x, e);
      if (!t.is_array() || t.mod() != Mod::Var) {
        fail("E-ARRAY-ASSIGN", e, "'" + e.x + "' is not a var array (type " + to_string(t) + ")");
      }
      out.a = infer(delta, full, depth, e.a, &t.elem());
      if (!(out.a->ty == t.elem())) {
        fail("E-ARRAY-ASSIGN", e,
             "cannot store " + to_string(out.a->ty) + " into array of " + to_string(t.elem()));
      }
      if (lang::is_borrowed(out.a->ty)) {
        fail("E-ARRAY-ASSIGN", e, "cannot store a borrowed value into '" + e.x + "'");
      }
      out.xty = t;
      out.ty = Type::boolean();
      break;
    }

    case ExprKind::Split: {
      const Type& t = var_type(gamma, e.x, e);
      if (!t.is_array()) fail("E-ARRAY-SPLIT", e, "'" + e.x + "' is not an array");
      if (!sigma::disjoint(e.s1, e.s2)) {
        fail("E-ARRAY-SPLIT", e,
             "index maps " + sigma::format(e.s1) + " and " + sigma::format(e.s2) + " overlap");
      }
      fresh_binder(gamma, e.y, e);
      fresh_binder(gamma, e.z, e);
      if (e.y == e.z) fail("WF-VAR", e, "split binds '" + e.y + "' twice");
      TypeEnv inner = gamma;
      inner.push(e.y, t);
      inner.push(e.z, t);
      out.xty = t;
      out.a = infer(delta, inner, depth, e.a, expected);
      out.ty = out.a->ty;
      break;
    }

    case ExprKind::Merge: {
      const Type& tx = var_type(gamma, e.x, e);
      const Type& ty = var_type(gamma, e.y, e);
      if (!tx.is_array()) fail("E-ARRAY-MERGE", e, "'" + e.x + "' is not an array");
      if (!(tx == ty)) {
        fail("E-ARRAY-MERGE", e, "cannot merge " + to_string(tx) + " with " + to_string(ty));
      }
      out.xty = tx;
      out.yty = ty;
      out.ty = tx;
      break;
    }

    case ExprKind::New:
      if (!e.type.is_array() || e.type.annot() != Annot::Unique) {
        fail("E-ARRAY-NEW", e, "new needs a unique array type, got " + to_string(e.type));
      }
      out.ty = e.type;
      break;

    case ExprKind::Finish: {
      out.a = infer(delta, full, depth, e.a);
      out.b = infer(delta, full, depth, e.b);
      std::set<std::string> shared;
      const auto f1 = lang::free_vars(*e.a);
      for (const auto& x : lang::free_vars(*e.b)) {
        if (f1.contains(x)) shared.insert(x);
      }
      if (!shared.empty()) {
        fail("E-FINISH-ASYNC", e, "async blocks share free variable '" + *shared.begin() + "'");
      }
      out.c = infer(delta, full, depth, e.c, expected);
      out.ty = out.c->ty;
      break;
    }

    case ExprKind::Borrow: {
      const Type& t = var_type(gamma, e.x, e);
      if (!t.is_array()) fail("E-BORROW", e, "'" + e.x + "' is not an array");
      fresh_binder(gamma, e.y, e);
      TypeEnv inner = gamma;
      inner.push_marked(e.x, Type::array(Annot::Buried, t.mod(), t.elem()));
      const Type alias = e.as_read ? Type::array(Annot::Borrowed, Mod::Val, lang::R(t.elem()))
                                   : Type::array(Annot::Borrowed, t.mod(), t.elem());
      inner.push(e.y, alias);
      out.xty = t;
      out.yty = alias;
      out.a = infer(delta, inner, inner.markers(), e.a);
      // The block evaluates to true once the scope closes.
      out.ty = Type::boolean();
      break;
    }

    case ExprKind::Frame:
      out.a = infer(delta, full, depth + 1, e.a);  // E-BORROWED
      out.ty = Type::boolean();
      break;
  }
  return lang::make(std::move(out));
}

lang::FunDecl Checker::check_function(const lang::FunDecl& f) const {
  TypeEnv gamma;
  gamma.push(f.param, f.param_type);
  lang::FunDecl out = f;
  out.body = infer({}, gamma, 0, f.body, &f.ret_type);
  if (!(out.body->ty == f.ret_type)) {
    throw TypeError("WF-FUNCTION", f.loc,
                    "body of '" + f.name + "' has type " + to_string(out.body->ty) + ", declared " +
                        to_string(f.ret_type));
  }
  return out;
}

CheckResult check_program(const Program& p) {
  CheckResult result;
  std::set<std::string> names;
  for (const auto& f : p.functions) {
    if (!names.insert(f.name).second) {
      result.diagnostics.push_back(
          {lang::Diagnostic::Severity::Error, f.loc, "WF-PROGRAM", "function '" + f.name + "' defined twice"});
    }
  }
  if (!p.find("main")) {
    result.diagnostics.push_back({lang::Diagnostic::Severity::Error, {1, 1}, "WF-PROGRAM", "no function 'main'"});
  }
  Checker checker(p);
  Program annotated;
  for (const auto& f : p.functions) {
    try {
      annotated.functions.push_back(checker.check_function(f));
    } catch (const TypeError& e) {
      result.diagnostics.push_back({lang::Diagnostic::Severity::Error, e.loc(), e.rule(), e.what()});
    }
  }
  if (!lang::has_errors(result.diagnostics)) result.program = std::move(annotated);
  return result;
}

}  // namespace arrcap::typecheck
