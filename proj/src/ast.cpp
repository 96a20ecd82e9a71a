#include "arrcap/ast.hpp"

#include <sstream>

#include "arrcap/diagnostic.hpp"

namespace arrcap::lang {

std::string to_string(const Value& v) {
  switch (v.kind) {
    case Value::Kind::True: return "true";
    case Value::Kind::False: return "false";
    case Value::Kind::Null: return "null";
    case Value::Kind::Ref: return "ι" + std::to_string(v.id) + sigma::format(v.sigma);
  }
  return "?";
}

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

bool is_value(const Expr& e) noexcept { return e.kind == ExprKind::Val; }

namespace {

void collect_free(const Expr& e, std::set<std::string>& out) {
  switch (e.kind) {
    case ExprKind::Var:
    case ExprKind::Lookup:
      out.insert(e.x);
      break;
    case ExprKind::Val:
    case ExprKind::New:
      break;
    case ExprKind::Call:
    case ExprKind::Frame:
      collect_free(*e.a, out);
      break;
    case ExprKind::Assign:
      out.insert(e.x);
      collect_free(*e.a, out);
      break;
    case ExprKind::Merge:
      out.insert(e.x);
      out.insert(e.y);
      break;
    case ExprKind::Let: {
      collect_free(*e.a, out);
      std::set<std::string> body;
      collect_free(*e.b, body);
      body.erase(e.x);
      out.insert(body.begin(), body.end());
      break;
    }
    case ExprKind::Split: {
      out.insert(e.x);
      std::set<std::string> body;
      collect_free(*e.a, body);
      body.erase(e.y);
      body.erase(e.z);
      out.insert(body.begin(), body.end());
      break;
    }
    case ExprKind::Borrow: {
      out.insert(e.x);
      std::set<std::string> body;
      collect_free(*e.a, body);
      body.erase(e.y);
      out.insert(body.begin(), body.end());
      break;
    }
    case ExprKind::Finish:
      collect_free(*e.a, out);
      collect_free(*e.b, out);
      collect_free(*e.c, out);
      break;
  }
}

bool same_ptr_shape(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return same_shape(*a, *b);
}

}  // namespace

std::set<std::string> free_vars(const Expr& e) {
  std::set<std::string> out;
  collect_free(e, out);
  return out;
}

bool same_shape(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case ExprKind::Var: return a.x == b.x;
    case ExprKind::Val:
      return a.value == b.value && a.has_type == b.has_type && (!a.has_type || a.type == b.type);
    case ExprKind::Call: return a.fn == b.fn && same_ptr_shape(a.a, b.a);
    case ExprKind::Let: return a.x == b.x && same_ptr_shape(a.a, b.a) && same_ptr_shape(a.b, b.b);
    case ExprKind::Lookup: return a.x == b.x && a.index == b.index;
    case ExprKind::Assign: return a.x == b.x && a.index == b.index && same_ptr_shape(a.a, b.a);
    case ExprKind::Split:
      return a.x == b.x && a.y == b.y && a.z == b.z && a.s1 == b.s1 && a.s2 == b.s2 &&
             same_ptr_shape(a.a, b.a);
    case ExprKind::Merge: return a.x == b.x && a.y == b.y;
    case ExprKind::New: return a.type == b.type && a.index == b.index;
    case ExprKind::Finish:
      return same_ptr_shape(a.a, b.a) && same_ptr_shape(a.b, b.b) && same_ptr_shape(a.c, b.c);
    case ExprKind::Borrow:
      return a.x == b.x && a.y == b.y && a.as_read == b.as_read && same_ptr_shape(a.a, b.a);
    case ExprKind::Frame: return same_ptr_shape(a.a, b.a);
  }
  return false;
}

std::size_t frame_depth(const Expr& e) {
  switch (e.kind) {
    case ExprKind::Frame: return 1 + frame_depth(*e.a);
    case ExprKind::Let:
    case ExprKind::Assign:
    case ExprKind::Call:
      return frame_depth(*e.a);
    default: return 0;
  }
}

std::size_t size(const Expr& e) {
  std::size_t n = 1;
  for (const auto* child : {&e.a, &e.b, &e.c}) {
    if (*child) n += size(**child);
  }
  return n;
}

const FunDecl* Program::find(const std::string& name) const {
  for (const auto& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

bool same_shape(const Program& a, const Program& b) {
  if (a.functions.size() != b.functions.size()) return false;
  for (std::size_t i = 0; i < a.functions.size(); ++i) {
    const auto& f = a.functions[i];
    const auto& g = b.functions[i];
    if (f.name != g.name || f.param != g.param || !(f.param_type == g.param_type) ||
        !(f.ret_type == g.ret_type) || !same_shape(*f.body, *g.body)) {
      return false;
    }
  }
  return true;
}

namespace {

void print(std::ostream& out, const Expr& e, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  switch (e.kind) {
    case ExprKind::Var: out << e.x; break;
    case ExprKind::Val:
      out << to_string(e.value);
      if (e.has_type) out << " : " << to_string(e.type);
      break;
    case ExprKind::Call:
      out << e.fn << '(';
      print(out, *e.a, indent);
      out << ')';
      break;
    case ExprKind::Let:
      out << "let " << e.x << " = ";
      print(out, *e.a, indent + 2);
      out << " in\n" << pad;
      print(out, *e.b, indent);
      break;
    case ExprKind::Lookup: out << e.x << '[' << e.index << ']'; break;
    case ExprKind::Assign:
      out << e.x << '[' << e.index << "] = ";
      print(out, *e.a, indent);
      break;
    case ExprKind::Split:
      out << "let " << e.y << sigma::format(e.s1) << " ++ " << e.z << sigma::format(e.s2) << " = "
          << e.x << " in\n"
          << pad;
      print(out, *e.a, indent);
      break;
    case ExprKind::Merge: out << e.x << " ++ " << e.y; break;
    case ExprKind::New: out << "new " << to_string(e.type) << '(' << e.index << ')'; break;
    case ExprKind::Finish: {
      const std::string inner(static_cast<std::size_t>(indent + 4), ' ');
      out << "finish {\n" << pad << "  async {\n" << inner;
      print(out, *e.a, indent + 4);
      out << '\n' << pad << "  }\n" << pad << "  async {\n" << inner;
      print(out, *e.b, indent + 4);
      out << '\n' << pad << "  }\n" << pad << "};\n" << pad;
      print(out, *e.c, indent);
      break;
    }
    case ExprKind::Borrow:
      out << "borrow " << e.x << " as " << (e.as_read ? "read " : "") << e.y << " in\n" << pad;
      print(out, *e.a, indent);
      break;
    case ExprKind::Frame:
      out << "B(";
      print(out, *e.a, indent);
      out << ')';
      break;
  }
}

}  // namespace

std::string pretty(const Expr& e, int indent) {
  std::ostringstream out;
  print(out, e, indent);
  return out.str();
}

std::string pretty(const FunDecl& f) {
  std::ostringstream out;
  out << "fun " << f.name << '(' << f.param << ": " << to_string(f.param_type)
      << "): " << to_string(f.ret_type) << "\n  ";
  print(out, *f.body, 2);
  out << '\n';
  return out.str();
}

std::string pretty(const Program& p) {
  std::string out;
  for (std::size_t i = 0; i < p.functions.size(); ++i) {
    if (i) out += '\n';
    out += pretty(p.functions[i]);
  }
  return out;
}

std::string format(const Diagnostic& d, const std::string& file) {
  return file + ':' + std::to_string(d.loc.line) + ':' + std::to_string(d.loc.col) + ": " + d.rule +
         ": " + d.message;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  for (const auto& d : diags) {
    if (d.severity == Diagnostic::Severity::Error) return true;
  }
  return false;
}

}  // namespace arrcap::lang
