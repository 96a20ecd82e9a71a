#include "arrcap/generator.hpp"

#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include "arrcap/typecheck.hpp"

namespace arrcap::meta {

using lang::Annot;
using lang::Expr;
using lang::ExprKind;
using lang::ExprPtr;
using lang::FunDecl;
using lang::Mod;
using lang::Program;
using lang::Type;
using lang::Value;

std::size_t program_size(const Program& p) {
  std::size_t n = 0;
  for (const auto& f : p.functions) n += lang::size(*f.body);
  return n;
}

namespace {

std::size_t count_forks(const Expr& e) {
  std::size_t n = e.kind == ExprKind::Finish ? 1 : 0;
  for (const auto* c : {&e.a, &e.b, &e.c}) {
    if (*c) n += count_forks(**c);
  }
  return n;
}

}  // namespace

std::size_t fork_count(const Program& p) {
  std::size_t n = 0;
  for (const auto& f : p.functions) n += count_forks(*f.body);
  return n;
}

namespace {

// Shadow of the runtime value a variable will hold when its binding executes.
struct SVal {
  enum class Kind { Null, Bool, Ref };
  Kind kind = Kind::Null;
  std::size_t id = 0;
  IndexMap sigma;

  bool live() const { return kind == Kind::Ref; }
  std::size_t len() const { return live() ? sigma.size() : 0; }
};

const SVal kBool{SVal::Kind::Bool, 0, {}};

struct SVar {
  std::string name;
  Type type;
  SVal val;
  bool hidden = false;
};

using Wrap = std::function<ExprPtr(ExprPtr)>;

ExprPtr mk(Expr e) { return lang::make(std::move(e)); }

ExprPtr var_expr(const std::string& x) {
  Expr e;
  e.kind = ExprKind::Var;
  e.x = x;
  return mk(std::move(e));
}

ExprPtr bool_expr(bool b) {
  Expr e;
  e.kind = ExprKind::Val;
  e.value = Value::boolean(b);
  return mk(std::move(e));
}

Wrap let(std::string x, ExprPtr rhs) {
  return [x = std::move(x), rhs = std::move(rhs)](ExprPtr body) {
    Expr e;
    e.kind = ExprKind::Let;
    e.x = x;
    e.a = rhs;
    e.b = std::move(body);
    return mk(std::move(e));
  };
}

Type lookup_type(const Type& t) {
  if (lang::is_borrowed(t) && t.elem().is_array() && lang::read_only(t.elem())) {
    return t.elem().with_annot(Annot::Borrowed);
  }
  return t.elem();
}

Type alias_type(const Type& t, bool as_read) {
  return as_read ? Type::array(Annot::Borrowed, Mod::Val, lang::R(t.elem()))
                 : Type::array(Annot::Borrowed, t.mod(), t.elem());
}

enum class Block { Main, Helper, Borrow, Child };

struct BlockResult {
  ExprPtr expr;
  Type type;
  SVal val;
};

class Gen {
 public:
  Gen(std::uint64_t seed, const GenOptions& options) : rng_(seed), opt_(options), remaining_(options.budget) {}

  Program program() {
    env_.push_back({"x", Type::boolean(), kBool, false});
    auto body = block(Block::Main);
    Program p;
    p.functions = helpers_;
    p.functions.push_back({"main", "x", Type::boolean(), body.type, body.expr, {}});
    return p;
  }

 private:
  // -- randomness

  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::size_t below(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }
  bool wild() const { return opt_.mode == GenMode::Wild; }
  /// Decides, per operation, whether to ignore the shadow's safety conditions.
  bool reckless() { return wild() && chance(0.2); }

  std::string fresh(const char* prefix) { return prefix + std::to_string(++names_); }

  Type random_elem() {
    switch (below(10)) {
      case 0:
      case 1:
        return Type::array(Annot::Unique, Mod::Var, Type::boolean());
      case 2:
        return Type::array(Annot::Unique, Mod::Val, Type::boolean());
      case 3:
        return Type::array(Annot::Unique, Mod::Var, Type::array(Annot::Unique, Mod::Var, Type::boolean()));
      default:
        return Type::boolean();
    }
  }

  Type random_array_type() { return Type::array(Annot::Unique, chance(0.85) ? Mod::Var : Mod::Val, random_elem()); }

  // -- environment

  std::vector<std::size_t> candidates(const std::function<bool(const SVar&)>& pred) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < env_.size(); ++i) {
      if (!env_[i].hidden && pred(env_[i])) out.push_back(i);
    }
    return out;
  }

  void bind(const std::string& name, Type t, SVal v) { env_.push_back({name, std::move(t), std::move(v), false}); }

  /// Destructive read of a variable, as DYN-VAR-LOOKUP(-DEST) does.
  SVal read(SVar& v) {
    SVal out = v.val;
    if (!lang::read_only(v.type)) v.val = SVal{};
    return out;
  }

  std::size_t index_for(const SVar& x, bool unsafe) {
    const std::size_t n = x.val.len();
    if (!unsafe && n > 0) return below(n);
    return below(n + 3);
  }

  SVal* slot(const SVar& x, std::size_t i) {
    if (!x.val.live() || i >= x.val.sigma.size()) return nullptr;
    auto& arr = heap_[x.val.id];
    const std::size_t phys = x.val.sigma[i];
    return phys < arr.size() ? &arr[phys] : nullptr;
  }

  // -- blocks

  BlockResult block(Block kind) {
    const std::size_t mark = env_.size();
    std::vector<Wrap> stmts;
    const double keep = kind == Block::Main ? 0.93 : kind == Block::Helper ? 0.8 : 0.65;
    --remaining_;  // the final expression
    for (int attempts = 0; attempts < 200 && remaining_ >= 2; ++attempts) {
      if (!stmts.empty() && !chance(keep)) break;
      if (auto s = statement()) stmts.push_back(std::move(*s));
    }
    ++remaining_;
    auto result = final_expr(kind, mark);
    --remaining_;
    env_.resize(mark);
    for (auto it = stmts.rbegin(); it != stmts.rend(); ++it) result.expr = (*it)(result.expr);
    return result;
  }

  BlockResult final_expr(Block kind, std::size_t mark) {
    if (kind == Block::Borrow || kind == Block::Child) {
      auto locals = candidates([](const SVar&) { return true; });
      std::erase_if(locals, [&](std::size_t i) { return i < mark; });
      if (!locals.empty() && chance(0.3)) {
        auto& v = env_[pick(locals)];
        return {var_expr(v.name), v.type, read(v)};
      }
      return {bool_expr(true), Type::boolean(), kBool};
    }
    auto arrays = candidates([](const SVar& v) { return v.type.is_array() && v.val.live(); });
    auto any = candidates([](const SVar&) { return true; });
    const auto& from = !arrays.empty() && chance(0.75) ? arrays : any;
    if (!from.empty() && chance(0.9)) {
      auto& v = env_[pick(from)];
      return {var_expr(v.name), v.type, read(v)};
    }
    return {bool_expr(true), Type::boolean(), kBool};
  }

  // -- statements

  enum Op { New, AssignBool, AssignArr, Lookup, Copy, Split, Merge, Borrow, Finish, Par, Call, Null, kOps };

  std::optional<Wrap> statement() {
    std::vector<double> w(kOps, 0.0);
    w[New] = 4;
    w[AssignBool] = 4;
    w[AssignArr] = 3;
    w[Lookup] = 4;
    w[Copy] = 1;
    w[Split] = 3;
    w[Merge] = 3;
    w[Borrow] = borrow_depth_ < 3 ? 2 : 0;
    const bool may_fork = forks_ < opt_.max_forks;
    w[Finish] = may_fork ? 1 : 0;
    w[Par] = may_fork ? (opt_.require_fork ? 6 : 2) : 0;
    w[Call] = call_depth_ < 2 ? 2 : 0;
    w[Null] = 0.5;
    std::discrete_distribution<int> dist(w.begin(), w.end());
    switch (dist(rng_)) {
      case New: return op_new();
      case AssignBool: return op_assign_bool();
      case AssignArr: return op_assign_array();
      case Lookup: return op_lookup();
      case Copy: return op_copy();
      case Split: return op_split();
      case Merge: return op_merge();
      case Borrow: return op_borrow();
      case Finish: return op_finish();
      case Par: return op_par();
      case Call: return op_call();
      case Null: return op_null();
    }
    return std::nullopt;
  }

  bool afford(std::size_t cost) {
    if (cost > remaining_) return false;
    remaining_ -= cost;
    return true;
  }

  std::optional<Wrap> op_new() {
    if (!afford(2)) return std::nullopt;
    const Type t = random_array_type();
    const std::size_t n = 1 + below(4);
    heap_.emplace_back(n, t.elem().is_bool() ? kBool : SVal{});
    const auto name = fresh("v");
    bind(name, t, {SVal::Kind::Ref, heap_.size() - 1, sigma::identity(n)});
    Expr e;
    e.kind = ExprKind::New;
    e.type = t;
    e.index = n;
    return let(name, mk(std::move(e)));
  }

  std::optional<Wrap> op_assign_bool() {
    const bool unsafe = reckless();
    auto xs = candidates([&](const SVar& v) {
      return v.type.is_array() && v.type.mod() == Mod::Var && v.type.elem().is_bool() && (unsafe || v.val.len() > 0);
    });
    if (xs.empty() || !afford(3)) return std::nullopt;
    const auto& x = env_[pick(xs)];
    const std::size_t i = index_for(x, unsafe);
    if (auto* s = slot(x, i)) *s = kBool;
    Expr e;
    e.kind = ExprKind::Assign;
    e.x = x.name;
    e.index = i;
    e.a = bool_expr(chance(0.5));
    const auto name = fresh("v");
    bind(name, Type::boolean(), kBool);
    return let(name, mk(std::move(e)));
  }

  std::optional<Wrap> op_assign_array() {
    const bool unsafe = reckless();
    auto xs = candidates([&](const SVar& v) {
      return v.type.is_array() && v.type.mod() == Mod::Var && v.type.elem().is_array() && (unsafe || v.val.len() > 0);
    });
    if (xs.empty()) return std::nullopt;
    const std::size_t xi = pick(xs);
    auto ys = candidates([&](const SVar& v) { return &v != &env_[xi] && v.type == env_[xi].type.elem(); });
    if (ys.empty() || !afford(3)) return std::nullopt;
    auto& y = env_[pick(ys)];
    const auto& x = env_[xi];
    const std::size_t i = index_for(x, unsafe);
    const SVal moved = read(y);
    if (auto* s = slot(x, i)) *s = moved;
    Expr e;
    e.kind = ExprKind::Assign;
    e.x = x.name;
    e.index = i;
    e.a = var_expr(y.name);
    const auto name = fresh("v");
    bind(name, Type::boolean(), kBool);
    return let(name, mk(std::move(e)));
  }

  std::optional<Wrap> op_lookup() {
    const bool unsafe = reckless();
    auto xs = candidates([&](const SVar& v) {
      return v.type.is_array() && (lang::read_only(v.type.elem()) || v.type.mod() == Mod::Var) &&
             (unsafe || v.val.len() > 0);
    });
    if (xs.empty() || !afford(2)) return std::nullopt;
    const auto& x = env_[pick(xs)];
    const std::size_t i = index_for(x, unsafe);
    SVal got;
    if (auto* s = slot(x, i)) {
      got = *s;
      if (!lang::read_only_elems(x.type)) *s = SVal{};
    }
    Expr e;
    e.kind = ExprKind::Lookup;
    e.x = x.name;
    e.index = i;
    const auto name = fresh("v");
    bind(name, lookup_type(x.type), got);
    return let(name, mk(std::move(e)));
  }

  std::optional<Wrap> op_copy() {
    auto xs = candidates([](const SVar&) { return true; });
    if (xs.empty() || !afford(2)) return std::nullopt;
    auto& x = env_[pick(xs)];
    const Type t = x.type;
    const auto from = x.name;
    SVal v = read(x);
    const auto name = fresh("v");
    bind(name, t, std::move(v));
    return let(name, var_expr(from));
  }

  std::pair<IndexMap, IndexMap> random_parts(std::size_t n, bool forget, bool unsafe) {
    std::vector<std::size_t> a, b;
    switch (below(3)) {
      case 0: {
        const std::size_t p = below(n + 1);
        for (std::size_t i = 0; i < n; ++i) (i < p ? a : b).push_back(i);
        break;
      }
      case 1:
        for (std::size_t i = 0; i < n; ++i) (i % 2 == 0 ? a : b).push_back(i);
        break;
      default:
        for (std::size_t i = 0; i < n; ++i) {
          if (forget && chance(0.15)) continue;
          (chance(0.5) ? a : b).push_back(i);
        }
        if (chance(0.3)) std::shuffle(a.begin(), a.end(), rng_);
        break;
    }
    if (unsafe) b.push_back(n + below(3));
    return {IndexMap(std::move(a)), IndexMap(std::move(b))};
  }

  std::optional<Wrap> op_split() {
    const bool unsafe = reckless();
    auto xs = candidates([&](const SVar& v) { return v.type.is_array() && (unsafe || v.val.live()); });
    if (xs.empty() || !afford(1)) return std::nullopt;
    auto& x = env_[pick(xs)];
    auto [s1, s2] = random_parts(x.val.len(), true, unsafe);
    SVal l, r;
    if (x.val.live() && s1.range_bound() <= x.val.len() && s2.range_bound() <= x.val.len()) {
      l = {SVal::Kind::Ref, x.val.id, sigma::compose(x.val.sigma, s1)};
      r = {SVal::Kind::Ref, x.val.id, sigma::compose(x.val.sigma, s2)};
    }
    x.val = SVal{};
    const Type t = x.type;
    const auto from = x.name;
    const auto yn = fresh("v");
    const auto zn = fresh("v");
    bind(yn, t, l);
    bind(zn, t, r);
    return [=](ExprPtr body) {
      Expr e;
      e.kind = ExprKind::Split;
      e.x = from;
      e.y = yn;
      e.z = zn;
      e.s1 = s1;
      e.s2 = s2;
      e.a = std::move(body);
      return mk(std::move(e));
    };
  }

  std::optional<Wrap> op_merge() {
    const bool unsafe = reckless();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    auto arrays = candidates([](const SVar& v) { return v.type.is_array(); });
    for (auto i : arrays) {
      for (auto j : arrays) {
        const auto& x = env_[i];
        const auto& y = env_[j];
        if (!(x.type == y.type)) continue;
        if (unsafe || (i != j && x.val.live() && y.val.live() && x.val.id == y.val.id &&
                       sigma::disjoint(x.val.sigma, y.val.sigma))) {
          pairs.emplace_back(i, j);
        }
      }
    }
    if (pairs.empty() || !afford(2)) return std::nullopt;
    auto [i, j] = pick(pairs);
    const SVal a = env_[i].val;
    const SVal b = env_[j].val;
    SVal merged;
    if (i != j && a.live() && b.live() && a.id == b.id && sigma::disjoint(a.sigma, b.sigma)) {
      merged = {SVal::Kind::Ref, a.id, sigma::concat(a.sigma, b.sigma)};
    }
    env_[i].val = SVal{};
    env_[j].val = SVal{};
    Expr e;
    e.kind = ExprKind::Merge;
    e.x = env_[i].name;
    e.y = env_[j].name;
    const auto name = fresh("v");
    bind(name, env_[i].type, merged);
    return let(name, mk(std::move(e)));
  }

  std::optional<Wrap> op_borrow() {
    auto xs = candidates([&](const SVar& v) { return v.type.is_array() && (wild() || v.val.live()); });
    if (xs.empty() || !afford(2)) return std::nullopt;
    if (remaining_ < 1) {
      remaining_ += 2;
      return std::nullopt;
    }
    const std::size_t xi = pick(xs);
    const bool as_read = chance(0.4);
    const std::size_t mark = env_.size();
    const auto yn = fresh("v");
    env_[xi].hidden = true;
    bind(yn, alias_type(env_[xi].type, as_read), env_[xi].val);
    ++borrow_depth_;
    auto body = block(Block::Borrow);
    --borrow_depth_;
    env_.resize(mark);
    env_[xi].hidden = false;
    Expr e;
    e.kind = ExprKind::Borrow;
    e.x = env_[xi].name;
    e.y = yn;
    e.as_read = as_read;
    e.a = body.expr;
    const auto name = fresh("v");
    bind(name, Type::boolean(), kBool);
    return let(name, mk(std::move(e)));
  }

  /// Two child blocks over disjoint variable sets, as finish/async requires.
  std::pair<ExprPtr, ExprPtr> children(const std::vector<std::size_t>& left, const std::vector<std::size_t>& right) {
    std::vector<bool> saved;
    for (const auto& v : env_) saved.push_back(v.hidden);
    auto only = [&](const std::vector<std::size_t>& keep) {
      for (auto& v : env_) v.hidden = true;
      for (auto i : keep) env_[i].hidden = saved[i];
    };
    ++forks_;
    only(left);
    --remaining_;  // the right block's final expression
    auto a = block(Block::Child);
    ++remaining_;
    only(right);
    auto b = block(Block::Child);
    for (std::size_t i = 0; i < saved.size(); ++i) env_[i].hidden = saved[i];
    // The spawning thread hands over everything it cannot copy.
    for (auto i : left) {
      if (!lang::read_only(env_[i].type)) env_[i].val = SVal{};
    }
    for (auto i : right) {
      if (!lang::read_only(env_[i].type)) env_[i].val = SVal{};
    }
    return {a.expr, b.expr};
  }

  static ExprPtr finish_expr(ExprPtr a, ExprPtr b, ExprPtr c) {
    Expr e;
    e.kind = ExprKind::Finish;
    e.a = std::move(a);
    e.b = std::move(b);
    e.c = std::move(c);
    return mk(std::move(e));
  }

  std::optional<Wrap> op_finish() {
    if (!afford(1)) return std::nullopt;
    if (remaining_ < 2) {
      ++remaining_;
      return std::nullopt;
    }
    std::vector<std::size_t> left, right;
    for (auto i : candidates([](const SVar&) { return true; })) {
      const auto r = below(5);
      if (r < 2) left.push_back(i);
      if (r >= 2 && r < 4) right.push_back(i);
    }
    auto [a, b] = children(left, right);
    return [a, b](ExprPtr body) { return finish_expr(a, b, std::move(body)); };
  }

  /// borrow x as y in let l ++ r = y in finish { async { ..l.. } async { ..r.. } }; true
  std::optional<Wrap> op_par() {
    auto xs = candidates([&](const SVar& v) { return v.type.is_array() && v.val.len() >= 2; });
    if (xs.empty() || !afford(5)) return std::nullopt;
    if (remaining_ < 2) {
      remaining_ += 5;
      return std::nullopt;
    }
    const std::size_t xi = pick(xs);
    const bool as_read = chance(0.3);
    const Type at = alias_type(env_[xi].type, as_read);
    const SVal xv = env_[xi].val;
    auto [s1, s2] = random_parts(xv.len(), false, false);
    const std::size_t mark = env_.size();
    env_[xi].hidden = true;
    const auto yn = fresh("v");
    const auto ln = fresh("v");
    const auto rn = fresh("v");
    std::vector<std::size_t> left, right;
    for (auto i : candidates([](const SVar&) { return true; })) {
      if (chance(0.2)) (chance(0.5) ? left : right).push_back(i);
    }
    bind(ln, at, {SVal::Kind::Ref, xv.id, sigma::compose(xv.sigma, s1)});
    left.push_back(env_.size() - 1);
    bind(rn, at, {SVal::Kind::Ref, xv.id, sigma::compose(xv.sigma, s2)});
    right.push_back(env_.size() - 1);
    ++borrow_depth_;
    auto [a, b] = children(left, right);
    --borrow_depth_;
    env_.resize(mark);
    env_[xi].hidden = false;

    Expr split;
    split.kind = ExprKind::Split;
    split.x = yn;
    split.y = ln;
    split.z = rn;
    split.s1 = s1;
    split.s2 = s2;
    split.a = finish_expr(a, b, bool_expr(true));
    Expr borrow;
    borrow.kind = ExprKind::Borrow;
    borrow.x = env_[xi].name;
    borrow.y = yn;
    borrow.as_read = as_read;
    borrow.a = mk(std::move(split));
    const auto name = fresh("v");
    bind(name, Type::boolean(), kBool);
    return let(name, mk(std::move(borrow)));
  }

  std::optional<Wrap> op_call() {
    auto xs = candidates([](const SVar&) { return true; });
    if (xs.empty() || !afford(3)) return std::nullopt;
    if (remaining_ < 1) {
      remaining_ += 3;
      return std::nullopt;
    }
    auto& x = env_[pick(xs)];
    const Type pt = x.type;
    const auto arg = x.name;
    const SVal v = read(x);
    const auto fn = fresh("f");
    const auto param = fresh("p");

    auto saved_env = std::move(env_);
    const int saved_borrow = borrow_depth_;
    env_.clear();
    borrow_depth_ = 0;
    bind(param, pt, v);
    ++call_depth_;
    auto body = block(Block::Helper);
    --call_depth_;
    env_ = std::move(saved_env);
    borrow_depth_ = saved_borrow;

    helpers_.push_back({fn, param, pt, body.type, body.expr, {}});
    Expr e;
    e.kind = ExprKind::Call;
    e.fn = fn;
    e.a = var_expr(arg);
    const auto name = fresh("v");
    bind(name, body.type, body.val);
    return let(name, mk(std::move(e)));
  }

  std::optional<Wrap> op_null() {
    if (!afford(2)) return std::nullopt;
    Expr e;
    e.kind = ExprKind::Val;
    e.value = Value::null();
    e.has_type = true;
    e.type = random_array_type();
    const auto name = fresh("v");
    bind(name, e.type, SVal{});
    return let(name, mk(std::move(e)));
  }

  std::mt19937_64 rng_;
  GenOptions opt_;
  std::size_t remaining_;
  std::vector<std::vector<SVal>> heap_;
  std::vector<SVar> env_;
  std::vector<FunDecl> helpers_;
  int names_ = 0;
  int borrow_depth_ = 0;
  int call_depth_ = 0;
  std::size_t forks_ = 0;
};

}  // namespace

Program generate(std::uint64_t seed, const GenOptions& options) {
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Gen gen(seed ^ (attempt * 0x9E3779B97F4A7C15ULL), options);
    Program p = gen.program();
    if (options.require_fork && fork_count(p) == 0) continue;
    auto checked = typecheck::check_program(p);
    if (!checked.program) {
      std::string why;
      for (const auto& d : checked.diagnostics) why += lang::format(d, "generated") + "\n";
      throw std::logic_error("generator produced an ill-typed program:\n" + why + lang::pretty(p));
    }
    return p;
  }
  throw GenerationExhausted("no program satisfying the options for seed " + std::to_string(seed));
}

}  // namespace arrcap::meta
