#include "arrcap/eval.hpp"

#include <optional>
#include <set>
#include <stdexcept>

namespace arrcap::eval {

using lang::ExprKind;

std::string format_path(const Choice& c) {
  if (c.empty()) return "root";
  std::string out;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out += '.';
    out += c[i];
  }
  return out;
}

std::string format(const TraceEntry& t) {
  return "#" + std::to_string(t.n) + " " + t.rule + " @" + format_path(t.path);
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Value: return "value";
    case Outcome::Error: return "error";
    case Outcome::Stuck: return "stuck";
    case Outcome::Budget: return "budget";
    case Outcome::Aborted: return "aborted";
  }
  return "?";
}

namespace {

ExprPtr value_expr(Value v, Type t, lang::SourceLoc loc) {
  Expr e;
  e.kind = ExprKind::Val;
  e.loc = loc;
  e.value = std::move(v);
  e.typed = true;
  e.ty = std::move(t);
  return lang::make(std::move(e));
}

ActivityPtr leaf(Stack stack, ExprPtr expr, std::string tag, std::uint64_t counter) {
  auto a = std::make_shared<Activity>();
  a->kind = Activity::Kind::Leaf;
  a->stack = std::move(stack);
  a->expr = std::move(expr);
  a->tag = std::move(tag);
  a->counter = counter;
  return a;
}

ActivityPtr error_activity() { return std::make_shared<Activity>(); }

bool is_value_leaf(const Activity& a) { return a.kind == Activity::Kind::Leaf && lang::is_value(*a.expr); }

std::optional<std::size_t> find(const Stack& s, const std::string& name) {
  for (std::size_t i = s.size(); i-- > 0;) {
    if (s[i].name == name) return i;
  }
  return std::nullopt;
}

ExprPtr rename(const ExprPtr& p, const std::string& suffix) {
  Expr e = *p;
  for (auto* s : {&e.x, &e.y, &e.z}) {
    if (!s->empty()) *s += suffix;
  }
  for (auto* c : {&e.a, &e.b, &e.c}) {
    if (*c) *c = rename(*c, suffix);
  }
  return lang::make(std::move(e));
}

// Result of stepping one thread.
struct LeafStep {
  enum class Kind { Expr, Error, Spawn };
  Kind kind = Kind::Expr;
  ExprPtr expr;  // next expression, or the waiting continuation for Spawn
  std::string rule;
  Stack s1, s2;
  ExprPtr e1, e2;
};

class Thread {
 public:
  Thread(const Program& program, Heap& heap, Stack& stack, std::string& tag, std::uint64_t& counter)
      : program_(program), heap_(heap), stack_(stack), tag_(tag), counter_(counter) {}

  // DYN-CONTEXT over E ::= let x = • in e | x[i] = • | f(•) | B(•)
  std::optional<LeafStep> step(const ExprPtr& p) {
    const Expr& e = *p;
    const bool context = e.kind == ExprKind::Let || e.kind == ExprKind::Assign ||
                         e.kind == ExprKind::Call || e.kind == ExprKind::Frame;
    if (context && !lang::is_value(*e.a)) {
      auto inner = step(e.a);
      if (!inner || inner->kind == LeafStep::Kind::Error) return inner;
      Expr rebuilt = e;
      rebuilt.a = inner->expr;
      inner->expr = lang::make(std::move(rebuilt));
      return inner;
    }
    return redex(p);
  }

 private:
  static LeafStep ok(ExprPtr next, std::string rule) {
    return {LeafStep::Kind::Expr, std::move(next), std::move(rule), {}, {}, {}, {}};
  }
  static LeafStep error(std::string rule) {
    return {LeafStep::Kind::Error, nullptr, std::move(rule), {}, {}, {}, {}};
  }

  std::optional<std::size_t> var(const std::string& name) const { return find(stack_, name); }

  void write(ArrayId id, std::size_t phys, Value v) {
    auto copy = std::make_shared<HeapArray>(*heap_[id]);
    copy->slots[phys] = std::move(v);
    heap_[id] = std::move(copy);
  }

  std::optional<LeafStep> redex(const ExprPtr& p) {
    const Expr& e = *p;
    switch (e.kind) {
      case ExprKind::Val:
        return std::nullopt;

      case ExprKind::Var: {
        auto i = var(e.x);
        if (!i) return std::nullopt;
        Value v = stack_[*i].value;
        if (lang::read_only(e.xty)) return ok(value_expr(v, e.ty, e.loc), "DYN-VAR-LOOKUP");
        stack_[*i].value = Value::null();
        return ok(value_expr(v, e.ty, e.loc), "DYN-VAR-LOOKUP-DEST");
      }

      case ExprKind::Let: {
        stack_.push_back({e.x, e.a->value, e.xty, false});
        return ok(e.b, "DYN-LET");
      }

      case ExprKind::Call: {
        const auto* f = program_.find(e.fn);
        if (!f) return std::nullopt;
        // Fresh names per call keep the stack free of duplicate bindings.
        const std::string suffix = "#" + tag_ + std::to_string(counter_++);
        stack_.push_back({f->param + suffix, e.a->value, f->param_type, false});
        return ok(rename(f->body, suffix), "DYN-CALL");
      }

      case ExprKind::Frame: {
        std::optional<std::size_t> mark;
        for (std::size_t i = stack_.size(); i-- > 0;) {
          if (stack_[i].marked) {
            mark = i;
            break;
          }
        }
        if (!mark) return std::nullopt;
        stack_.resize(*mark);
        return ok(value_expr(Value::boolean(true), Type::boolean(), e.loc), "DYN-BORROW-DONE");
      }

      case ExprKind::New: {
        if (!e.type.is_array()) return std::nullopt;
        const Value init = e.type.elem().is_bool() ? Value::boolean(false) : Value::null();
        const ArrayId id = heap_.size();
        heap_.push_back(std::make_shared<const HeapArray>(HeapArray{e.type, std::vector<Value>(e.index, init)}));
        return ok(value_expr(Value::ref(id, sigma::identity(e.index)), e.type, e.loc), "DYN-ARRAY-NEW");
      }

      case ExprKind::Lookup: {
        auto i = var(e.x);
        if (!i) return std::nullopt;
        const Value& x = stack_[*i].value;
        if (x.is_null()) return error("DYN-ARRAY-LOOKUP-NULL");
        if (!x.is_ref()) return std::nullopt;
        if (!x.sigma.contains(e.index)) return error("DYN-ARRAY-LOOKUP-FAIL");
        const std::size_t phys = x.sigma[e.index];
        if (x.id >= heap_.size() || phys >= heap_[x.id]->slots.size()) return std::nullopt;
        Value v = heap_[x.id]->slots[phys];
        if (lang::read_only_elems(e.xty)) return ok(value_expr(v, e.ty, e.loc), "DYN-ARRAY-LOOKUP");
        write(x.id, phys, Value::null());
        return ok(value_expr(v, e.ty, e.loc), "DYN-ARRAY-LOOKUP-UNIQUE");
      }

      case ExprKind::Assign: {
        auto i = var(e.x);
        if (!i) return std::nullopt;
        const Value x = stack_[*i].value;
        if (x.is_null()) return error("DYN-ARRAY-ASSIGN-NULL");
        if (!x.is_ref()) return std::nullopt;
        if (!x.sigma.contains(e.index)) return error("DYN-ARRAY-ASSIGN-FAIL");
        const std::size_t phys = x.sigma[e.index];
        if (x.id >= heap_.size() || phys >= heap_[x.id]->slots.size()) return std::nullopt;
        write(x.id, phys, e.a->value);
        return ok(value_expr(Value::boolean(true), Type::boolean(), e.loc), "DYN-ARRAY-ASSIGN");
      }

      case ExprKind::Split: {
        auto i = var(e.x);
        if (!i) return std::nullopt;
        const Value x = stack_[*i].value;
        if (x.is_null()) return error("DYN-ARRAY-SPLIT-NULL");
        if (!x.is_ref()) return std::nullopt;
        IndexMap left, right;
        try {
          left = sigma::compose(x.sigma, e.s1);
          right = sigma::compose(x.sigma, e.s2);
        } catch (const Error&) {
          return error("DYN-ARRAY-SPLIT-FAIL");
        }
        stack_[*i].value = Value::null();
        stack_.push_back({e.y, Value::ref(x.id, std::move(left)), e.xty, false});
        stack_.push_back({e.z, Value::ref(x.id, std::move(right)), e.xty, false});
        return ok(e.a, "DYN-ARRAY-SPLIT");
      }

      case ExprKind::Merge: {
        auto i = var(e.x);
        auto j = var(e.y);
        if (!i || !j) return std::nullopt;
        const Value x = stack_[*i].value;
        const Value y = stack_[*j].value;
        if (x.is_null() || y.is_null()) return error("DYN-ARRAY-MERGE-NULL");
        if (!x.is_ref() || !y.is_ref()) return std::nullopt;
        if (x.id != y.id) return error("DYN-ARRAY-MERGE-FAIL");
        if (!sigma::disjoint(x.sigma, y.sigma)) return error("DYN-ARRAY-MERGE-OVERLAP");
        stack_[*i].value = Value::null();
        stack_[*j].value = Value::null();
        return ok(value_expr(Value::ref(x.id, sigma::concat(x.sigma, y.sigma)), e.ty, e.loc), "DYN-ARRAY-MERGE");
      }

      case ExprKind::Borrow: {
        auto i = var(e.x);
        if (!i) return std::nullopt;
        const Value v = stack_[*i].value;
        stack_.push_back({e.x, Value::null(), Type::array(lang::Annot::Buried, e.xty.mod(), e.xty.elem()), true});
        stack_.push_back({e.y, v, e.yty, false});
        Expr frame;
        frame.kind = ExprKind::Frame;
        frame.loc = e.loc;
        frame.a = e.a;
        frame.typed = true;
        frame.ty = Type::boolean();
        return ok(lang::make(std::move(frame)), "DYN-BORROW");
      }

      case ExprKind::Finish: {
        LeafStep out;
        out.kind = LeafStep::Kind::Spawn;
        out.rule = "DYN-SPAWN";
        out.e1 = e.a;
        out.e2 = e.b;
        out.expr = e.c;
        const auto fv1 = lang::free_vars(*e.a);
        const auto fv2 = lang::free_vars(*e.b);
        for (std::size_t k = 0; k < stack_.size(); ++k) {
          const auto& entry = stack_[k];
          if (find(stack_, entry.name) != k) continue;
          if (fv1.contains(entry.name)) out.s1.push_back({entry.name, entry.value, entry.type, false});
          if (fv2.contains(entry.name)) out.s2.push_back({entry.name, entry.value, entry.type, false});
        }
        // Values moved into a child stop being reachable from the parent,
        // unless they may be freely copied.
        for (std::size_t k = 0; k < stack_.size(); ++k) {
          auto& entry = stack_[k];
          const bool used = fv1.contains(entry.name) || fv2.contains(entry.name);
          if (used && find(stack_, entry.name) == k && !lang::read_only(entry.type)) entry.value = Value::null();
        }
        return out;
      }
    }
    return std::nullopt;
  }

  const Program& program_;
  Heap& heap_;
  Stack& stack_;
  std::string& tag_;
  std::uint64_t& counter_;
};

const Activity* at(const Activity* a, const Choice& path) {
  for (char c : path) {
    if (a->kind != Activity::Kind::Fork) return nullptr;
    a = (c == 'L' ? a->left : a->right).get();
  }
  return a;
}

ActivityPtr replace(const ActivityPtr& node, const Choice& path, std::size_t depth, ActivityPtr with) {
  if (depth == path.size()) return with;
  auto copy = std::make_shared<Activity>(*node);
  auto& child = path[depth] == 'L' ? copy->left : copy->right;
  child = replace(child, path, depth + 1, std::move(with));
  return copy;
}

struct NodeStep {
  ActivityPtr activity;
  std::string rule;
};

std::optional<NodeStep> step_node(const Program& program, Heap& heap, const Activity& a) {
  switch (a.kind) {
    case Activity::Kind::Error:
      return std::nullopt;
    case Activity::Kind::Fork:
      if (a.left->kind == Activity::Kind::Error) return NodeStep{error_activity(), "DYN-SCHED-L-FAIL"};
      if (a.right->kind == Activity::Kind::Error) return NodeStep{error_activity(), "DYN-SCHED-R-FAIL"};
      if (is_value_leaf(*a.left) && is_value_leaf(*a.right)) {
        return NodeStep{leaf(a.stack, a.expr, a.tag, a.counter), "DYN-FINISH"};
      }
      return std::nullopt;
    case Activity::Kind::Leaf: {
      Stack stack = a.stack;
      std::string tag = a.tag;
      std::uint64_t counter = a.counter;
      Thread thread(program, heap, stack, tag, counter);
      auto r = thread.step(a.expr);
      if (!r) return std::nullopt;
      switch (r->kind) {
        case LeafStep::Kind::Error:
          return NodeStep{error_activity(), r->rule};
        case LeafStep::Kind::Expr:
          return NodeStep{leaf(std::move(stack), r->expr, tag, counter), r->rule};
        case LeafStep::Kind::Spawn: {
          const std::string k = std::to_string(counter++);
          auto fork = std::make_shared<Activity>();
          fork->kind = Activity::Kind::Fork;
          fork->left = leaf(std::move(r->s1), r->e1, tag + k + "L", 0);
          fork->right = leaf(std::move(r->s2), r->e2, tag + k + "R", 0);
          fork->stack = std::move(stack);
          fork->expr = r->expr;
          fork->tag = tag;
          fork->counter = counter;
          return NodeStep{std::move(fork), r->rule};
        }
      }
    }
  }
  return std::nullopt;
}

void collect_choices(const Program& program, const Heap& heap, const Activity& a, Choice& path,
                     std::vector<Choice>& out) {
  switch (a.kind) {
    case Activity::Kind::Error:
      return;
    case Activity::Kind::Leaf: {
      if (lang::is_value(*a.expr)) return;
      Heap scratch = heap;
      if (step_node(program, scratch, a)) out.push_back(path);
      return;
    }
    case Activity::Kind::Fork: {
      const bool fails = a.left->kind == Activity::Kind::Error || a.right->kind == Activity::Kind::Error;
      if (fails || (is_value_leaf(*a.left) && is_value_leaf(*a.right))) out.push_back(path);
      path.push_back('L');
      collect_choices(program, heap, *a.left, path, out);
      path.back() = 'R';
      collect_choices(program, heap, *a.right, path, out);
      path.pop_back();
      return;
    }
  }
}

}  // namespace

Config initial_config(std::shared_ptr<const Program> program) {
  const auto* main = program->find("main");
  if (!main) throw std::invalid_argument("program has no main");
  Config cfg;
  const Value arg = main->param_type.is_bool() ? Value::boolean(false) : Value::null();
  cfg.root = leaf({{main->param, arg, main->param_type, false}}, main->body, "", 0);
  cfg.program = std::move(program);
  return cfg;
}

bool is_error(const Config& cfg) { return cfg.root->kind == Activity::Kind::Error; }

const Expr* root_value(const Config& cfg) {
  if (is_value_leaf(*cfg.root)) return cfg.root->expr.get();
  return nullptr;
}

bool is_terminal(const Config& cfg) { return is_error(cfg) || root_value(cfg) != nullptr; }

std::vector<Choice> enabled_choices(const Config& cfg) {
  std::vector<Choice> out;
  Choice path;
  collect_choices(*cfg.program, cfg.heap, *cfg.root, path, out);
  return out;
}

StepResult step(const Config& cfg, const Choice& choice) {
  const Activity* node = at(cfg.root.get(), choice);
  if (!node) throw std::invalid_argument("no activity at " + format_path(choice));
  Config next = cfg;
  auto r = step_node(*cfg.program, next.heap, *node);
  if (!r) throw std::invalid_argument("activity at " + format_path(choice) + " cannot step");
  next.root = replace(cfg.root, choice, 0, std::move(r->activity));
  return {std::move(next), std::move(r->rule)};
}

std::size_t SeededScheduler::pick(const std::vector<Choice>& enabled) {
  return static_cast<std::size_t>(rng_() % enabled.size());
}

std::size_t FixedScheduler::pick(const std::vector<Choice>& enabled) {
  const std::size_t want = next_ < picks_.size() ? picks_[next_] : 0;
  ++next_;
  return want < enabled.size() ? want : 0;
}

RunResult run(const Config& initial, Scheduler& scheduler, const RunOptions& options) {
  RunResult result;
  result.final = initial;
  while (true) {
    if (is_error(result.final)) {
      result.outcome = Outcome::Error;
      return result;
    }
    if (root_value(result.final)) {
      result.outcome = Outcome::Value;
      return result;
    }
    auto choices = enabled_choices(result.final);
    if (choices.empty()) {
      result.outcome = Outcome::Stuck;
      return result;
    }
    if (result.steps >= options.max_steps) {
      result.outcome = Outcome::Budget;
      return result;
    }
    const auto& choice = choices[scheduler.pick(choices)];
    auto [next, rule] = step(result.final, choice);
    TraceEntry entry{++result.steps, std::move(rule), choice};
    const bool keep_going = !options.observer || options.observer(result.final, next, entry);
    result.final = std::move(next);
    if (options.record_trace) result.trace.push_back(std::move(entry));
    if (!keep_going) {
      result.outcome = Outcome::Aborted;
      return result;
    }
  }
}

namespace {

class WfChecker {
 public:
  WfChecker(const Config& cfg, WfReport& report) : cfg_(cfg), report_(report), checker_(*cfg.program) {}

  bool heap() {
    auto& delta = report_.delta;
    for (ArrayId id = 0; id < cfg_.heap.size(); ++id) {
      const auto& arr = *cfg_.heap[id];
      if (!arr.tag.is_array()) return fail("WF-D-ADD: ι" + std::to_string(id) + " has non-array type");
      delta.emplace(id, arr.tag);
    }
    if (!typecheck::wf_runtime_env(delta)) return fail("WF-D-ADD: malformed Δ");
    for (ArrayId id = 0; id < cfg_.heap.size(); ++id) {
      const auto& arr = *cfg_.heap[id];
      for (std::size_t k = 0; k < arr.slots.size(); ++k) {
        if (auto err = typecheck::check_value(delta, arr.slots[k], arr.tag.elem())) {
          return fail("WF-H-ADD: ι" + std::to_string(id) + "[" + std::to_string(k) + "]: " + *err);
        }
        if (!in_bounds(arr.slots[k])) return fail("WF-H-ADD: ι" + std::to_string(id) + " holds a dangling reference");
      }
    }
    return true;
  }

  bool activity(const Activity& a, const std::string& where) {
    switch (a.kind) {
      case Activity::Kind::Error:
        return true;  // WF-ERROR
      case Activity::Kind::Fork:
        return activity(*a.left, where + "L") && activity(*a.right, where + "R") &&
               thread(a.stack, a.expr, "waiting thread " + eval::format_path(where));
      case Activity::Kind::Leaf:
        return thread(a.stack, a.expr, "thread " + eval::format_path(where));
    }
    return false;
  }

 private:
  bool fail(std::string msg) {
    report_.ok = false;
    report_.failure = std::move(msg);
    return false;
  }

  bool in_bounds(const Value& v) const {
    if (!v.is_ref()) return true;
    if (v.id >= cfg_.heap.size()) return false;
    return v.sigma.range_bound() <= cfg_.heap[v.id]->slots.size();
  }

  bool values_in_bounds(const Expr& e) const {
    if (e.kind == ExprKind::Val && !in_bounds(e.value)) return false;
    for (const auto* c : {&e.a, &e.b, &e.c}) {
      if (*c && !values_in_bounds(**c)) return false;
    }
    return true;
  }

  // WF-THREAD with WF-S-VAR / WF-S-BORROW mirroring the stack into Γ.
  bool thread(const Stack& s, const ExprPtr& p, const std::string& where) {
    const Expr& e = *p;
    const std::string at = where + ": ";
    typecheck::TypeEnv gamma;
    for (const auto& entry : s) {
      if (!in_bounds(entry.value)) return fail(at + "dangling reference in '" + entry.name + "'");
      if (entry.marked) {
        const auto* prior = gamma.lookup(entry.name);
        if (!prior || !prior->type.is_array() || lang::is_buried(prior->type)) {
          return fail(at + "WF-S-BORROW: '" + entry.name + "' is not an accessible array before its marker");
        }
        const Type buried = Type::array(lang::Annot::Buried, prior->type.mod(), prior->type.elem());
        if (!entry.value.is_null() || !(entry.type == buried)) {
          return fail(at + "WF-S-BORROW: marker for '" + entry.name + "' must be null at " + lang::to_string(buried));
        }
        gamma.push_marked(entry.name, entry.type);
      } else {
        if (gamma.binds(entry.name)) return fail(at + "WF-VAR: '" + entry.name + "' bound twice");
        if (auto err = typecheck::check_value(report_.delta, entry.value, entry.type)) {
          return fail(at + "WF-S-VAR: '" + entry.name + "': " + *err);
        }
        gamma.push(entry.name, entry.type);
      }
    }
    if (!typecheck::wf_env(gamma)) return fail(at + "malformed environment");
    if (gamma.markers() != lang::frame_depth(e)) {
      return fail(at + std::to_string(gamma.markers()) + " stack markers but " +
                  std::to_string(lang::frame_depth(e)) + " borrow frames");
    }
    if (!values_in_bounds(e)) return fail(at + "dangling reference in expression");
    try {
      checker_.infer(report_.delta, gamma, 0, p);
    } catch (const typecheck::TypeError& err) {
      return fail(at + err.rule() + ": " + err.what());
    }
    report_.gammas.push_back(std::move(gamma));
    return true;
  }

  const Config& cfg_;
  WfReport& report_;
  typecheck::Checker checker_;
};

}  // namespace

WfReport wf_config(const Config& cfg) {
  WfReport report;
  WfChecker checker(cfg, report);
  if (checker.heap()) checker.activity(*cfg.root, "");
  return report;
}

}  // namespace arrcap::eval
