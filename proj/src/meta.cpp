#include "arrcap/meta.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_set>

namespace arrcap::meta {

using eval::Activity;
using eval::Heap;
using lang::Expr;
using lang::ExprKind;
using lang::Value;

std::string to_string(const CapOccurrence& c) {
  return "(ι" + std::to_string(c.id) + ", " + sigma::format(c.sigma) + ", " + lang::to_string(c.type) + ")";
}

namespace {

using Caps = std::vector<CapOccurrence>;

// caps_e(H; ι_σ^t)
void caps_value(const Heap& heap, const Value& v, const Type& t, Caps& out) {
  if (!v.is_ref() || !t.is_array()) return;
  out.push_back({v.id, v.sigma, t});
  if (v.id >= heap.size()) return;
  const auto& slots = heap[v.id]->slots;
  for (std::size_t phys : v.sigma.targets()) {
    if (phys < slots.size()) caps_value(heap, slots[phys], t.elem(), out);
  }
}

void caps_expr(const Heap& heap, const Expr& e, Caps& out) {
  if (e.kind == ExprKind::Val) {
    caps_value(heap, e.value, e.ty, out);
    return;
  }
  for (const auto* c : {&e.a, &e.b, &e.c}) {
    if (*c) caps_expr(heap, **c, out);
  }
}

// caps_S, walking right to left and collecting buried names
void caps_stack(const Heap& heap, const eval::Stack& s, Caps& out) {
  std::set<std::string> buried;
  for (auto it = s.rbegin(); it != s.rend(); ++it) {
    if (it->marked) {
      buried.insert(it->name);
    } else if (!buried.contains(it->name)) {
      caps_value(heap, it->value, it->type, out);
    }
  }
}

// big \ small, removing one occurrence per element of small
Caps minus(Caps big, const Caps& small) {
  for (const auto& c : small) {
    auto it = std::find(big.begin(), big.end(), c);
    if (it != big.end()) big.erase(it);
  }
  return big;
}

Caps caps_activity(const Heap& heap, const Activity& a) {
  Caps out;
  switch (a.kind) {
    case Activity::Kind::Error:
      break;
    case Activity::Kind::Leaf:
      caps_stack(heap, a.stack, out);
      caps_expr(heap, *a.expr, out);
      break;
    case Activity::Kind::Fork: {
      out = caps_activity(heap, *a.left);
      auto right = caps_activity(heap, *a.right);
      out.insert(out.end(), right.begin(), right.end());
      Caps waiting;
      caps_stack(heap, a.stack, waiting);
      caps_expr(heap, *a.expr, waiting);
      auto rest = minus(std::move(waiting), out);
      out.insert(out.end(), rest.begin(), rest.end());
      break;
    }
  }
  return out;
}

}  // namespace

Caps caps(const Config& cfg) { return caps_activity(cfg.heap, *cfg.root); }

bool subset(const Caps& small, const Caps& big) { return minus(small, big).empty(); }

Disjointness array_disjointness(const Caps& cs) {
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      const auto& a = cs[i];
      const auto& b = cs[j];
      if (a.id != b.id || sigma::disjoint(a.sigma, b.sigma) || (lang::is_read(a.type) && lang::is_read(b.type))) {
        continue;
      }
      return {false, std::make_pair(a, b)};
    }
  }
  return {};
}

Disjointness array_disjointness(const Config& cfg) { return array_disjointness(caps(cfg)); }

bool check_progress(const Config& cfg) { return eval::is_terminal(cfg) || !eval::enabled_choices(cfg).empty(); }

namespace {

void stuck_leaves(const Activity& a, eval::Choice& path, const std::vector<eval::Choice>& enabled,
                  std::optional<eval::Choice>& found) {
  if (found) return;
  if (a.kind == Activity::Kind::Leaf) {
    if (!lang::is_value(*a.expr) && std::find(enabled.begin(), enabled.end(), path) == enabled.end()) found = path;
    return;
  }
  if (a.kind != Activity::Kind::Fork) return;
  path.push_back('L');
  stuck_leaves(*a.left, path, enabled, found);
  path.back() = 'R';
  stuck_leaves(*a.right, path, enabled, found);
  path.pop_back();
}

}  // namespace

std::optional<eval::Choice> stuck_thread(const Config& cfg) {
  std::optional<eval::Choice> found;
  eval::Choice path;
  stuck_leaves(*cfg.root, path, eval::enabled_choices(cfg), found);
  return found;
}

std::optional<std::string> preservation_failure(const Config& before, const Config& after) {
  auto wf = eval::wf_config(after);
  if (!wf.ok) return "wf: " + wf.failure;
  if (after.heap.size() < before.heap.size()) return "delta: heap shrank";
  for (std::size_t id = 0; id < before.heap.size(); ++id) {
    if (!(before.heap[id]->tag == after.heap[id]->tag)) return "delta: type of ι" + std::to_string(id) + " changed";
  }
  return std::nullopt;
}

bool check_preservation(const Config& before, const Config& after) {
  return !preservation_failure(before, after).has_value();
}

bool moves_only(const std::string& rule) {
  static const std::set<std::string> rules = {"DYN-LET",          "DYN-CALL",   "DYN-VAR-LOOKUP-DEST",
                                              "DYN-ARRAY-ASSIGN", "DYN-FINISH", "DYN-SPAWN"};
  return rules.contains(rule);
}

namespace {

class Canonicalizer {
 public:
  explicit Canonicalizer(const Config& cfg) : cfg_(cfg) {}

  std::string run() {
    activity(*cfg_.root);
    for (std::size_t k = 0; k < order_.size(); ++k) {
      const auto& arr = *cfg_.heap[order_[k]];
      out_ += "\nH" + std::to_string(k) + ":" + lang::to_string(arr.tag) + "[";
      for (const auto& v : arr.slots) {
        value(v, true);
        out_ += ',';
      }
      out_ += ']';
    }
    std::vector<std::string> rest;
    for (ArrayId id = 0; id < cfg_.heap.size(); ++id) {
      if (ids_.contains(id)) continue;
      std::string saved = std::move(out_);
      out_ = lang::to_string(cfg_.heap[id]->tag) + "[";
      for (const auto& v : cfg_.heap[id]->slots) {
        value(v, false);
        out_ += ',';
      }
      out_ += ']';
      rest.push_back(std::move(out_));
      out_ = std::move(saved);
    }
    std::sort(rest.begin(), rest.end());
    for (const auto& r : rest) out_ += "\nG:" + r;
    return std::move(out_);
  }

 private:
  void value(const Value& v, bool assign) {
    switch (v.kind) {
      case Value::Kind::True: out_ += 't'; return;
      case Value::Kind::False: out_ += 'f'; return;
      case Value::Kind::Null: out_ += 'n'; return;
      case Value::Kind::Ref: break;
    }
    auto it = ids_.find(v.id);
    if (it == ids_.end() && assign && v.id < cfg_.heap.size()) {
      it = ids_.emplace(v.id, order_.size()).first;
      order_.push_back(v.id);
    }
    out_ += it == ids_.end() ? std::string("ι?") : "ι" + std::to_string(it->second);
    out_ += sigma::format(v.sigma);
  }

  void expr(const Expr& e) {
    out_ += static_cast<char>('A' + static_cast<int>(e.kind));
    switch (e.kind) {
      case ExprKind::Val:
        value(e.value, true);
        break;
      case ExprKind::New:
        out_ += lang::to_string(e.type);
        [[fallthrough]];
      case ExprKind::Lookup:
      case ExprKind::Assign:
        out_ += std::to_string(e.index);
        break;
      case ExprKind::Split:
        out_ += sigma::format(e.s1) + sigma::format(e.s2);
        break;
      case ExprKind::Borrow:
        out_ += e.as_read ? 'r' : 'w';
        break;
      default:
        break;
    }
    for (const auto* s : {&e.x, &e.y, &e.z, &e.fn}) {
      if (!s->empty()) out_ += *s + ' ';
    }
    out_ += '(';
    for (const auto* c : {&e.a, &e.b, &e.c}) {
      if (*c) expr(**c);
      out_ += ';';
    }
    out_ += ')';
  }

  void thread(const eval::Stack& s, const Expr& e, const Activity& a) {
    out_ += a.tag + "#" + std::to_string(a.counter) + "{";
    for (const auto& entry : s) {
      if (entry.marked) out_ += "•";
      out_ += entry.name + ':' + lang::to_string(entry.type) + '=';
      value(entry.value, true);
      out_ += ',';
    }
    out_ += '|';
    expr(e);
    out_ += '}';
  }

  void activity(const Activity& a) {
    switch (a.kind) {
      case Activity::Kind::Error: out_ += "ERROR"; return;
      case Activity::Kind::Leaf: thread(a.stack, *a.expr, a); return;
      case Activity::Kind::Fork:
        out_ += '[';
        activity(*a.left);
        out_ += "||";
        activity(*a.right);
        out_ += "|>";
        thread(a.stack, *a.expr, a);
        out_ += ']';
        return;
    }
  }

  const Config& cfg_;
  std::map<ArrayId, std::size_t> ids_;
  std::vector<ArrayId> order_;
  std::string out_;
};

}  // namespace

std::string canonical(const Config& cfg) { return Canonicalizer(cfg).run(); }

std::string dump(const Config& cfg) {
  const auto cs = caps(cfg);
  std::ostringstream out;
  for (ArrayId id = 0; id < cfg.heap.size(); ++id) {
    out << "ι" << id << ": [";
    const auto& slots = cfg.heap[id]->slots;
    for (std::size_t i = 0; i < slots.size(); ++i) out << (i ? ", " : "") << lang::to_string(slots[i]);
    out << "] caps=" << std::count_if(cs.begin(), cs.end(), [&](const CapOccurrence& c) { return c.id == id; })
        << '\n';
  }
  for (const auto& c : cs) {
    out << "cap(ι" << c.id << ", σ=" << sigma::format(c.sigma) << ", " << (lang::is_read(c.type) ? "read" : "unique")
        << ", " << (lang::is_borrowed(c.type) ? "borrowed" : "owned") << ")\n";
  }
  return out.str();
}

GauntletResult run_checked(const Config& initial, eval::Scheduler& scheduler, const GauntletOptions& options) {
  GauntletResult result;
  auto flag = [&](std::string which, std::size_t step, std::string detail) {
    result.violation = Violation{std::move(which), step, std::move(detail)};
  };

  auto wf0 = eval::wf_config(initial);
  Caps previous = caps(initial);
  if (!wf0.ok) {
    flag("wf", 0, wf0.failure);
  } else if (auto d = array_disjointness(previous); !d.ok) {
    flag("disjointness", 0, to_string(d.violation->first) + " vs " + to_string(d.violation->second));
  }
  if (result.violation) {
    result.run.final = initial;
    result.run.outcome = eval::Outcome::Aborted;
    return result;
  }

  eval::RunOptions run_options;
  run_options.max_steps = options.max_steps;
  run_options.record_trace = options.record_trace;
  run_options.observer = [&](const Config& before, const Config& after, const eval::TraceEntry& t) {
    if (auto f = preservation_failure(before, after)) {
      flag(f->starts_with("delta") ? "delta" : "wf", t.n, t.rule + ": " + *f);
      return false;
    }
    auto now = caps(after);
    if (auto d = array_disjointness(now); !d.ok) {
      flag("disjointness", t.n, t.rule + ": " + to_string(d.violation->first) + " vs " + to_string(d.violation->second));
      return false;
    }
    if (moves_only(t.rule) && !subset(now, previous)) {
      flag("subset", t.n, t.rule + " added capabilities");
      return false;
    }
    if (!check_progress(after)) {
      flag("progress", t.n, t.rule);
      return false;
    }
    if (auto s = stuck_thread(after)) {
      flag("stuck", t.n, "thread " + eval::format_path(*s));
      return false;
    }
    previous = std::move(now);
    return true;
  };
  result.run = eval::run(initial, scheduler, run_options);
  if (!result.violation && result.run.outcome == eval::Outcome::Stuck) flag("progress", result.run.steps, "stuck");
  return result;
}

ExploreResult explore(const Config& initial, const ExploreOptions& options) {
  ExploreResult result;
  struct Node {
    Config cfg;
    std::size_t depth;
  };
  std::vector<Node> todo{{initial, 0}};
  std::unordered_set<std::string> seen{canonical(initial)};
  while (!todo.empty()) {
    Node node = std::move(todo.back());
    todo.pop_back();
    if (eval::is_terminal(node.cfg)) {
      result.outcomes.emplace(canonical(node.cfg), node.cfg);
      continue;
    }
    auto choices = eval::enabled_choices(node.cfg);
    if (choices.empty()) {
      result.outcomes.emplace("STUCK\n" + canonical(node.cfg), node.cfg);
      continue;
    }
    if (node.depth >= options.max_steps) {
      result.bound_exceeded = true;
      continue;
    }
    for (auto it = choices.rbegin(); it != choices.rend(); ++it) {
      auto next = eval::step(node.cfg, *it).next;
      if (!seen.insert(canonical(next)).second) continue;
      if (seen.size() > options.max_states) {
        result.bound_exceeded = true;
        result.states = seen.size();
        return result;
      }
      todo.push_back({std::move(next), node.depth + 1});
    }
  }
  result.states = seen.size();
  return result;
}

}  // namespace arrcap::meta
