#include <doctest.h>

#include <set>

#include "arrcap/eval.hpp"
#include "arrcap/parser.hpp"
#include "support.hpp"

using namespace arrcap::eval;
using arrcap::IndexMap;
using arrcap::lang::Annot;
using arrcap::lang::ExprKind;
using arrcap::lang::Mod;
using test_support::checked;

namespace {

Config start(std::string_view src) { return initial_config(checked(src)); }

Config start_file(const std::string& rel) { return start(arrcap::read_file(test_support::program_path(rel))); }

RunResult run_seed(const Config& cfg, std::uint64_t seed) {
  SeededScheduler s(seed);
  return run(cfg, s);
}

/// Steps the first enabled choice until `rule` fires; returns the config after it.
Config step_until(Config cfg, const std::string& rule) {
  for (int guard = 0; guard < 1000; ++guard) {
    auto choices = enabled_choices(cfg);
    REQUIRE_FALSE(choices.empty());
    auto r = step(cfg, choices.front());
    if (r.rule == rule) return r.next;
    cfg = std::move(r.next);
  }
  FAIL("rule never fired: " << rule);
  return cfg;
}

std::vector<Value> slots(const Config& cfg, ArrayId id) { return cfg.heap.at(id)->slots; }

const Value T = Value::boolean(true);
const Value F = Value::boolean(false);

void for_each_leaf(const Activity& a, const std::function<void(const Activity&)>& f) {
  if (a.kind == Activity::Kind::Leaf) f(a);
  if (a.kind == Activity::Kind::Fork) {
    for_each_leaf(*a.left, f);
    for_each_leaf(*a.right, f);
  }
}

}  // namespace

TEST_CASE("trivial program") {
  auto r = run_seed(start("fun main(x: bool): bool true"), 0);
  CHECK(r.outcome == Outcome::Value);
  CHECK(r.steps == 0);
  CHECK(r.final.heap.empty());
  REQUIRE(root_value(r.final));
  CHECK(root_value(r.final)->value == T);
}

TEST_CASE("main receives a default argument") {
  auto cfg = start("fun main(x: unique [var bool]): bool true");
  CHECK(cfg.root->stack.size() == 1);
  CHECK(cfg.root->stack[0].value.is_null());
  auto cfg2 = start("fun main(x: bool): bool x");
  CHECK(cfg2.root->stack[0].value == F);
}

TEST_CASE("new allocates false-filled arrays") {
  auto cfg = start("fun main(x: bool): unique [var bool] new unique [var bool](2)");
  auto r = step(cfg, "");
  CHECK(r.rule == "DYN-ARRAY-NEW");
  REQUIRE(r.next.heap.size() == 1);
  CHECK(slots(r.next, 0) == std::vector<Value>{F, F});
  CHECK(root_value(r.next)->value == Value::ref(0, arrcap::sigma::identity(2)));
}

TEST_CASE("nested arrays start out null") {
  auto r = step(start("fun main(x: bool): unique [var unique [var bool]] new unique [var unique [var bool]](3)"), "");
  CHECK(slots(r.next, 0) == std::vector<Value>(3, Value::null()));
}

TEST_CASE("lookup of a unique element nulls the slot") {
  auto cfg = start(R"(
fun main(x: bool): unique [var bool]
  let g = new unique [var unique [var bool]](1) in
  let r = new unique [var bool](1) in
  let s = g[0] = r in
  g[0]
)");
  auto before = step_until(cfg, "DYN-ARRAY-ASSIGN");
  CHECK(slots(before, 0)[0] == Value::ref(1, IndexMap{0}));
  auto after = step_until(before, "DYN-ARRAY-LOOKUP-UNIQUE");
  CHECK(slots(after, 0)[0].is_null());
  CHECK(root_value(after)->value == Value::ref(1, IndexMap{0}));
}

TEST_CASE("lookup of a bool element keeps it") {
  auto cfg = start("fun main(x: bool): bool let a = new unique [var bool](2) in let w = a[1] = true in a[1]");
  auto r = run_seed(cfg, 0);
  CHECK(root_value(r.final)->value == T);
  CHECK(slots(r.final, 0) == std::vector<Value>{F, T});
  CHECK(r.trace.back().rule == "DYN-ARRAY-LOOKUP");
}

TEST_CASE("translated index of the second consecutive part") {
  auto r = run_seed(start_file("split.arrc"), 0);
  CHECK(r.outcome == Outcome::Value);
  CHECK(root_value(r.final)->value == T);
  CHECK(slots(r.final, 0) == std::vector<Value>{F, F, F, T, F});
}

TEST_CASE("strided split and concatenating merge") {
  auto r = run_seed(start_file("strided.arrc"), 0);
  REQUIRE(r.outcome == Outcome::Value);
  CHECK(root_value(r.final)->value == Value::ref(0, IndexMap{0, 2, 4, 1, 3}));
  CHECK(slots(r.final, 0) == std::vector<Value>{F, T, F, T, F});
}

TEST_CASE("parallel halves through a borrow") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = run_seed(start_file("ok.arrc"), seed);
    REQUIRE(r.outcome == Outcome::Value);
    CHECK(root_value(r.final)->value == Value::ref(0, arrcap::sigma::identity(4)));
    CHECK(slots(r.final, 0) == std::vector<Value>{T, F, F, T});
  }
}

TEST_CASE("error rules") {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"oob.arrc", "DYN-ARRAY-LOOKUP-FAIL"},
      {"errors/lookup_oob.arrc", "DYN-ARRAY-LOOKUP-FAIL"},
      {"errors/assign_oob.arrc", "DYN-ARRAY-ASSIGN-FAIL"},
      {"errors/lookup_null.arrc", "DYN-ARRAY-LOOKUP-NULL"},
      {"errors/assign_null.arrc", "DYN-ARRAY-ASSIGN-NULL"},
      {"errors/split_null.arrc", "DYN-ARRAY-SPLIT-NULL"},
      {"errors/merge_null.arrc", "DYN-ARRAY-MERGE-NULL"},
      {"errors/merge_cross.arrc", "DYN-ARRAY-MERGE-FAIL"},
      {"errors/split_range.arrc", "DYN-ARRAY-SPLIT-FAIL"},
  };
  for (const auto& [file, rule] : cases) {
    CAPTURE(file);
    auto r = run_seed(start_file(file), 0);
    CHECK(r.outcome == Outcome::Error);
    CHECK(is_error(r.final));
    CHECK(r.trace.back().rule == rule);
    CHECK(enabled_choices(r.final).empty());
  }
}

TEST_CASE("errors inside a child fail the whole configuration") {
  auto cfg = start(R"(
fun main(x: bool): bool
  let a = new unique [var bool](1) in
  let b = new unique [var bool](1) in
  finish {
    async { a[3] }
    async { b[0] }
  };
  true
)");
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    auto r = run_seed(cfg, seed);
    CHECK(r.outcome == Outcome::Error);
    std::set<std::string> rules;
    for (const auto& t : r.trace) rules.insert(t.rule);
    CHECK(rules.contains("DYN-ARRAY-LOOKUP-FAIL"));
    CHECK(rules.contains("DYN-SCHED-L-FAIL"));
  }
}

TEST_CASE("variable reads") {
  auto cfg = start("fun main(x: bool): unique [var bool] let a = new unique [var bool](1) in let b = a in b");
  auto r = run_seed(cfg, 0);
  std::vector<std::string> rules;
  for (const auto& t : r.trace) rules.push_back(t.rule);
  CHECK(rules == std::vector<std::string>{"DYN-ARRAY-NEW", "DYN-LET", "DYN-VAR-LOOKUP-DEST", "DYN-LET",
                                          "DYN-VAR-LOOKUP-DEST"});
  const auto& stack = r.final.root->stack;
  REQUIRE(stack.size() == 3);
  CHECK(stack[1].value.is_null());
  CHECK(stack[2].value.is_null());

  auto r2 = run_seed(start("fun main(x: bool): bool let y = x in x"), 0);
  CHECK(r2.trace.front().rule == "DYN-VAR-LOOKUP");
  CHECK(r2.final.root->stack[0].value == F);
}

TEST_CASE("enabled choices") {
  auto cfg = start(R"(
fun main(x: bool): bool
  let a = new unique [var bool](1) in
  let b = new unique [var bool](1) in
  finish {
    async { a[0] = true }
    async { b[0] = true }
  };
  true
)");
  auto fork = step_until(cfg, "DYN-SPAWN");
  CHECK(fork.root->kind == Activity::Kind::Fork);
  CHECK(enabled_choices(fork) == std::vector<Choice>{"L", "R"});
  auto done = fork;
  while (enabled_choices(done) != std::vector<Choice>{""}) done = step(done, enabled_choices(done).front()).next;
  CHECK(root_value(done) == nullptr);
  auto joined = step(done, "");
  CHECK(joined.rule == "DYN-FINISH");
  CHECK(joined.next.root->kind == Activity::Kind::Leaf);
  CHECK(slots(joined.next, 0)[0] == T);
  CHECK(slots(joined.next, 1)[0] == T);
  auto finished = run_seed(joined.next, 0);
  CHECK(enabled_choices(finished.final).empty());
  CHECK_THROWS_AS(step(finished.final, ""), std::invalid_argument);
  CHECK_THROWS_AS(step(fork, ""), std::invalid_argument);
  CHECK_THROWS_AS(step(fork, "LL"), std::invalid_argument);
}

TEST_CASE("spawn hands each child exactly its free variables") {
  auto cfg = start(R"(
fun main(x: bool): bool
  let a = new unique [var bool](1) in
  let b = new unique [var bool](1) in
  let c = new unique [var bool](1) in
  finish {
    async { let t = x in a[0] = t }
    async { b[0] = true }
  };
  true
)");
  auto fork = step_until(cfg, "DYN-SPAWN");
  auto names = [](const Stack& s) {
    std::vector<std::string> out;
    for (const auto& e : s) out.push_back(e.name);
    return out;
  };
  CHECK(names(fork.root->left->stack) == std::vector<std::string>{"x", "a"});
  CHECK(names(fork.root->right->stack) == std::vector<std::string>{"b"});
  // The waiting thread gives up what it handed over, except copyable values.
  const auto& waiting = fork.root->stack;
  CHECK(waiting[0].value == F);
  CHECK(waiting[1].value.is_null());
  CHECK(waiting[2].value.is_null());
  CHECK(waiting[3].value.is_ref());
  CHECK(fork.root->left->tag != fork.root->right->tag);
}

TEST_CASE("borrow pushes a marker and done pops to it") {
  auto cfg = start(R"(
fun main(x: bool): unique [var bool]
  let a = new unique [var bool](2) in
  let r = borrow a as read b in
    let l{0->0} ++ q{0->1} = b in
    l[0]
  in
  a
)");
  auto in = step_until(cfg, "DYN-BORROW");
  const auto& s = in.root->stack;
  REQUIRE(s.size() == 4);
  CHECK(s[2].marked);
  CHECK(s[2].name == "a");
  CHECK(s[2].value.is_null());
  CHECK(s[2].type == arrcap::lang::Type::array(Annot::Buried, Mod::Var, arrcap::lang::Type::boolean()));
  CHECK(s[3].name == "b");
  CHECK(s[3].value == s[1].value);
  CHECK(arrcap::lang::frame_depth(*in.root->expr) == 1);

  auto deeper = step_until(in, "DYN-ARRAY-SPLIT");
  CHECK(deeper.root->stack.size() == 6);
  auto out = step_until(deeper, "DYN-BORROW-DONE");
  CHECK(out.root->stack.size() == 2);
  CHECK(arrcap::lang::frame_depth(*out.root->expr) == 0);
  // The original binding was never touched.
  CHECK(out.root->stack[1].value == Value::ref(0, arrcap::sigma::identity(2)));
  auto r = run_seed(out, 0);
  CHECK(root_value(r.final)->value == Value::ref(0, arrcap::sigma::identity(2)));
  CHECK(r.final.root->stack[2].name == "r");
  CHECK(r.final.root->stack[2].value == T);
}

TEST_CASE("markers match borrow frames after every step") {
  auto cfg = start(R"(
fun inner(p: borrowed [var bool]): bool
  borrow p as q in
  q[0] = true

fun main(x: bool): unique [var bool]
  let a = new unique [var bool](2) in
  let r = borrow a as b in
    let l{0->0} ++ m{0->1} = b in
    finish {
      async { inner(l) }
      async { borrow m as read n in borrow n as o in o[0] }
    };
    true
  in
  a
)");
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    SeededScheduler s(seed);
    RunOptions opts;
    std::size_t max_markers = 0;
    opts.observer = [&](const Config&, const Config& after, const TraceEntry&) {
      for_each_leaf(*after.root, [&](const Activity& leaf) {
        std::size_t markers = 0;
        for (const auto& e : leaf.stack) markers += e.marked ? 1 : 0;
        CHECK(markers == arrcap::lang::frame_depth(*leaf.expr));
        max_markers = std::max(max_markers, markers);
      });
      return true;
    };
    auto r = run(cfg, s, opts);
    CHECK(r.outcome == Outcome::Value);
    CHECK(max_markers == 2);
    CHECK(slots(r.final, 0) == std::vector<Value>{T, F});
  }
}

TEST_CASE("calls bind fresh parameter names") {
  auto cfg = start(R"(
fun twice(p: unique [var bool]): unique [var bool]
  let q = p in q

fun main(x: bool): unique [var bool]
  let a = new unique [var bool](1) in
  let b = twice(a) in
  twice(b)
)");
  auto r = run_seed(cfg, 0);
  REQUIRE(r.outcome == Outcome::Value);
  std::set<std::string> names;
  for (const auto& e : r.final.root->stack) CHECK(names.insert(e.name).second);
  CHECK(names.size() == 7);
  CHECK(root_value(r.final)->value == Value::ref(0, IndexMap{0}));
}

TEST_CASE("recursion under a budget") {
  auto cfg = start("fun loop(p: bool): bool loop(p) fun main(x: bool): bool loop(x)");
  SeededScheduler s(0);
  RunOptions opts;
  opts.max_steps = 50;
  auto r = run(cfg, s, opts);
  CHECK(r.outcome == Outcome::Budget);
  CHECK(r.steps == 50);
}

TEST_CASE("observer can abort") {
  SeededScheduler s(0);
  RunOptions opts;
  opts.observer = [](const Config&, const Config&, const TraceEntry& t) { return t.n < 2; };
  auto r = run(start_file("ok.arrc"), s, opts);
  CHECK(r.outcome == Outcome::Aborted);
  CHECK(r.steps == 2);
}

TEST_CASE("trace lines") {
  CHECK(format(TraceEntry{1, "DYN-LET", ""}) == "#1 DYN-LET @root");
  CHECK(format(TraceEntry{12, "DYN-ARRAY-ASSIGN", "LR"}) == "#12 DYN-ARRAY-ASSIGN @L.R");
  auto r = run_seed(start_file("ok.arrc"), 3);
  CHECK(format(r.trace.front()) == "#1 DYN-ARRAY-NEW @root");
}

TEST_CASE("same seed, same trace") {
  auto cfg = start_file("ok.arrc");
  for (std::uint64_t seed : {0u, 1u, 99u}) {
    auto a = run_seed(cfg, seed);
    auto b = run_seed(cfg, seed);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) CHECK(format(a.trace[i]) == format(b.trace[i]));
  }
}

TEST_CASE("fixed schedules pick by index") {
  auto cfg = start(R"(
fun main(x: bool): bool
  let a = new unique [var bool](1) in
  let b = new unique [var bool](1) in
  finish {
    async { a[0] = true }
    async { b[0] = true }
  };
  true
)");
  FixedScheduler right_first(std::vector<std::size_t>(32, 1));
  auto r = run(cfg, right_first);
  REQUIRE(r.outcome == Outcome::Value);
  std::vector<std::string> paths;
  for (const auto& t : r.trace) paths.push_back(format_path(t.path));
  CHECK(std::find(paths.begin(), paths.end(), "R") < std::find(paths.begin(), paths.end(), "L"));
}

TEST_CASE("heap ids only grow") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SeededScheduler s(seed);
    RunOptions opts;
    opts.observer = [](const Config& before, const Config& after, const TraceEntry&) {
      CHECK(after.heap.size() >= before.heap.size());
      for (std::size_t i = 0; i < before.heap.size(); ++i) CHECK(after.heap[i]->tag == before.heap[i]->tag);
      return true;
    };
    run(start_file("nested.arrc"), s, opts);
  }
}

TEST_CASE("well-formed configurations") {
  auto cfg = start_file("nested.arrc");
  CHECK(wf_config(cfg).ok);
  SeededScheduler s(0);
  RunOptions opts;
  opts.observer = [](const Config&, const Config& after, const TraceEntry& t) {
    auto report = wf_config(after);
    INFO(format(t), " ", report.failure);
    CHECK(report.ok);
    return true;
  };
  auto r = run(cfg, s, opts);
  CHECK(r.outcome == Outcome::Value);

  auto err = run_seed(start_file("oob.arrc"), 0);
  CHECK(wf_config(err.final).ok);
}

TEST_CASE("wf reconstructs environments") {
  auto cfg = step_until(start_file("ok.arrc"), "DYN-SPAWN");
  auto report = wf_config(cfg);
  REQUIRE(report.ok);
  CHECK(report.delta.size() == 1);
  CHECK(report.delta.at(0) == arrcap::lang::parse_type("unique [var bool]"));
  REQUIRE(report.gammas.size() == 3);
  CHECK(report.gammas[0].entries().size() == 1);
  CHECK(report.gammas[1].entries().size() == 1);
  CHECK(report.gammas[2].markers() == 1);
}

TEST_CASE("wf rejects mutated configurations") {
  auto cfg = step_until(start_file("nested.arrc"), "DYN-ARRAY-ASSIGN");
  REQUIRE(wf_config(cfg).ok);

  SUBCASE("heap tag disagrees with stack type") {
    auto bad = cfg;
    auto arr = std::make_shared<HeapArray>(*bad.heap[1]);
    arr->tag = arrcap::lang::parse_type("unique [var unique [var bool]]");
    bad.heap[1] = arr;
    auto report = wf_config(bad);
    CHECK_FALSE(report.ok);
    CHECK_FALSE(report.failure.empty());
  }
  SUBCASE("bool stored where an array is expected") {
    auto bad = cfg;
    auto arr = std::make_shared<HeapArray>(*bad.heap[0]);
    arr->slots[1] = T;
    bad.heap[0] = arr;
    CHECK(wf_config(bad).failure.find("WF-H-ADD") != std::string::npos);
  }
  SUBCASE("reference out of range") {
    auto bad = cfg;
    auto leaf = std::make_shared<Activity>(*bad.root);
    leaf->stack[1].value = Value::ref(0, IndexMap{5});
    bad.root = leaf;
    CHECK_FALSE(wf_config(bad).ok);
  }
  SUBCASE("marker without frame") {
    auto bad = cfg;
    auto leaf = std::make_shared<Activity>(*bad.root);
    leaf->stack.push_back({"grid", Value::null(), arrcap::lang::parse_type("buried [var unique [var bool]]"), true});
    bad.root = leaf;
    CHECK_FALSE(wf_config(bad).ok);
  }
}

TEST_CASE("error configuration is well formed") {
  Config cfg;
  cfg.program = checked("fun main(x: bool): bool true");
  cfg.root = std::make_shared<Activity>();
  CHECK(wf_config(cfg).ok);
  CHECK(is_terminal(cfg));
}
