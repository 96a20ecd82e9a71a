#include <doctest.h>

#include "arrcap/parser.hpp"
#include "arrcap/typecheck.hpp"
#include "support.hpp"

using namespace arrcap::lang;
using namespace arrcap::typecheck;
using test_support::checked;
using test_support::rejection;

namespace {

Type T(std::string_view text) { return parse_type(text); }

ExprPtr expr_of(std::string_view body_src) {
  auto r = parse("fun main(x: bool): bool " + std::string(body_src));
  REQUIRE(r.program);
  return r.program->find("main")->body;
}

std::string rule_of(const TypeEnv& gamma, std::string_view src) {
  const Program empty;
  try {
    Checker(empty).infer({}, gamma, gamma.markers(), expr_of(src));
  } catch (const TypeError& e) {
    return e.rule();
  }
  return "";
}

}  // namespace

TEST_CASE("readOnly") {
  CHECK(read_only(Type::boolean()));
  CHECK(read_only(T("unique [val unique [val bool]]")));
  CHECK_FALSE(read_only(T("unique [val unique [var bool]]")));
  CHECK_FALSE(read_only(T("unique [var bool]")));
  CHECK(read_only(T("borrowed [val bool]")));
}

TEST_CASE("readOnlyElems") {
  CHECK(read_only_elems(T("unique [var bool]")));
  CHECK(read_only_elems(T("unique [var unique [val bool]]")));
  CHECK_FALSE(read_only_elems(T("unique [val unique [var bool]]")));
}

TEST_CASE("R") {
  CHECK(R(T("unique [var unique [var bool]]")) == T("unique [val unique [val bool]]"));
  CHECK(R(T("borrowed [var buried [val bool]]")) == T("borrowed [val buried [val bool]]"));
  CHECK(R(Type::boolean()) == Type::boolean());
}

TEST_CASE("array, borrowed and buried predicates") {
  CHECK(T("borrowed [var bool]").is_array());
  CHECK_FALSE(Type::boolean().is_array());
  CHECK(is_borrowed(T("borrowed [var bool]")));
  CHECK_FALSE(is_borrowed(T("unique [var borrowed [var bool]]")));
  CHECK(is_buried(T("buried [val bool]")));
  CHECK(is_read(T("unique [val unique [var bool]]")));
  CHECK_FALSE(is_read(T("unique [var unique [val bool]]")));
}

TEST_CASE("wf judgments") {
  CHECK(wf_type(Type::boolean()));
  CHECK(wf_type(T("unique [var borrowed [val bool]]")));

  TypeEnv ok;
  ok.push("x", T("unique [var bool]"));
  ok.push_marked("x", T("buried [var bool]"));
  ok.push("y", T("borrowed [var bool]"));
  CHECK(wf_env(ok));

  TypeEnv dup;
  dup.push("x", Type::boolean());
  dup.push("x", Type::boolean());
  CHECK_FALSE(wf_env(dup));

  TypeEnv orphan;
  orphan.push_marked("x", T("buried [var bool]"));
  CHECK_FALSE(wf_env(orphan));

  CHECK(wf_runtime_env({}));
  CHECK(wf_runtime_env({{0, T("unique [var bool]")}, {3, T("unique [val bool]")}}));
  CHECK_FALSE(wf_runtime_env({{0, Type::boolean()}}));
}

TEST_CASE("visible environment per borrowing depth") {
  TypeEnv g;
  g.push("a", T("unique [var bool]"));
  g.push_marked("a", T("buried [var bool]"));
  g.push("b", T("borrowed [var bool]"));
  g.push_marked("b", T("buried [var bool]"));
  g.push("c", T("borrowed [var bool]"));
  CHECK(g.markers() == 2);
  CHECK(g.visible(0).entries().size() == 1);
  CHECK(g.visible(1).entries().size() == 3);
  CHECK(g.visible(2).entries().size() == 5);
  CHECK(g.lookup("b")->marked);
}

TEST_CASE("lookup of a bool element is non-destructive") {
  TypeEnv g;
  g.push("x", T("unique [var bool]"));
  const Program empty;
  auto e = Checker(empty).infer({}, g, 0, expr_of("x[0]"));
  CHECK(e->ty == Type::boolean());
  CHECK(e->xty == T("unique [var bool]"));
  CHECK(read_only_elems(e->xty));
}

TEST_CASE("lookup of a mutable element is destructive") {
  TypeEnv g;
  g.push("x", T("unique [var unique [var bool]]"));
  const Program empty;
  auto e = Checker(empty).infer({}, g, 0, expr_of("x[0]"));
  CHECK(e->ty == T("unique [var bool]"));
  CHECK_FALSE(read_only_elems(e->xty));
}

TEST_CASE("read-only element reached through a borrowed array stays borrowed") {
  TypeEnv g;
  g.push("x", T("borrowed [val unique [val bool]]"));
  const Program empty;
  auto e = Checker(empty).infer({}, g, 0, expr_of("x[0]"));
  CHECK(e->ty == T("borrowed [val bool]"));
}

TEST_CASE("variable rules") {
  TypeEnv g;
  g.push("x", T("unique [var bool]"));
  g.push_marked("x", T("buried [var bool]"));
  CHECK(rule_of(g, "x") == "E-VAR");
  CHECK(rule_of(g, "y") == "E-VAR");
  CHECK(rule_of(TypeEnv{}, "null") == "E-NULL");
  CHECK(rule_of(TypeEnv{}, "null : bool") == "E-NULL");
  CHECK(rule_of(TypeEnv{}, "null : unique [var bool]").empty());
}

TEST_CASE("null takes any array type") {
  const Program empty;
  for (const char* t : {"unique [var bool]", "borrowed [val unique [var bool]]"}) {
    auto e = Checker(empty).infer({}, TypeEnv{}, 0, expr_of(std::string("null : ") + t));
    CHECK(e->ty == T(t));
  }
}

TEST_CASE("accepted programs") {
  checked(R"(
fun main(x: bool): unique [var bool]
  let a = new unique [var bool](4) in
  let l{0->0, 1->1} ++ r{0->2, 1->3} = a in
  let w = l[1] = true in
  l ++ r
)");
  checked(R"(
fun swap(p: unique [var unique [var bool]]): bool
  let first = p[0] in
  let second = p[1] in
  let u = p[0] = second in
  p[1] = first

fun main(x: bool): bool
  let grid = new unique [var unique [var bool]](2) in
  swap(grid)
)");
  checked(R"(
fun main(x: unique [var bool]): bool
  borrow x as read y in
  borrow y as z in
  let l{0->0} ++ r{0->1} = z in
  finish {
    async { l[0] }
    async { r[0] }
  };
  true
)");
}

TEST_CASE("elaboration is idempotent") {
  auto p = checked(arrcap::read_file(test_support::program_path("ok.arrc")));
  auto again = check_program(*p);
  REQUIRE(again.program);
  CHECK(pretty(*again.program) == pretty(*p));
  const auto& f1 = p->find("main")->body;
  const auto& f2 = again.program->find("main")->body;
  CHECK(f1->ty == f2->ty);
  CHECK(f1->b->xty == f2->b->xty);
}

TEST_CASE("negative suite names the violated rule") {
  CHECK(rejection(arrcap::read_file(test_support::program_path("rejected/borrowed_store.arrc"))) ==
        "E-ARRAY-ASSIGN");
  CHECK(rejection(arrcap::read_file(test_support::program_path("rejected/shared_async.arrc"))) ==
        "E-FINISH-ASYNC");
  CHECK(rejection(arrcap::read_file(test_support::program_path("rejected/overlapping_split.arrc"))) ==
        "E-ARRAY-SPLIT");
  CHECK(rejection(arrcap::read_file(test_support::program_path("rejected/buried_read.arrc"))) == "E-VAR");
  CHECK(rejection(arrcap::read_file(test_support::program_path("rejected/val_extract.arrc"))) ==
        "E-ARRAY-LOOKUP");
}

TEST_CASE("more rejections") {
  CHECK(rejection("fun main(x: bool): bool let a = new unique [val bool](2) in a[0] = true") == "E-ARRAY-ASSIGN");
  CHECK(rejection("fun main(x: bool): bool let a = new borrowed [var bool](2) in true") == "E-ARRAY-NEW");
  CHECK(rejection("fun main(x: bool): bool f(x)") == "E-CALL");
  CHECK(rejection("fun f(p: unique [var bool]): bool true fun main(x: bool): bool f(x)") == "E-CALL");
  CHECK(rejection("fun main(x: bool): bool let a = new unique [var bool](2) in a ++ x") == "E-ARRAY-MERGE");
  CHECK(rejection("fun main(x: bool): bool x[0]") == "E-ARRAY-LOOKUP");
  CHECK(rejection("fun main(x: bool): bool borrow x as y in true") == "E-BORROW");
  CHECK(rejection("fun main(x: bool): unique [var bool] true") == "WF-FUNCTION");
  CHECK(rejection("fun f(x: bool): bool true") == "WF-PROGRAM");
  CHECK(rejection("fun main(x: bool): bool true fun main(y: bool): bool true") == "WF-PROGRAM");
  CHECK(rejection("fun main(x: bool): bool let y{0->0} ++ y{0->1} = x in true") != "");
}

TEST_CASE("borrowed alias cannot outlive its scope") {
  // The borrow evaluates to true, so the alias never escapes as a value.
  CHECK(rejection(R"(
fun main(x: unique [var bool]): borrowed [var bool]
  borrow x as y in y
)") == "WF-FUNCTION");
  // Read borrow weakens every level.
  CHECK(rejection(R"(
fun main(x: unique [var unique [var bool]]): bool
  borrow x as read y in y[0] = null
)") == "E-ARRAY-ASSIGN");
}

TEST_CASE("diagnostic format") {
  Diagnostic d{Diagnostic::Severity::Error, {3, 7}, "E-VAR", "variable 'a' is buried"};
  CHECK(format(d, "p.arrc") == "p.arrc:3:7: E-VAR: variable 'a' is buried");
}
