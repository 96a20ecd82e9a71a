#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "arrcap/examples.hpp"

using namespace arrcap;
using namespace arrcap::examples;

namespace {

using Vec = std::vector<std::int64_t>;

Capability load(Store& s, const Vec& v) {
  auto cap = s.new_array(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) s.set(cap, i, v[i]);
  return cap;
}

Vec sorted(Vec v) {
  std::sort(v.begin(), v.end());
  return v;
}

/// Plain 5-point wraparound stencil over a row-major grid.
Vec stencil_oracle(const Vec& g, std::size_t rows, std::size_t cols) {
  Vec out(g.size());
  for (std::size_t x = 0; x < rows; ++x) {
    for (std::size_t y = 0; y < cols; ++y) {
      const std::size_t up = (x + rows - 1) % rows, down = (x + 1) % rows;
      const std::size_t left = (y + cols - 1) % cols, right = (y + 1) % cols;
      out[x * cols + y] = g[x * cols + y] + g[up * cols + y] + g[down * cols + y] + g[x * cols + left] +
                          g[x * cols + right];
    }
  }
  return out;
}

/// Phase p of the tree reduction on plain indices: strided pairs (j, j + n/2^p)
/// or adjacent pairs (j*2^p, j*2^p + 2^(p-1)).
std::vector<Vec> reduce_oracle(Vec v, bool strided) {
  std::vector<Vec> phases;
  const std::size_t n = v.size();
  for (std::size_t half = n / 2, width = 1; half >= 1; half /= 2, width *= 2) {
    for (std::size_t j = 0; j < half; ++j) {
      if (strided) {
        v[j] += v[j + half];
      } else {
        v[j * 2 * width] += v[j * 2 * width + width];
      }
    }
    phases.push_back(v);
  }
  return phases;
}

Vec random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::int64_t> d(-20, 20);
  Vec v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("task pool join groups") {
  for (auto mode : {TaskPool::Mode::Simulated, TaskPool::Mode::Threads}) {
    TaskPool pool(mode, 1);
    std::atomic<int> done{0};
    pool.finish({[&] { ++done; }, [&] { pool.finish({[&] { ++done; }, [&] { ++done; }}); }, [&] { ++done; }});
    CHECK(done == 4);
    CHECK(pool.tasks_run() == 5);
    CHECK(pool.groups_completed() == 2);
  }
}

TEST_CASE("task pool rethrows after the group completes") {
  TaskPool pool;
  int ran = 0;
  CHECK_THROWS_AS(pool.finish({[&] { ++ran; }, [] { throw std::runtime_error("boom"); }, [&] { ++ran; }}),
                  std::runtime_error);
  CHECK(ran == 2);
}

TEST_CASE("simulated schedules depend on the seed") {
  auto order = [](std::uint64_t seed) {
    TaskPool pool(TaskPool::Mode::Simulated, seed);
    std::vector<int> seen;
    std::vector<TaskPool::Task> tasks;
    for (int i = 0; i < 8; ++i) tasks.push_back([&seen, i] { seen.push_back(i); });
    pool.finish(tasks);
    return seen;
  };
  CHECK(order(1) == order(1));
  CHECK(order(1) != order(2));
}

TEST_CASE("quicksort small cases") {
  Store s;
  TaskPool pool;
  auto a = load(s, {3, 1, 2});
  quicksort(s, pool, a);
  CHECK(s.logical(a) == Vec{1, 2, 3});
  auto b = load(s, {1, 2, 3, 4});
  quicksort(s, pool, b);
  CHECK(s.logical(b) == Vec{1, 2, 3, 4});
  auto e = load(s, {});
  quicksort(s, pool, e);
  CHECK(s.logical(e).empty());
}

TEST_CASE("mergesort small cases") {
  Store s;
  TaskPool pool;
  auto a = load(s, {2, 1});
  mergesort(s, pool, a);
  CHECK(s.logical(a) == Vec{1, 2});
  auto e = load(s, {});
  mergesort(s, pool, e);
  CHECK(s.logical(e).empty());
  auto one = load(s, {7});
  mergesort(s, pool, one);
  CHECK(s.logical(one) == Vec{7});
}

TEST_CASE("sorts agree with the sequential oracle on random arrays") {
  std::mt19937_64 rng(2024);
  std::size_t checks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Store s;
    s.set_debug_checks(true);
    const auto input = random_vec(rng, rng() % 65);
    TaskPool pool(TaskPool::Mode::Simulated, trial);
    auto q = load(s, input);
    quicksort(s, pool, q);
    auto m = load(s, input);
    mergesort(s, pool, m);
    REQUIRE(s.logical(q) == sorted(input));
    REQUIRE(s.logical(m) == sorted(input));
    // The original capability is usable again after the borrow.
    CHECK(s.live_count(q.array_id()) == 1);
    if (q.length() > 0) s.set(q, 0, s.get(q, 0));
    checks += s.debug_check_count();
  }
  CHECK(checks > 0);
}

TEST_CASE("sorts under real threads") {
  std::mt19937_64 rng(5);
  Store s;
  s.set_debug_checks(true);
  for (int trial = 0; trial < 50; ++trial) {
    const auto input = random_vec(rng, 64);
    TaskPool pool(TaskPool::Mode::Threads);
    auto q = load(s, input);
    quicksort(s, pool, q);
    auto m = load(s, input);
    mergesort(s, pool, m);
    CHECK(s.logical(q) == sorted(input));
    CHECK(s.logical(m) == sorted(input));
  }
}

TEST_CASE("stencil on a 1x1 matrix wraps onto itself") {
  Store s;
  TaskPool pool;
  auto from = load(s, {3});
  auto to = load(s, {0});
  stencil_apply(s, pool, from, to, 1, 1);
  CHECK(s.logical(to) == Vec{15});
}

TEST_CASE("stencil on 2x2 ones") {
  Store s;
  TaskPool pool;
  auto from = load(s, {1, 1, 1, 1});
  auto to = load(s, {0, 0, 0, 0});
  stencil_apply(s, pool, from, to, 2, 2);
  CHECK(s.logical(to) == stencil_oracle({1, 1, 1, 1}, 2, 2));
  CHECK(s.logical(to) == Vec{5, 5, 5, 5});
}

TEST_CASE("stencil with flipped roles matches two oracle applications") {
  std::mt19937_64 rng(8);
  for (std::size_t rows = 1; rows <= 8; ++rows) {
    for (std::size_t cols = 1; cols <= 8; ++cols) {
      Store s;
      s.set_debug_checks(true);
      const auto g = random_vec(rng, rows * cols);
      TaskPool pool(TaskPool::Mode::Simulated, rows * 10 + cols);
      auto a = load(s, g);
      auto b = load(s, Vec(g.size(), 0));
      auto result = stencil_run(s, pool, a, b, rows, cols, 2);
      CHECK(result.array_id() == a.array_id());
      CHECK(s.logical(result) == stencil_oracle(stencil_oracle(g, rows, cols), rows, cols));
    }
  }
}

TEST_CASE("stencil rejects mismatched buffers") {
  Store s;
  TaskPool pool;
  auto a = load(s, {1, 2, 3, 4});
  auto b = load(s, {0, 0, 0});
  try {
    stencil_apply(s, pool, a, b, 2, 2);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DimensionMismatch);
  }
}

TEST_CASE("stencil under real threads") {
  std::mt19937_64 rng(9);
  Store s;
  const auto g = random_vec(rng, 64);
  TaskPool pool(TaskPool::Mode::Threads);
  auto a = load(s, g);
  auto b = load(s, Vec(64, 0));
  CHECK(s.logical(stencil_run(s, pool, a, b, 8, 8, 2)) == stencil_oracle(stencil_oracle(g, 8, 8), 8, 8));
}

TEST_CASE("reduction of ones") {
  for (bool strided : {true, false}) {
    Store s;
    TaskPool pool;
    auto a = load(s, Vec(16, 1));
    CHECK(parallel_reduce(s, pool, a, strided) == 16);
  }
}

TEST_CASE("reduction follows the phase-by-phase oracle") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    for (bool strided : {true, false}) {
      const auto input = random_vec(rng, 16);
      Store s;
      s.set_debug_checks(true);
      TaskPool pool(trial % 2 ? TaskPool::Mode::Threads : TaskPool::Mode::Simulated, trial);
      auto a = load(s, input);
      std::vector<Vec> phases;
      const auto sum = parallel_reduce(s, pool, a, strided, [&](const Vec& v) { phases.push_back(v); });
      CHECK(phases == reduce_oracle(input, strided));
      CHECK(sum == std::accumulate(input.begin(), input.end(), std::int64_t{0}));
      CHECK(s.live_count(a.array_id()) == 1);
    }
  }
}

TEST_CASE("reduction generalizes to other powers of two") {
  for (std::size_t n : {1u, 2u, 4u, 32u, 64u}) {
    Store s;
    TaskPool pool;
    Vec input(n);
    std::iota(input.begin(), input.end(), 1);
    auto a = load(s, input);
    CHECK(parallel_reduce(s, pool, a, n % 3 == 0) == static_cast<std::int64_t>(n * (n + 1) / 2));
  }
  Store s;
  TaskPool pool;
  CHECK_THROWS_AS(parallel_reduce(s, pool, load(s, Vec(6, 1)), true), Error);
}

TEST_CASE("rotation of a 2x3 matrix") {
  kernel::ArrayStore<char> s;
  auto m = s.new_array(6, ' ');
  for (std::size_t i = 0; i < 6; ++i) s.set(m, i, static_cast<char>('A' + i));

  auto [scope, view] = s.borrow(m, true);
  auto columns = s.split(view, 3, true);
  REQUIRE(columns.size() == 3);
  CHECK(s.logical(columns[0]) == std::vector<char>{'A', 'D'});
  CHECK(s.logical(columns[1]) == std::vector<char>{'B', 'E'});
  CHECK(s.logical(columns[2]) == std::vector<char>{'C', 'F'});
  auto merged = s.merge(columns, true);
  CHECK(s.logical(merged) == std::vector<char>{'A', 'D', 'B', 'E', 'C', 'F'});
  s.end_borrow(std::move(scope));

  auto logical_only = rotate_matrix(s, m, 2, 3, false);
  CHECK(s.logical(logical_only) == std::vector<char>{'A', 'D', 'B', 'E', 'C', 'F'});
  CHECK(s.physical(m.array_id()) == std::vector<char>{'A', 'B', 'C', 'D', 'E', 'F'});
  CHECK_FALSE(logical_only.sigma().is_identity());

  auto aligned = s.align(logical_only);
  CHECK(s.physical(m.array_id()) == std::vector<char>{'A', 'D', 'B', 'E', 'C', 'F'});
  CHECK(aligned.sigma().is_identity());
}

TEST_CASE("physical rotation matches the column-major oracle") {
  std::mt19937_64 rng(4);
  for (std::size_t rows = 1; rows <= 6; ++rows) {
    for (std::size_t cols = 1; cols <= 6; ++cols) {
      Store s;
      s.set_debug_checks(true);
      const auto input = random_vec(rng, rows * cols);
      auto m = load(s, input);
      auto r = rotate_matrix(s, m, rows, cols, true);
      Vec want;
      for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t x = 0; x < rows; ++x) want.push_back(input[x * cols + c]);
      }
      CHECK(s.physical(r.array_id()) == want);
      CHECK(s.logical(r) == want);
      CHECK(r.sigma().is_identity());
    }
  }
}

TEST_CASE("physical rotation needs the sole capability") {
  Store s;
  auto m = load(s, Vec(6, 0));
  auto halves = s.split(m, 2, false);
  try {
    rotate_matrix(s, halves[0], 1, 3, true);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::HasSiblings);
  }
}

TEST_CASE("named examples pass") {
  for (const auto& name : example_names()) {
    for (bool parallel : {false, true}) {
      CAPTURE(name);
      auto r = run_example(name, 0, 3, parallel);
      CHECK_MESSAGE(r.pass, r.detail);
    }
  }
  CHECK_THROWS_AS(run_example("nope", 0, 0, false), Error);
}
