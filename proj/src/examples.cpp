#include "arrcap/examples.hpp"

#include <algorithm>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>

namespace arrcap::examples {

TaskPool::TaskPool(Mode mode, std::uint64_t seed) : mode_(mode), rng_(seed) {}

void TaskPool::run_one(const Task& task, std::exception_ptr& error) {
  try {
    task();
  } catch (...) {
    if (!error) error = std::current_exception();
  }
  ++tasks_run_;
}

void TaskPool::finish(std::vector<Task> tasks) {
  std::exception_ptr error;
  if (mode_ == Mode::Simulated) {
    {
      std::lock_guard lock(rng_mutex_);
      std::shuffle(tasks.begin(), tasks.end(), rng_);
    }
    for (const auto& t : tasks) run_one(t, error);
  } else {
    const std::size_t limit = 4 * std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::future<std::exception_ptr>> spawned;
    std::vector<const Task*> inline_tasks;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (i + 1 < tasks.size() && threads_.fetch_add(1) < limit) {
        spawned.push_back(std::async(std::launch::async, [this, &t = tasks[i]] {
          std::exception_ptr e;
          run_one(t, e);
          --threads_;
          return e;
        }));
      } else {
        if (i + 1 < tasks.size()) --threads_;
        inline_tasks.push_back(&tasks[i]);
      }
    }
    for (const auto* t : inline_tasks) run_one(*t, error);
    for (auto& f : spawned) {
      auto e = f.get();
      if (e && !error) error = e;
    }
  }
  ++groups_;
  if (error) std::rethrow_exception(error);
}

namespace {

void quicksort_rec(Store& s, TaskPool& pool, const Capability& a) {
  const std::size_t n = a.length();
  if (n <= 1) return;
  const auto pivot = s.get(a, 0);
  std::size_t i = 0;
  for (std::size_t j = 1; j < n; ++j) {
    if (s.get(a, j) < pivot) {
      ++i;
      const auto t = s.get(a, i);
      s.set(a, i, s.get(a, j));
      s.set(a, j, t);
    }
  }
  s.set(a, 0, s.get(a, i));
  s.set(a, i, pivot);
  const std::vector<IndexMap> parts{sigma::split_at(n, i).first, IndexMap{i}, sigma::split_at(n, i + 1).second};
  auto pieces = s.split_with(a, parts);
  pool.finish({[&s, &pool, l = pieces[0]] { quicksort_rec(s, pool, l); },
               [&s, &pool, r = pieces[2]] { quicksort_rec(s, pool, r); }});
}

void mergesort_rec(Store& s, TaskPool& pool, const Capability& a) {
  const std::size_t n = a.length();
  if (n <= 1) return;
  {
    auto [scope, b] = s.borrow(a, false);
    auto halves = s.split(b, 2, false);
    pool.finish({[&s, &pool, l = halves[0]] { mergesort_rec(s, pool, l); },
                 [&s, &pool, r = halves[1]] { mergesort_rec(s, pool, r); }});
    s.end_borrow(std::move(scope));
  }
  const auto values = s.logical(a);
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>((n + 1) / 2);
  std::vector<std::int64_t> merged;
  merged.reserve(n);
  std::merge(values.begin(), mid, mid, values.end(), std::back_inserter(merged));
  for (std::size_t i = 0; i < n; ++i) s.set(a, i, merged[i]);
}

std::size_t wrap(std::size_t i, std::ptrdiff_t d, std::size_t n) {
  return static_cast<std::size_t>((static_cast<std::ptrdiff_t>(i) + d + static_cast<std::ptrdiff_t>(n)) %
                                  static_cast<std::ptrdiff_t>(n));
}

struct Grid {
  std::size_t rows, cols;
};

void stencil_rec(Store& s, TaskPool& pool, const Capability& from, const Capability& to, Grid g, std::size_t row0) {
  const std::size_t rows = to.length() / g.cols;
  if (rows == 1) {
    const std::size_t x = row0;
    for (std::size_t y = 0; y < g.cols; ++y) {
      auto at = [&](std::size_t r, std::size_t c) { return s.get(from, r * g.cols + c); };
      s.set(to, y,
            at(x, y) + at(wrap(x, -1, g.rows), y) + at(wrap(x, 1, g.rows), y) + at(x, wrap(y, -1, g.cols)) +
                at(x, wrap(y, 1, g.cols)));
    }
    return;
  }
  const std::size_t top = (rows + 1) / 2;
  auto [upper, lower] = sigma::split_at(to.length(), top * g.cols);
  const std::vector<IndexMap> parts{upper, lower};
  auto sub = s.split_with(to, parts);
  pool.finish({[&s, &pool, from, u = sub[0], g, row0] { stencil_rec(s, pool, from, u, g, row0); },
               [&s, &pool, from, l = sub[1], g, row0, top] { stencil_rec(s, pool, from, l, g, row0 + top); }});
}

}  // namespace

void quicksort(Store& store, TaskPool& pool, const Capability& cap) {
  auto [scope, alias] = store.borrow(cap, false);
  quicksort_rec(store, pool, alias);
  store.end_borrow(std::move(scope));
}

void mergesort(Store& store, TaskPool& pool, const Capability& cap) {
  auto [scope, alias] = store.borrow(cap, false);
  mergesort_rec(store, pool, alias);
  store.end_borrow(std::move(scope));
}

void stencil_apply(Store& store, TaskPool& pool, const Capability& from, const Capability& to, std::size_t rows,
                   std::size_t cols) {
  if (rows == 0 || cols == 0 || from.length() != rows * cols || to.length() != rows * cols) {
    throw Error(Errc::DimensionMismatch, "stencil buffers must both be rows*cols");
  }
  auto [read_scope, f] = store.borrow(from, true);
  auto [write_scope, t] = store.borrow(to, false);
  stencil_rec(store, pool, f, t, {rows, cols}, 0);
  store.end_borrow(std::move(write_scope));
  store.end_borrow(std::move(read_scope));
}

Capability stencil_run(Store& store, TaskPool& pool, const Capability& a, const Capability& b, std::size_t rows,
                       std::size_t cols, std::size_t steps) {
  Capability from = a;
  Capability to = b;
  for (std::size_t i = 0; i < steps; ++i) {
    stencil_apply(store, pool, from, to, rows, cols);
    std::swap(from, to);
  }
  return from;
}

std::int64_t parallel_reduce(Store& store, TaskPool& pool, const Capability& cap, bool strided,
                             const std::function<void(const std::vector<std::int64_t>&)>& on_phase) {
  const std::size_t n = cap.length();
  if (n == 0 || (n & (n - 1)) != 0) throw Error(Errc::DimensionMismatch, "reduction needs a power-of-two length");
  for (std::size_t tasks = n / 2, width = 1; tasks >= 1; tasks /= 2, width *= 2) {
    auto [scope, b] = store.borrow(cap, false);
    auto parts = store.split(b, tasks, strided);
    std::vector<TaskPool::Task> group;
    for (const auto& a : parts) {
      group.push_back([&store, a, width, strided] {
        const auto focus = store.split(a, width, !strided)[0];
        std::int64_t sum = 0;
        for (std::size_t i = 0; i < focus.length(); ++i) sum += store.get(focus, i);
        store.set(focus, 0, sum);
      });
    }
    pool.finish(std::move(group));
    store.end_borrow(std::move(scope));
    if (on_phase) on_phase(store.logical(cap));
  }
  return store.get(cap, 0);
}

const std::vector<std::string>& example_names() {
  static const std::vector<std::string> names{"quicksort", "mergesort", "stencil", "reduce", "rotate"};
  return names;
}

namespace {

std::string show(const std::vector<std::int64_t>& v) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
  out << ']';
  return out.str();
}

ExampleReport compare(const std::vector<std::int64_t>& got, const std::vector<std::int64_t>& want) {
  if (got == want) return {true, show(got)};
  return {false, "got " + show(got) + ", expected " + show(want)};
}

}  // namespace

ExampleReport run_example(const std::string& name, std::size_t n, std::uint64_t seed, bool parallel) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> value(-50, 50);
  TaskPool pool(parallel ? TaskPool::Mode::Threads : TaskPool::Mode::Simulated, seed);
  Store store;
  store.set_debug_checks(true);
  auto fill = [&](const Capability& c) {
    std::vector<std::int64_t> v;
    for (std::size_t i = 0; i < c.length(); ++i) {
      v.push_back(value(rng));
      store.set(c, i, v.back());
    }
    return v;
  };

  if (name == "quicksort" || name == "mergesort") {
    auto cap = store.new_array(n ? n : 32, 0);
    auto want = fill(cap);
    std::sort(want.begin(), want.end());
    (name == "quicksort" ? quicksort : mergesort)(store, pool, cap);
    return compare(store.logical(cap), want);
  }
  if (name == "stencil") {
    const std::size_t side = n ? n : 8;
    auto a = store.new_array(side * side, 0);
    auto b = store.new_array(side * side, 0);
    auto grid = fill(a);
    for (int phase = 0; phase < 2; ++phase) {
      std::vector<std::int64_t> next(grid.size());
      for (std::size_t x = 0; x < side; ++x) {
        for (std::size_t y = 0; y < side; ++y) {
          auto at = [&](std::size_t r, std::size_t c) { return grid[(r % side) * side + c % side]; };
          next[x * side + y] = at(x, y) + at(x + side - 1, y) + at(x + 1, y) + at(x, y + side - 1) + at(x, y + 1);
        }
      }
      grid = std::move(next);
    }
    auto result = stencil_run(store, pool, a, b, side, side, 2);
    return compare(store.logical(result), grid);
  }
  if (name == "reduce") {
    auto cap = store.new_array(n ? n : 16, 0);
    const auto input = fill(cap);
    const auto want = std::accumulate(input.begin(), input.end(), std::int64_t{0});
    const bool strided = seed % 2 == 0;
    const auto got = parallel_reduce(store, pool, cap, strided);
    ExampleReport r = compare({got}, {want});
    r.detail = std::string(strided ? "strided " : "adjacent ") + r.detail;
    return r;
  }
  if (name == "rotate") {
    const std::size_t rows = n ? n : 2;
    const std::size_t cols = rows + 1;
    auto cap = store.new_array(rows * cols, 0);
    auto input = fill(cap);
    std::vector<std::int64_t> want;
    for (std::size_t c = 0; c < cols; ++c) {
      for (std::size_t r = 0; r < rows; ++r) want.push_back(input[r * cols + c]);
    }
    auto rotated = rotate_matrix(store, cap, rows, cols, true);
    auto r = compare(store.physical(rotated.array_id()), want);
    if (r.pass && !rotated.sigma().is_identity()) r = {false, "translation is not the identity"};
    return r;
  }
  throw Error(Errc::ParseError, "unknown example '" + name + "'");
}

}  // namespace arrcap::examples
