#pragma once

// Parallel array algorithms written against the capability kernel.

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "arrcap/kernel.hpp"

namespace arrcap::examples {

using kernel::Capability;
using Store = kernel::ArrayStore<std::int64_t>;

/// finish { async ... } over either a seeded sequential schedule or real threads.
class TaskPool {
 public:
  enum class Mode { Simulated, Threads };
  using Task = std::function<void()>;

  explicit TaskPool(Mode mode = Mode::Simulated, std::uint64_t seed = 0);

  /// Runs one join group and returns once every task in it has completed.
  /// The first exception thrown by a task is rethrown afterwards.
  void finish(std::vector<Task> tasks);

  Mode mode() const noexcept { return mode_; }
  std::size_t tasks_run() const noexcept { return tasks_run_; }
  std::size_t groups_completed() const noexcept { return groups_; }

 private:
  void run_one(const Task& task, std::exception_ptr& error);

  Mode mode_;
  std::mt19937_64 rng_;
  std::mutex rng_mutex_;
  std::atomic<std::size_t> tasks_run_{0};
  std::atomic<std::size_t> groups_{0};
  std::atomic<std::size_t> threads_{0};
};

/// In-place sort. Lomuto partition around the first element, then the two
/// sides are sorted as parallel tasks inside a borrow of `cap`.
void quicksort(Store& store, TaskPool& pool, const Capability& cap);

/// In-place sort. Halves are sorted under a nested borrow; the merge writes
/// through the parent capability once that borrow has ended.
void mergesort(Store& store, TaskPool& pool, const Capability& cap);

/// One 5-point stencil application with toroidal wraparound:
/// to[x][y] = from[x][y] + from[x±1][y] + from[x][y±1]. Row-major.
/// Throws Errc::DimensionMismatch.
void stencil_apply(Store& store, TaskPool& pool, const Capability& from, const Capability& to, std::size_t rows,
                   std::size_t cols);

/// `steps` applications alternating between the two buffers; returns the
/// capability holding the last result.
Capability stencil_run(Store& store, TaskPool& pool, const Capability& a, const Capability& b, std::size_t rows,
                       std::size_t cols, std::size_t steps);

/// Tree reduction in log2(n) phases of n/2, n/4, ..., 1 tasks. The sum ends
/// up at logical index 0. `on_phase` sees the logical contents after each phase.
std::int64_t parallel_reduce(Store& store, TaskPool& pool, const Capability& cap, bool strided,
                             const std::function<void(const std::vector<std::int64_t>&)>& on_phase = {});

/// Column-major view of a row-major matrix; with `physical` the storage is
/// permuted to match and the result has the identity translation.
template <class T>
Capability rotate_matrix(kernel::ArrayStore<T>& store, const Capability& cap, std::size_t rows, std::size_t cols,
                         bool physical) {
  if (cap.length() != rows * cols) throw Error(Errc::DimensionMismatch, "matrix length is not rows*cols");
  auto columns = store.split(cap, cols, true);
  auto merged = store.merge(columns, true);
  return physical ? store.align(merged) : merged;
}

struct ExampleReport {
  bool pass = false;
  std::string detail;
};

/// Runs one named example on random input of size `n` (0 picks a default)
/// and compares it against a sequential recomputation.
ExampleReport run_example(const std::string& name, std::size_t n, std::uint64_t seed, bool parallel);

const std::vector<std::string>& example_names();

}  // namespace arrcap::examples
