#pragma once

// Small-step semantics over configurations ⟨H, A⟩.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "arrcap/ast.hpp"
#include "arrcap/typecheck.hpp"

namespace arrcap::eval {

using lang::ArrayId;
using lang::Expr;
using lang::ExprPtr;
using lang::Program;
using lang::Type;
using lang::Value;

struct HeapArray {
  Type tag;  // declared type at allocation; Δ(ι)
  std::vector<Value> slots;
};

/// H, indexed by ι. Arrays are shared between configurations and copied on write.
using Heap = std::vector<std::shared_ptr<const HeapArray>>;

/// `x ↦ v`, or `• x ↦ v` when marked. `type` is the x_t annotation.
struct StackEntry {
  std::string name;
  Value value;
  Type type;
  bool marked = false;
};

using Stack = std::vector<StackEntry>;

struct Activity;
using ActivityPtr = std::shared_ptr<const Activity>;

/// A ::= (S, e) | A1 ∥ A2 ▷ (S, e) | Error
struct Activity {
  enum class Kind { Leaf, Fork, Error };
  Kind kind = Kind::Error;
  Stack stack;  // Leaf, or the waiting thread of a Fork
  ExprPtr expr;
  ActivityPtr left, right;
  // Fresh-name state of the thread owning `stack`.
  std::string tag;
  std::uint64_t counter = 0;
};

struct Config {
  std::shared_ptr<const Program> program;  // elaborated
  Heap heap;
  ActivityPtr root;
};

/// Path from the root to a Leaf to step, or to a Fork to finish or fail.
using Choice = std::string;  // of 'L' / 'R'

/// `root`, or `L.R` style.
std::string format_path(const Choice& c);

/// ⟨∅, (x ↦ default, body of main)⟩ where default is false or null.
Config initial_config(std::shared_ptr<const Program> program);

bool is_terminal(const Config& cfg);
bool is_error(const Config& cfg);
/// The root value of a finished configuration.
const Expr* root_value(const Config& cfg);

/// Empty iff no rule applies: terminal or stuck.
std::vector<Choice> enabled_choices(const Config& cfg);

struct StepResult {
  Config next;
  std::string rule;
};

/// Throws std::invalid_argument if `choice` is not enabled.
StepResult step(const Config& cfg, const Choice& choice);

struct TraceEntry {
  std::size_t n = 0;
  std::string rule;
  Choice path;
};

/// `#<n> <RULE> @<path>`
std::string format(const TraceEntry& t);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::size_t pick(const std::vector<Choice>& enabled) = 0;
};

class SeededScheduler : public Scheduler {
 public:
  explicit SeededScheduler(std::uint64_t seed) : rng_(seed) {}
  std::size_t pick(const std::vector<Choice>& enabled) override;

 private:
  std::mt19937_64 rng_;
};

/// Replays indices into the enabled list; index 0 once exhausted.
class FixedScheduler : public Scheduler {
 public:
  explicit FixedScheduler(std::vector<std::size_t> picks) : picks_(std::move(picks)) {}
  std::size_t pick(const std::vector<Choice>& enabled) override;

 private:
  std::vector<std::size_t> picks_;
  std::size_t next_ = 0;
};

enum class Outcome { Value, Error, Stuck, Budget, Aborted };

std::string to_string(Outcome o);

struct RunOptions {
  std::size_t max_steps = 100000;
  bool record_trace = true;
  /// Called after every step; returning false stops the run with Aborted.
  std::function<bool(const Config& before, const Config& after, const TraceEntry& step)> observer;
};

struct RunResult {
  Config final;
  Outcome outcome = Outcome::Budget;
  std::vector<TraceEntry> trace;
  std::size_t steps = 0;
};

RunResult run(const Config& initial, Scheduler& scheduler, const RunOptions& options = {});

struct WfReport {
  bool ok = true;
  std::string failure;
  typecheck::RuntimeTypeEnv delta;
  /// Γ mirrored from each thread's stack, leaves and waiting threads in
  /// left-to-right order.
  std::vector<typecheck::TypeEnv> gammas;
};

/// WF-CFG: Δ from heap tags, Γ per thread from its stack.
WfReport wf_config(const Config& cfg);

}  // namespace arrcap::eval
