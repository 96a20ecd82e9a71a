#pragma once

// Executable statements of the soundness theorems: capability extraction,
// arrayDisjointness, progress and preservation probes, canonical forms and
// exhaustive schedule exploration.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "arrcap/eval.hpp"

namespace arrcap::meta {

using eval::Config;
using lang::ArrayId;
using lang::Type;

/// (ι, σ, t)
struct CapOccurrence {
  ArrayId id = 0;
  IndexMap sigma;
  Type type;

  friend bool operator==(const CapOccurrence&, const CapOccurrence&) = default;
};

std::string to_string(const CapOccurrence& c);

/// caps(⟨H, A⟩) as a multiset, in traversal order.
std::vector<CapOccurrence> caps(const Config& cfg);

/// Multiset inclusion.
bool subset(const std::vector<CapOccurrence>& small, const std::vector<CapOccurrence>& big);

struct Disjointness {
  bool ok = true;
  std::optional<std::pair<CapOccurrence, CapOccurrence>> violation;
};

Disjointness array_disjointness(const std::vector<CapOccurrence>& cs);
Disjointness array_disjointness(const Config& cfg);

/// Progress: terminal, or some rule applies.
bool check_progress(const Config& cfg);

/// A non-value thread that no rule can step, even if others can.
std::optional<eval::Choice> stuck_thread(const Config& cfg);

/// Preservation for one step: the reason it fails, if it does.
std::optional<std::string> preservation_failure(const Config& before, const Config& after);
bool check_preservation(const Config& before, const Config& after);

/// Rules whose step may only move capabilities around.
bool moves_only(const std::string& rule);

/// Serialization with array ids renamed in first-reached order: activity
/// stacks then expressions, then heap contents breadth first. Unreachable
/// arrays are appended as a sorted multiset.
std::string canonical(const Config& cfg);

/// Kernel debug-dump format over the configuration's heap and caps.
std::string dump(const Config& cfg);

/// Per-step invariant gauntlet over one scheduled run.
struct GauntletOptions {
  std::size_t max_steps = 100000;
  bool record_trace = false;
};

struct Violation {
  std::string which;  // wf, delta, progress, stuck, disjointness, subset
  std::size_t step = 0;
  std::string detail;
};

struct GauntletResult {
  eval::RunResult run;
  std::optional<Violation> violation;
};

GauntletResult run_checked(const Config& initial, eval::Scheduler& scheduler, const GauntletOptions& options = {});

struct ExploreOptions {
  std::size_t max_steps = 200;
  /// Distinct states visited before giving up.
  std::size_t max_states = 200000;
};

struct ExploreResult {
  /// canonical form -> one final configuration reaching it
  std::map<std::string, Config> outcomes;
  std::size_t states = 0;
  bool bound_exceeded = false;
};

/// Depth-first enumeration of every schedule, memoized on canonical states.
ExploreResult explore(const Config& initial, const ExploreOptions& options = {});

}  // namespace arrcap::meta
