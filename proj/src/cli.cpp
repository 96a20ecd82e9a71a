#include "arrcap/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <sstream>

#include "arrcap/examples.hpp"
#include "arrcap/frontend.hpp"
#include "arrcap/generator.hpp"
#include "arrcap/meta.hpp"

namespace arrcap::cli {

namespace {

struct CliConfig {
  std::string file;
  std::uint64_t seed = 0;
  std::size_t max_steps = 100000;
  bool trace = false;
  bool check_invariants = false;
  std::string output = "human";
  std::size_t max_schedules = 200000;

  std::size_t count = 100;
  std::size_t size = 30;
  std::string mode = "safe";
  bool explore = false;
  bool no_invariants = false;

  std::string example;
  std::size_t n = 0;
  bool parallel = false;
};

std::string compact(std::string s) {
  std::erase(s, ' ');
  return s;
}

std::string value_text(const eval::Config& cfg) {
  const auto* v = eval::root_value(cfg);
  return v ? lang::to_string(v->value) : "-";
}

/// Compiles `file`, printing diagnostics; nullptr on failure with `code` set.
std::shared_ptr<const lang::Program> load(const std::string& file, std::ostream& err, int& code) {
  std::string source;
  try {
    source = read_file(file);
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    code = kUsage;
    return nullptr;
  }
  auto compiled = compile(source);
  for (const auto& d : compiled.diagnostics) err << lang::format(d, file) << '\n';
  if (!compiled.program) code = kTypeError;
  return compiled.program;
}

int cmd_check(const CliConfig& c, std::ostream& out, std::ostream& err) {
  int code = kOk;
  auto program = load(c.file, err, code);
  if (!program) return code;
  out << c.file << ": ok\n";
  return kOk;
}

int exit_for(eval::Outcome o) {
  switch (o) {
    case eval::Outcome::Value: return kOk;
    case eval::Outcome::Error: return kErrorState;
    case eval::Outcome::Budget: return kBudget;
    default: return kInvariant;
  }
}

int cmd_run(const CliConfig& c, std::ostream& out, std::ostream& err) {
  int code = kOk;
  auto program = load(c.file, err, code);
  if (!program) return code;
  const auto initial = eval::initial_config(program);
  eval::SeededScheduler scheduler(c.seed);

  eval::RunResult result;
  std::optional<meta::Violation> violation;
  if (c.check_invariants) {
    meta::GauntletOptions o;
    o.max_steps = c.max_steps;
    o.record_trace = c.trace;
    auto g = meta::run_checked(initial, scheduler, o);
    result = std::move(g.run);
    violation = std::move(g.violation);
  } else {
    eval::RunOptions o;
    o.max_steps = c.max_steps;
    o.record_trace = c.trace;
    result = eval::run(initial, scheduler, o);
  }

  for (const auto& t : result.trace) out << eval::format(t) << '\n';
  const bool machine = c.output == "machine";
  if (machine) {
    out << "outcome=" << eval::to_string(result.outcome) << " steps=" << result.steps
        << " value=" << compact(value_text(result.final));
    if (c.check_invariants) {
      out << " invariants="
          << (violation ? "FAIL(" + violation->which + "," + std::to_string(violation->step) + ")" : "ok");
    }
    out << '\n';
  } else {
    out << "outcome: " << eval::to_string(result.outcome) << '\n'
        << "steps: " << result.steps << '\n'
        << "value: " << value_text(result.final) << '\n'
        << meta::dump(result.final);
  }
  if (violation) {
    err << "invariant violation: " << violation->which << " at step " << violation->step << ": " << violation->detail
        << '\n';
    return kInvariant;
  }
  return exit_for(result.outcome);
}

int cmd_explore(const CliConfig& c, std::ostream& out, std::ostream& err) {
  int code = kOk;
  auto program = load(c.file, err, code);
  if (!program) return code;
  meta::ExploreOptions o;
  o.max_steps = c.max_steps;
  o.max_states = c.max_schedules;
  auto ex = meta::explore(eval::initial_config(program), o);
  out << "outcomes=" << ex.outcomes.size() << " states=" << ex.states
      << " bound_exceeded=" << (ex.bound_exceeded ? 1 : 0) << '\n';
  bool any_error = false;
  bool any_stuck = false;
  for (const auto& [key, cfg] : ex.outcomes) {
    if (eval::is_error(cfg)) {
      any_error = true;
      out << "outcome error\n";
    } else if (key.starts_with("STUCK")) {
      any_stuck = true;
      out << "outcome stuck\n";
    } else {
      out << "outcome value=" << compact(value_text(cfg)) << '\n';
    }
  }
  if (any_stuck || ex.outcomes.size() > 1) {
    err << "well-typed program with " << ex.outcomes.size() << " distinct final configurations\n";
    return kInvariant;
  }
  if (ex.bound_exceeded) return kBudget;
  return any_error ? kErrorState : kOk;
}

int cmd_fuzz(const CliConfig& c, std::ostream& out, std::ostream& err) {
  meta::GenOptions g;
  g.budget = c.size;
  g.mode = c.mode == "wild" ? meta::GenMode::Wild : meta::GenMode::Safe;
  std::size_t violations = 0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < c.count; ++i) {
    const std::uint64_t seed = c.seed + i;
    auto checked = typecheck::check_program(meta::generate(seed, g));
    auto program = std::make_shared<const lang::Program>(std::move(*checked.program));
    const auto initial = eval::initial_config(program);
    eval::SeededScheduler scheduler(seed);

    std::string invariants = "ok";
    eval::RunResult run;
    if (c.no_invariants) {
      eval::RunOptions o;
      o.record_trace = false;
      run = eval::run(initial, scheduler, o);
    } else {
      auto r = meta::run_checked(initial, scheduler);
      run = std::move(r.run);
      if (r.violation) invariants = "FAIL(" + r.violation->which + "," + std::to_string(r.violation->step) + ")";
    }
    if (run.outcome == eval::Outcome::Stuck) invariants = "FAIL(stuck," + std::to_string(run.steps) + ")";
    if (invariants != "ok") ++violations;
    if (run.outcome == eval::Outcome::Error) ++errors;

    out << "seed=" << seed << " steps=" << run.steps << " result=" << eval::to_string(run.outcome)
        << " invariants=" << invariants;
    if (c.explore && meta::fork_count(*program) > 0) {
      auto ex = meta::explore(initial);
      out << " outcomes=" << ex.outcomes.size();
      if (ex.outcomes.size() > 1 && g.mode == meta::GenMode::Safe) ++violations;
    }
    out << '\n';
  }
  err << "programs=" << c.count << " errors=" << errors << " violations=" << violations << '\n';
  return violations ? kInvariant : kOk;
}

int cmd_examples(const CliConfig& c, std::ostream& out, std::ostream& err) {
  const auto& names = examples::example_names();
  if (std::find(names.begin(), names.end(), c.example) == names.end()) {
    err << "unknown example '" << c.example << "'\n";
    return kUsage;
  }
  auto report = examples::run_example(c.example, c.n, c.seed, c.parallel);
  out << c.example << ": " << (report.pass ? "pass" : "FAIL") << ' ' << report.detail << '\n';
  return report.pass ? kOk : kInvariant;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Array capability calculus: type checker, interpreter and soundness tooling", "arrc"};
  app.require_subcommand(1);
  CliConfig c;

  auto* check = app.add_subcommand("check", "Type check a program");
  check->add_option("file", c.file)->required();

  auto* run = app.add_subcommand("run", "Evaluate a program under a seeded scheduler");
  run->add_option("file", c.file)->required();
  run->add_option("--seed", c.seed, "Scheduler seed")->capture_default_str();
  run->add_flag("--trace", c.trace, "Print one line per reduction step");
  run->add_option("--max-steps", c.max_steps)->check(CLI::PositiveNumber)->capture_default_str();
  run->add_flag("--check-invariants", c.check_invariants, "Check well-formedness and disjointness after every step");
  run->add_option("--output", c.output)->check(CLI::IsMember({"human", "machine"}))->capture_default_str();

  auto* explore = app.add_subcommand("explore", "Enumerate every schedule and report distinct outcomes");
  explore->add_option("file", c.file)->required();
  explore->add_option("--max-schedules", c.max_schedules, "Distinct states to visit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  explore->add_option("--max-steps", c.max_steps, "Schedule length bound")->check(CLI::PositiveNumber);

  auto* fuzz = app.add_subcommand("fuzz", "Generate and run well-typed programs");
  fuzz->add_option("--count", c.count)->check(CLI::PositiveNumber)->capture_default_str();
  fuzz->add_option("--size", c.size, "Node budget per program")->check(CLI::PositiveNumber)->capture_default_str();
  fuzz->add_option("--seed", c.seed)->capture_default_str();
  fuzz->add_option("--mode", c.mode)->check(CLI::IsMember({"safe", "wild"}))->capture_default_str();
  fuzz->add_flag("--explore", c.explore, "Also enumerate schedules of programs with forks");
  fuzz->add_flag("--no-check-invariants", c.no_invariants);

  auto* ex = app.add_subcommand("examples", "Parallel algorithms over the capability kernel");
  auto* ex_run = ex->add_subcommand("run", "Run one example against its oracle");
  ex->require_subcommand(1);
  ex_run->add_option("name", c.example)->required();
  ex_run->add_option("--n", c.n, "Input size");
  ex_run->add_option("--seed", c.seed)->capture_default_str();
  ex_run->add_flag("--parallel", c.parallel, "Use threads instead of the simulated pool");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    err << app.help();
    return kUsage;
  }

  try {
    if (*check) return cmd_check(c, out, err);
    if (*explore) return cmd_explore(c, out, err);
    if (*fuzz) return cmd_fuzz(c, out, err);
    if (*ex) return cmd_examples(c, out, err);
    if (*run) return cmd_run(c, out, err);
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace arrcap::cli
