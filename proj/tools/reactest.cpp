// reactest: synthesize reactive test constraints and execute tests.
//
//   reactest synth  SCENARIO [--mode M] [--lambda-grid L] [--threshold T] [--out FILE]
//   reactest run    SCENARIO CUTS [--agent K] [--seed N] [--max-steps N] [--out FILE]
//   reactest verify SCENARIO CUTS
//   reactest render TRACE [--out FILE]
//
// Exit codes: 0 success, 1 usage or invalid input, 2 infeasible (including
// an empty source, intermediate or target class), failed
// verification, graph hash mismatch or a spec violation in the trace,
// 3 internal error (including a deadlock under verified cuts).
// REACTEST_LOG=error|warn|info|debug controls stderr verbosity.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "reactest/error.hpp"
#include "reactest/scenario_file.hpp"

namespace {

using namespace reactest;

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

Level log_level() {
  const char* v = std::getenv("REACTEST_LOG");
  if (!v) return Level::Warn;
  const std::string s(v);
  if (s == "error") return Level::Error;
  if (s == "info") return Level::Info;
  if (s == "debug") return Level::Debug;
  return Level::Warn;
}

void log(Level level, const std::string& msg) {
  static const Level threshold = log_level();
  if (level > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "reactest: " << names[static_cast<int>(level)] << ": " << msg << '\n';
}

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailed = 2;
constexpr int kInternal = 3;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Infeasible:
    case ErrorKind::NoFeasibleLambda:
    case ErrorKind::GraphHashMismatch:
    case ErrorKind::EmptyClass:
    case ErrorKind::EmptyTarget:
    case ErrorKind::EmptyIntermediate:
      return kFailed;
    case ErrorKind::InvalidArgument:
    case ErrorKind::SyntaxError:
    case ErrorKind::UnsupportedFragment:
    case ErrorKind::UnknownProposition:
    case ErrorKind::EmptyProgress:
    case ErrorKind::PropositionMismatch:
    case ErrorKind::BadGeometry:
    case ErrorKind::MapParseError:
    case ErrorKind::BadModeGraph:
    case ErrorKind::ValidationError:
      return kUsage;
    default:
      return kInternal;
  }
}

void emit(const std::optional<std::string>& out, const std::string& text) {
  if (out) {
    write_text_file(*out, text);
  } else {
    std::cout << text;
  }
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || v < 0) {
      throw Error(ErrorKind::ValidationError, "bad --lambda-grid entry '" + item + "'");
    }
    grid.push_back(v);
  }
  if (grid.empty()) throw Error(ErrorKind::ValidationError, "empty --lambda-grid");
  return grid;
}

struct Options {
  std::string scenario;
  std::string cuts;
  std::string trace;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<std::string> lambda_grid;
  std::optional<double> threshold;
  std::optional<std::string> agent;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_steps;
};

int cmd_synth(const Options& o) {
  ScenarioConfig cfg = load_scenario(o.scenario);
  if (o.mode) cfg.solver.mode = parse_solver_mode(*o.mode);
  if (o.lambda_grid) cfg.solver.lambda_grid = parse_grid(*o.lambda_grid);
  if (o.threshold) cfg.solver.threshold = *o.threshold;
  auto p = build_pipeline(cfg.scenario);
  log(Level::Info, "G has " + std::to_string(p->graph.graph.num_nodes()) + " nodes and " +
                       std::to_string(p->graph.graph.num_edges()) + " edges");
  const CutSolution s = synthesize(*p, cfg.solver);
  log(Level::Info, std::to_string(s.cuts.size()) + " cuts, F = " + std::to_string(s.verification.total_flow));
  emit(o.out, solution_to_json(s, p->problem, p->scenario.ts, p->hash));
  return kOk;
}

std::vector<int> load_cuts(const Pipeline& p, const std::string& path) {
  const CutFile f = parse_cut_file(read_text_file(path));
  if (f.graph_hash != p.hash) {
    throw Error(ErrorKind::GraphHashMismatch,
                "cuts were synthesized for graph " + f.graph_hash + " but the scenario yields " + p.hash);
  }
  return f.cuts;
}

int cmd_run(const Options& o) {
  ScenarioConfig cfg = load_scenario(o.scenario);
  if (o.agent) cfg.agent.kind = *o.agent;
  if (o.seed) cfg.agent.seed = *o.seed;
  if (o.max_steps) cfg.max_steps = *o.max_steps;
  auto p = build_pipeline(cfg.scenario);
  const TestSetup setup = p->setup(load_cuts(*p, o.cuts));
  auto agent = make_agent(cfg.agent);
  const auto trace = run_test(setup, *agent, cfg.max_steps);
  emit(o.out, trace_to_jsonl(trace, setup, cfg.scenario.name, p->hash, &p->scenario.layout));
  log(Level::Info, "termination " + std::string(to_string(trace.termination)) + ", system " +
                       std::string(to_string(trace.sys_verdict)) + ", test " +
                       std::string(to_string(trace.test_verdict)));
  if (trace.termination == Termination::Deadlock) {
    log(Level::Error, "deadlock under verified cuts");
    return kInternal;
  }
  if (trace.violation) {
    log(Level::Error, "system specification met without the test specification");
    return kFailed;
  }
  return kOk;
}

int cmd_verify(const Options& o) {
  const ScenarioConfig cfg = load_scenario(o.scenario);
  auto p = build_pipeline(cfg.scenario);
  const auto cuts = load_cuts(*p, o.cuts);
  const VerificationReport r = verify_cuts(p->problem, cuts);
  nlohmann::json j = {{"bypass_flow", r.bypass_flow},   {"flow_si", r.flow_si},
                      {"flow_it", r.flow_it},           {"min_context_flow", r.min_context_flow},
                      {"total_flow", r.total_flow},     {"failing_contexts", r.failing_contexts},
                      {"passed", r.passed()}};
  emit(o.out, j.dump(2) + "\n");
  return r.passed() ? kOk : kFailed;
}

int cmd_render(const Options& o) {
  const auto frames = render_trace(read_text_file(o.trace));
  std::string text;
  for (const auto& f : frames) text += f + "\n";
  emit(o.out, text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reactive test synthesis and execution"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth", "synthesize and verify cuts");
  synth->add_option("scenario", o.scenario, "scenario file")->required();
  synth->add_option("--mode", o.mode, "exact-milp or relaxed-iterative");
  synth->add_option("--lambda-grid", o.lambda_grid, "comma-separated lambda values");
  synth->add_option("--threshold", o.threshold, "cut threshold for fractional profiles")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--out", o.out, "output file (default stdout)");

  auto* run = app.add_subcommand("run", "execute a reactive test");
  run->add_option("scenario", o.scenario, "scenario file")->required();
  run->add_option("cuts", o.cuts, "cut file from synth")->required();
  run->add_option("--agent", o.agent, "replanning, random or scripted")
      ->check(CLI::IsMember({"replanning", "random", "scripted"}));
  run->add_option("--seed", o.seed, "random agent seed");
  run->add_option("--max-steps", o.max_steps, "step limit (default 10 |S|)")->check(CLI::NonNegativeNumber);
  run->add_option("--out", o.out, "trace file (default stdout)");

  auto* verify = app.add_subcommand("verify", "check a cut file against a scenario");
  verify->add_option("scenario", o.scenario, "scenario file")->required();
  verify->add_option("cuts", o.cuts, "cut file")->required();
  verify->add_option("--out", o.out, "report file (default stdout)");

  auto* render = app.add_subcommand("render", "print ASCII frames of a trace");
  render->add_option("trace", o.trace, "trace file from run")->required();
  render->add_option("--out", o.out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*run) return cmd_run(o);
    if (*verify) return cmd_verify(o);
    if (*render) return cmd_render(o);
  } catch (const Error& e) {
    log(Level::Error, e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    log(Level::Error, e.what());
    return kInternal;
  }
  return kUsage;
}
