#pragma once

// Declarative scenario files and the synth / run / verify pipeline built
// on top of them.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reactest/engine.hpp"
#include "reactest/flow_synthesis.hpp"
#include "reactest/scenarios.hpp"

namespace reactest {

struct SolverConfig {
  SolverMode mode = SolverMode::ExactMilp;
  std::vector<double> lambda_grid = kDefaultLambdaGrid;
  double threshold = 0.9;
  bool hard_bypass = true;
};

struct AgentConfig {
  std::string kind = "replanning";  // replanning | random | scripted
  std::uint64_t seed = 0;
  std::vector<std::string> script;
};

struct ScenarioConfig {
  Scenario scenario;
  SolverConfig solver;
  AgentConfig agent;
  int max_steps = 0;  // 0 selects the engine default
};

/// Parses and validates a scenario document. Unknown keys, wrong types and
/// inconsistent worlds raise ValidationError; world builders may raise
/// their own geometry errors.
ScenarioConfig parse_scenario(const std::string& json_text);
ScenarioConfig load_scenario(const std::string& path);

/// Bundled scenario documents, by name: corridor-5, corridor-7, corridor-9,
/// beaver-rescue, motion-primitives.
std::vector<std::string> bundled_scenario_names();
ScenarioConfig bundled_scenario(const std::string& name);

/// Every derived structure of one scenario. Not copyable: the flow problem
/// points into the graphs.
struct Pipeline {
  Scenario scenario;
  ReachAvoidSpec sys_spec;
  ReachAvoidSpec test_spec;
  BuchiAutomaton b_sys;
  BuchiAutomaton b_test;
  VirtualProductGraph graph;
  ProductGraph system;
  FlowProblem problem;
  std::string hash;

  Pipeline() = default;
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  TestSetup setup(std::vector<int> cuts) const;
};

std::unique_ptr<Pipeline> build_pipeline(const Scenario& scenario);

/// Runs the solver selected by the config (lambda sweep included) and
/// returns the chosen solution; throws Infeasible when verification fails.
CutSolution synthesize(const Pipeline& p, const SolverConfig& config);

std::unique_ptr<SystemAgent> make_agent(const AgentConfig& config);

struct CutFile {
  std::string graph_hash;
  std::vector<int> cuts;
};
/// Reads the cut list and graph hash back from solution_to_json output.
CutFile parse_cut_file(const std::string& json_text);

/// Frames of a JSON-lines trace, one per step. Requires a header with a
/// layout.
std::vector<std::string> render_trace(const std::string& jsonl);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace reactest
