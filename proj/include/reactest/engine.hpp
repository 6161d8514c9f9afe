#pragma once

// Reactive test execution: the tester activates cuts as the system moves
// through the virtual product graph, and a pluggable agent plays the system.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "reactest/ltl.hpp"
#include "reactest/products.hpp"

namespace reactest {

/// Everything the engine needs about one scenario.
struct TestSetup {
  const TransitionSystem* ts = nullptr;
  const VirtualProductGraph* graph = nullptr;
  const ProductGraph* system = nullptr;  // T (x) B_sys
  const BuchiAutomaton* b_sys = nullptr;
  ReachAvoidSpec sys_spec;
  ReachAvoidSpec test_spec;
  std::vector<int> cuts;  // G edge ids
};

/// What an agent may look at when choosing a move.
struct AgentView {
  const TestSetup& setup;
  int ts_state;
  int q_sys;
  const std::set<int>& blocked;  // ts edges in the active cut set
  std::vector<int> enabled;      // action ids, ascending by name
};

class SystemAgent {
 public:
  virtual ~SystemAgent() = default;
  /// Returns an action id; the engine rejects actions not in view.enabled.
  virtual int choose(const AgentView& view) = 0;
  virtual std::string kind() const = 0;
};

/// Shortest path on the system product to an accepting node avoiding
/// blocked transitions; ties go to the lexicographically smallest action.
class ReplanningAgent : public SystemAgent {
 public:
  int choose(const AgentView& view) override;
  std::string kind() const override { return "replanning"; }
};

class RandomAgent : public SystemAgent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  int choose(const AgentView& view) override;
  std::string kind() const override { return "random"; }

 private:
  std::mt19937_64 rng_;
};

/// Replays action names in order.
class ScriptedAgent : public SystemAgent {
 public:
  explicit ScriptedAgent(std::vector<std::string> actions) : actions_(std::move(actions)) {}
  int choose(const AgentView& view) override;
  std::string kind() const override { return "scripted"; }

 private:
  std::vector<std::string> actions_;
  std::size_t next_ = 0;
};

enum class Termination { SystemAccepted, MaxSteps, Deadlock };
std::string_view to_string(Termination t);

struct TraceStep {
  int step = 0;
  int ts_state = -1;
  int g_node = -1;
  int bpi_state = -1;
  std::vector<int> activated;  // ts edges added to the active set
  std::vector<int> retracted;  // ts edges removed from it
  std::optional<int> action;   // action that led here; none at step 0
};

struct TestExecutionTrace {
  std::vector<TraceStep> steps;
  Verdict sys_verdict = Verdict::Pending;
  Verdict test_verdict = Verdict::Pending;
  Termination termination = Termination::MaxSteps;
  std::string agent;
  /// Cuts still active when the run ended; they are lifted at termination.
  std::vector<int> retracted_at_end;
  /// Set when the system spec holds but the test spec does not.
  bool violation = false;

  std::vector<LabelSet> labels(const TransitionSystem& ts) const;
};

/// Enabled actions at a G node under the active cut set, ascending by name.
/// Moves that would violate the system's safety part are not enabled.
std::vector<int> enabled_actions(const TestSetup& setup, int g_node, const std::set<int>& blocked);

/// Unique G successor of `g_node` under `action`; NoSuccessor otherwise.
int update_state(const TestSetup& setup, int g_node, int action);

/// Runs the reactive test. max_steps <= 0 selects 10 |S|.
TestExecutionTrace run_test(const TestSetup& setup, SystemAgent& agent, int max_steps = 0);

struct ExecutionVerdict {
  Verdict sys = Verdict::Pending;
  Verdict test = Verdict::Pending;
  bool violation = false;
};
ExecutionVerdict check_execution(std::span<const LabelSet> labels, const ReachAvoidSpec& sys,
                                 const ReachAvoidSpec& test);

struct GridLayout;

/// JSON lines: a header (scenario name, graph hash, agent, layout), one
/// record per step and a summary.
std::string trace_to_jsonl(const TestExecutionTrace& trace, const TestSetup& setup,
                           const std::string& scenario_name, const std::string& graph_hash,
                           const GridLayout* layout);

}  // namespace reactest
