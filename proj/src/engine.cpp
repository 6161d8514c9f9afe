#include "reactest/engine.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

#include "reactest/error.hpp"
#include "reactest/scenarios.hpp"

namespace reactest {

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::SystemAccepted: return "system_accepted";
    case Termination::MaxSteps: return "max_steps";
    case Termination::Deadlock: return "deadlock";
  }
  return "unknown";
}

std::vector<LabelSet> TestExecutionTrace::labels(const TransitionSystem& ts) const {
  std::vector<LabelSet> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(ts.labels(s.ts_state));
  return out;
}

std::vector<int> enabled_actions(const TestSetup& setup, int g_node, const std::set<int>& blocked) {
  const auto& g = setup.graph->graph;
  std::vector<int> actions;
  for (int e : g.out_edges(g_node)) {
    const int ts_edge = g.edge(e).ts_edge;
    if (blocked.count(ts_edge)) continue;
    actions.push_back(setup.ts->edge(ts_edge).action);
  }
  std::sort(actions.begin(), actions.end(), [&](int a, int b) {
    return setup.ts->action_name(a) < setup.ts->action_name(b);
  });
  actions.erase(std::unique(actions.begin(), actions.end()), actions.end());
  return actions;
}

int update_state(const TestSetup& setup, int g_node, int action) {
  const auto& g = setup.graph->graph;
  const int s = g.node(g_node).ts_state;
  const auto ts_edge = setup.ts->find_edge(s, action);
  if (ts_edge) {
    if (auto e = g.find_edge(g_node, *ts_edge)) return g.edge(*e).to;
  }
  throw Error(ErrorKind::NoSuccessor, "no G successor of node " + std::to_string(g_node) +
                                          " under action " + setup.ts->action_name(action));
}

// ---------------------------------------------------------------------------
// Agents

namespace {

constexpr int kUnreached = std::numeric_limits<int>::max();

/// Distance to the nearest accepting node of S, skipping blocked edges.
std::vector<int> distance_to_target(const ProductGraph& S, const std::set<int>& blocked) {
  std::vector<int> dist(S.num_nodes(), kUnreached);
  std::vector<int> queue;
  for (int v = 0; v < static_cast<int>(S.num_nodes()); ++v) {
    if (S.node_class(v) == NodeClass::Target) {
      dist[v] = 0;
      queue.push_back(v);
    }
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int v = queue[head];
    for (int e : S.in_edges(v)) {
      const auto& ed = S.edge(e);
      if (blocked.count(ed.ts_edge) || dist[ed.from] != kUnreached) continue;
      dist[ed.from] = dist[v] + 1;
      queue.push_back(ed.from);
    }
  }
  return dist;
}

}  // namespace

int ReplanningAgent::choose(const AgentView& view) {
  const auto& S = *view.setup.system;
  const auto& ts = *view.setup.ts;
  const auto here = S.find_node(view.ts_state, view.q_sys);
  if (!here) throw Error(ErrorKind::NoPath, "agent state is not in the system product");

  auto best_action = [&](const std::vector<int>& dist) {
    int best = -1;
    int best_dist = kUnreached;
    for (int a : view.enabled) {
      const auto ts_edge = ts.find_edge(view.ts_state, a);
      if (!ts_edge) continue;
      const auto e = S.find_edge(*here, *ts_edge);
      if (!e) continue;
      const int d = dist[S.edge(*e).to];
      if (d < best_dist) {  // enabled is sorted by name, so ties keep the first
        best_dist = d;
        best = a;
      }
    }
    return best;
  };

  int best = best_action(distance_to_target(S, view.blocked));
  // Cuts are lifted when the specification state changes, so when the
  // active set hides every route the agent heads for the goal as if
  // unconstrained.
  if (best < 0) best = best_action(distance_to_target(S, {}));
  if (best < 0) throw Error(ErrorKind::NoPath, "no path to an accepting state");
  return best;
}

int RandomAgent::choose(const AgentView& view) {
  if (view.enabled.empty()) throw Error(ErrorKind::NoPath, "no enabled action");
  return view.enabled[rng_() % view.enabled.size()];
}

int ScriptedAgent::choose(const AgentView& view) {
  if (next_ >= actions_.size()) throw Error(ErrorKind::NoPath, "script exhausted");
  const auto a = view.setup.ts->find_action(actions_[next_++]);
  if (!a) throw Error(ErrorKind::AgentIllegalMove, "unknown action " + actions_[next_ - 1]);
  return *a;
}

// ---------------------------------------------------------------------------
// Reactive test

TestExecutionTrace run_test(const TestSetup& setup, SystemAgent& agent, int max_steps) {
  const auto& g = setup.graph->graph;
  const auto& bpi = setup.graph->bpi;
  if (g.initial().empty()) throw Error(ErrorKind::InvalidArgument, "G has no initial node");
  if (max_steps <= 0) max_steps = 10 * static_cast<int>(setup.system->num_nodes());

  std::vector<std::vector<int>> cuts_at(g.num_nodes());
  for (int e : setup.cuts) {
    if (e < 0 || e >= static_cast<int>(g.num_edges())) {
      throw Error(ErrorKind::DanglingEdge, "cut edge " + std::to_string(e) + " is not in G");
    }
    cuts_at[g.edge(e).from].push_back(g.edge(e).ts_edge);
  }

  TestExecutionTrace trace;
  trace.agent = agent.kind();
  std::set<int> active;

  auto activate = [&](int node, TraceStep& step) {
    for (int ts_edge : cuts_at[node]) {
      if (active.insert(ts_edge).second) step.activated.push_back(ts_edge);
    }
    std::sort(step.activated.begin(), step.activated.end());
  };

  int node = g.initial().front();
  TraceStep first;
  first.ts_state = g.node(node).ts_state;
  first.g_node = node;
  first.bpi_state = g.node(node).automaton_state;
  activate(node, first);
  trace.steps.push_back(std::move(first));

  trace.termination = Termination::MaxSteps;
  for (int step = 1;; ++step) {
    const int q = g.node(node).automaton_state;
    if (bpi.acc_sys(q)) {
      trace.termination = Termination::SystemAccepted;
      break;
    }
    if (step > max_steps) break;

    AgentView view{setup, g.node(node).ts_state, bpi.sys_component(q), active,
                   enabled_actions(setup, node, active)};
    if (view.enabled.empty()) {
      trace.termination = Termination::Deadlock;
      break;
    }
    int action;
    try {
      action = agent.choose(view);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoPath) throw;
      trace.termination = Termination::Deadlock;
      break;
    }
    if (std::find(view.enabled.begin(), view.enabled.end(), action) == view.enabled.end()) {
      throw Error(ErrorKind::AgentIllegalMove,
                  "action " + setup.ts->action_name(action) + " is not enabled at " +
                      setup.ts->state_name(view.ts_state));
    }

    const int next = update_state(setup, node, action);
    TraceStep rec;
    rec.step = step;
    rec.ts_state = g.node(next).ts_state;
    rec.g_node = next;
    rec.bpi_state = g.node(next).automaton_state;
    rec.action = action;
    if (rec.bpi_state != q) {
      rec.retracted.assign(active.begin(), active.end());
      active.clear();
    }
    activate(next, rec);
    trace.steps.push_back(std::move(rec));
    node = next;
  }
  trace.retracted_at_end.assign(active.begin(), active.end());

  const auto labels = trace.labels(*setup.ts);
  const auto verdict = check_execution(labels, setup.sys_spec, setup.test_spec);
  trace.sys_verdict = verdict.sys;
  trace.test_verdict = verdict.test;
  trace.violation = verdict.violation;
  return trace;
}

ExecutionVerdict check_execution(std::span<const LabelSet> labels, const ReachAvoidSpec& sys,
                                 const ReachAvoidSpec& test) {
  ExecutionVerdict v;
  v.sys = evaluate_trace(sys, labels);
  v.test = evaluate_trace(test, labels);
  v.violation = v.sys == Verdict::Satisfied && v.test != Verdict::Satisfied;
  return v;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using ojson = nlohmann::ordered_json;

ojson edge_json(const TransitionSystem& ts, int e) {
  const auto& ed = ts.edge(e);
  return ojson::array({ts.state_name(ed.from), ts.action_name(ed.action), ts.state_name(ed.to)});
}

ojson edges_json(const TransitionSystem& ts, const std::vector<int>& edges) {
  ojson out = ojson::array();
  for (int e : edges) out.push_back(edge_json(ts, e));
  return out;
}

}  // namespace

std::string trace_to_jsonl(const TestExecutionTrace& trace, const TestSetup& setup,
                           const std::string& scenario_name, const std::string& graph_hash,
                           const GridLayout* layout) {
  const auto& ts = *setup.ts;
  const auto& bpi = setup.graph->bpi;
  std::string out;

  ojson header;
  header["type"] = "header";
  header["scenario"] = scenario_name;
  header["graph_hash"] = graph_hash;
  header["agent"] = trace.agent;
  header["cuts"] = setup.cuts.size();
  if (layout) {
    ojson cells = ojson::array();
    for (std::size_t s = 0; s < layout->cells.size(); ++s) {
      const auto& c = layout->cells[s];
      cells.push_back({{"state", layout->state_names.at(s)}, {"x", c.x}, {"y", c.y}, {"mode", c.mode}});
    }
    header["layout"] = {{"rows", layout->rows}, {"cells", cells}};
  }
  out += header.dump() + '\n';

  for (const auto& s : trace.steps) {
    ojson rec;
    rec["type"] = "step";
    rec["step"] = s.step;
    rec["s"] = ts.state_name(s.ts_state);
    rec["g"] = s.g_node;
    rec["bpi"] = bpi.state_name(s.bpi_state);
    rec["activated"] = edges_json(ts, s.activated);
    rec["retracted"] = edges_json(ts, s.retracted);
    rec["action"] = s.action ? ojson(ts.action_name(*s.action)) : ojson(nullptr);
    out += rec.dump() + '\n';
  }

  ojson summary;
  summary["type"] = "summary";
  summary["steps"] = trace.steps.size();
  summary["termination"] = to_string(trace.termination);
  summary["sys_verdict"] = to_string(trace.sys_verdict);
  summary["test_verdict"] = to_string(trace.test_verdict);
  summary["violation"] = trace.violation;
  summary["retracted_at_end"] = edges_json(ts, trace.retracted_at_end);
  out += summary.dump() + '\n';
  return out;
}

}  // namespace reactest
