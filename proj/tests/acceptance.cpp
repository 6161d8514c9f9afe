// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "corpus.hpp"
#include "random_specs.hpp"
#include "reactest/error.hpp"
#include "reactest/maxflow.hpp"
#include "reactest/scenario_file.hpp"

using namespace reactest;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> failures;
  void fail(const std::string& why) {
    pass = false;
    failures.push_back(why);
  }
};

int g_failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  if (!o.pass) ++g_failures;
  std::string detail = o.detail.str();
  while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
  for (const auto& f : o.failures) detail += (detail.empty() ? "" : "; ") + std::string("FAILED: ") + f;
  std::cout << "criterion " << id << " [" << title << "]: " << (o.pass ? "PASS" : "FAIL") << " - " << detail
            << std::endl;
}

LabelSet label_of(const TransitionSystem& ts, const std::string& prop) {
  return ts.props().labels({prop});
}

/// Active cut set before each step of a trace, rebuilt from its records.
std::vector<std::set<int>> active_sets(const TestExecutionTrace& t) {
  std::vector<std::set<int>> out;
  std::set<int> active;
  for (const auto& s : t.steps) {
    for (int e : s.retracted) active.erase(e);
    active.insert(s.activated.begin(), s.activated.end());
    out.push_back(active);
  }
  return out;
}

// ---------------------------------------------------------------------------

void corridor_replication(Outcome& o) {
  for (const auto& name : {"corridor-5", "corridor-7", "corridor-9"}) {
    const auto start = std::chrono::steady_clock::now();
    const auto cfg = bundled_scenario(name);
    const auto p = build_pipeline(cfg.scenario);
    const auto s = synthesize(*p, cfg.solver);
    const auto setup = p->setup(s.cuts);
    ReplanningAgent agent;
    const auto t = run_test(setup, agent, cfg.max_steps);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto& ts = p->scenario.ts;
    const LabelSet k1 = label_of(ts, "key_1"), k2 = label_of(ts, "key_2"), goal = label_of(ts, "goal");
    bool seen1 = false, seen2 = false, keys_first = false;
    for (const auto& st : t.steps) {
      const LabelSet l = ts.labels(st.ts_state);
      if (l & goal) {
        keys_first = seen1 && seen2;
        break;
      }
      seen1 |= (l & k1) != 0;
      seen2 |= (l & k2) != 0;
    }
    const bool verdicts = t.sys_verdict == Verdict::Satisfied && t.test_verdict == Verdict::Satisfied;
    o.detail << name << ": " << s.cuts.size() << " cuts, " << t.steps.size() << " steps, "
             << (keys_first ? "keys before goal" : "GOAL FIRST") << ", " << to_string(t.sys_verdict) << "/"
             << to_string(t.test_verdict) << ", " << static_cast<int>(secs * 1000) << " ms; ";
    if (!keys_first) o.fail(std::string(name) + ": a goal was reached before both keys");
    if (!verdicts) o.fail(std::string(name) + ": verdicts are not (satisfied, satisfied)");
    if (secs >= 5.0) o.fail(std::string(name) + ": wall time " + std::to_string(secs) + " s");
  }
}

/// Every system strategy, as a simple path of G from the initial node under
/// the engine's activation rules. A path that revisits a G node can be
/// shortened without enlarging any later active set, and the visited B_pi
/// states, which decide both verdicts, are unchanged, so simple paths cover
/// every strategy.
struct StrategyEnumerator {
  const Pipeline& p;
  const TestSetup& setup;
  std::vector<std::vector<int>> cuts_at;
  std::vector<bool> on_path;
  std::vector<LabelSet> labels;
  long paths = 0, satisfying = 0, counterexamples = 0;
  long limit = 10000;
  bool truncated = false;

  StrategyEnumerator(const Pipeline& pipeline, const TestSetup& s) : p(pipeline), setup(s) {
    const auto& g = p.graph.graph;
    cuts_at.resize(g.num_nodes());
    for (int e : setup.cuts) cuts_at[g.edge(e).from].push_back(g.edge(e).ts_edge);
    on_path.assign(g.num_nodes(), false);
  }

  void run() {
    const int g0 = p.graph.graph.initial().front();
    std::set<int> active(cuts_at[g0].begin(), cuts_at[g0].end());
    visit(g0, active);
  }

  void visit(int node, const std::set<int>& active) {
    if (truncated) return;
    const auto& g = p.graph.graph;
    const auto& bpi = p.graph.bpi;
    on_path[node] = true;
    labels.push_back(p.scenario.ts.labels(g.node(node).ts_state));
    const int q = g.node(node).automaton_state;
    if (bpi.acc_sys(q)) {
      if (++paths > limit) truncated = true;
      const auto v = check_execution(labels, p.sys_spec, p.test_spec);
      satisfying += v.sys == Verdict::Satisfied;
      counterexamples += v.violation;
    } else {
      for (int e : g.out_edges(node)) {
        const auto& ed = g.edge(e);
        if (active.count(ed.ts_edge) || on_path[ed.to]) continue;
        std::set<int> next = g.node(ed.to).automaton_state == q ? active : std::set<int>{};
        next.insert(cuts_at[ed.to].begin(), cuts_at[ed.to].end());
        visit(ed.to, next);
      }
    }
    labels.pop_back();
    on_path[node] = false;
  }
};

/// Exhaustive search over engine states (G node, active cut set). Every
/// strategy visits a sequence of these states, so a system-accepting state
/// that is not test-accepting is reachable iff some strategy is a
/// counterexample. Each reached accepting state is confirmed on the labels
/// of one witness path.
struct EngineStateSearch {
  long states = 0, accepting = 0, counterexamples = 0;

  EngineStateSearch(const Pipeline& p, const TestSetup& setup) {
    const auto& g = p.graph.graph;
    const auto& bpi = p.graph.bpi;
    std::vector<std::vector<int>> cuts_at(g.num_nodes());
    for (int e : setup.cuts) cuts_at[g.edge(e).from].push_back(g.edge(e).ts_edge);

    using State = std::pair<int, std::set<int>>;
    std::map<State, int> index;
    std::vector<State> queue;
    std::vector<int> parent;
    auto push = [&](State st, int from) {
      if (index.emplace(st, static_cast<int>(queue.size())).second) {
        queue.push_back(std::move(st));
        parent.push_back(from);
      }
    };
    const int g0 = g.initial().front();
    push({g0, std::set<int>(cuts_at[g0].begin(), cuts_at[g0].end())}, -1);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto [node, active] = queue[head];
      const int q = g.node(node).automaton_state;
      if (bpi.acc_sys(q)) {
        ++accepting;
        std::vector<LabelSet> labels;
        for (int i = static_cast<int>(head); i >= 0; i = parent[i]) {
          labels.insert(labels.begin(), p.scenario.ts.labels(g.node(queue[i].first).ts_state));
        }
        const auto v = check_execution(labels, p.sys_spec, p.test_spec);
        counterexamples += v.violation || !bpi.acc_test(q);
        continue;
      }
      for (int e : g.out_edges(node)) {
        const auto& ed = g.edge(e);
        if (active.count(ed.ts_edge)) continue;
        std::set<int> next = g.node(ed.to).automaton_state == q ? active : std::set<int>{};
        next.insert(cuts_at[ed.to].begin(), cuts_at[ed.to].end());
        push({ed.to, std::move(next)}, static_cast<int>(head));
      }
    }
    states = static_cast<long>(queue.size());
  }
};

void universal_check(Outcome& o) {
  for (const auto& name : bundled_scenario_names()) {
    const auto cfg = bundled_scenario(name);
    const auto p = build_pipeline(cfg.scenario);
    const auto setup = p->setup(synthesize(*p, cfg.solver).cuts);
    StrategyEnumerator en(*p, setup);
    en.run();
    const EngineStateSearch search(*p, setup);
    o.detail << name << ": ";
    if (en.truncated) {
      o.detail << "more than 10^4 simple paths, ";
    } else {
      o.detail << en.paths << " paths (" << en.satisfying << " satisfy the system spec), ";
    }
    o.detail << search.states << " engine states, " << en.counterexamples + search.counterexamples
             << " counterexamples; ";
    if (en.counterexamples || search.counterexamples) o.fail(name + ": counterexample strategies exist");
    if (search.accepting == 0) o.fail(name + ": the system spec is unreachable under the cuts");
  }
}

void liveness(Outcome& o) {
  for (const auto& name : bundled_scenario_names()) {
    const auto cfg = bundled_scenario(name);
    const auto p = build_pipeline(cfg.scenario);
    const auto setup = p->setup(synthesize(*p, cfg.solver).cuts);
    long deadlocks = 0, violations = 0, stuck = 0, accepted = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      RandomAgent agent(seed);
      const auto t = run_test(setup, agent, cfg.max_steps);
      deadlocks += t.termination == Termination::Deadlock;
      violations += t.violation;
      accepted += t.termination == Termination::SystemAccepted;
      const auto active = active_sets(t);
      for (std::size_t i = 0; i < t.steps.size(); ++i) {
        const int node = t.steps[i].g_node;
        if (p->graph.bpi.acc_sys(p->graph.graph.node(node).automaton_state)) continue;
        if (enabled_actions(setup, node, active[i]).empty()) ++stuck;
      }
    }
    o.detail << name << ": " << accepted << "/1000 accepted, " << deadlocks << " deadlocks, " << stuck
             << " stuck states, " << violations << " violations; ";
    if (deadlocks || stuck || violations) o.fail(name + ": liveness or soundness broken");
  }
}

void oracle_equivalence(Outcome& o) {
  int instances = 0, feasible = 0, mismatches = 0;
  for (const auto& sc : testing::candidate_instances()) {
    std::unique_ptr<Pipeline> p;
    try {
      p = build_pipeline(sc);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyClass) throw;
      continue;
    }
    if (p->problem.num_edges() > 25) continue;
    ++instances;
    const auto oracle = brute_force_oracle(p->problem, static_cast<int>(p->problem.num_edges()));
    std::optional<CutSolution> s;
    try {
      s = mcf_opt(p->problem);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Infeasible) throw;
    }
    bool match = s.has_value() == oracle.feasible();
    if (match && s) {
      ++feasible;
      match = s->verification.total_flow == oracle.best_flow && s->verification.bypass_flow == 0 &&
              s->cuts.size() == oracle.min_cut_count;
    }
    if (!match) {
      ++mismatches;
      o.fail("mismatch on " + sc.name);
    }
  }
  o.detail << instances << " instances (" << feasible << " feasible), " << mismatches << " mismatches";
  if (instances < 20) o.fail("only " + std::to_string(instances) + " instances");
}

void duality(Outcome& o) {
  std::mt19937_64 rng(99);
  int mismatches = 0, nonintegral = 0;
  for (int i = 0; i < 100; ++i) {
    const int n = std::uniform_int_distribution<int>(2, 12)(rng);
    const double density = std::uniform_real_distribution<double>(0.1, 0.5)(rng);
    std::vector<FlowArc> arcs;
    FlowNetwork net(n);
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        if (u != v && std::bernoulli_distribution(density)(rng)) {
          arcs.push_back({u, v, 1.0});
          net.add_edge(u, v, 1);
        }
      }
    }
    const std::vector<int> s{0}, t{n - 1};
    const double flow = lp_max_flow(n, arcs, s, t).value;
    const double cut = lp_min_cut(n, arcs, s, t).value;
    const auto reference = net.max_flow(s, t);
    if (std::abs(flow - std::round(flow)) > 1e-9 || std::abs(cut - std::round(cut)) > 1e-9) ++nonintegral;
    if (std::llround(flow) != std::llround(cut) || std::llround(flow) != reference) ++mismatches;
  }
  o.detail << "100 digraphs, " << mismatches << " max-flow/min-cut mismatches, " << nonintegral
           << " non-integral values";
  if (mismatches || nonintegral) o.fail("duality broken");
}

void verification_gate(Outcome& o) {
  int checked = 0;
  auto check = [&](const std::string& name, const FlowProblem& fp, const std::vector<int>& cuts) {
    const auto r = verify_cuts(fp, cuts);
    ++checked;
    if (r.bypass_flow != 0) o.fail(name + ": bypass flow " + std::to_string(r.bypass_flow));
    if (r.total_flow < 1) o.fail(name + ": total flow " + std::to_string(r.total_flow));
  };
  for (const auto& name : bundled_scenario_names()) {
    const auto cfg = bundled_scenario(name);
    const auto p = build_pipeline(cfg.scenario);
    check(name, p->problem, synthesize(*p, cfg.solver).cuts);
  }
  {
    const auto cfg = load_scenario(std::string(REACTEST_SOURCE_DIR) + "/scenarios/corridor-5-relaxed.json");
    const auto p = build_pipeline(cfg.scenario);
    check("corridor-5-relaxed", p->problem, synthesize(*p, cfg.solver).cuts);
  }
  for (const auto& sc : testing::candidate_instances()) {
    try {
      const auto p = build_pipeline(sc);
      check(sc.name, p->problem, mcf_opt(p->problem).cuts);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyClass && e.kind() != ErrorKind::Infeasible) throw;
    }
  }
  o.detail << checked << " synthesized cut sets checked for bypass flow 0 and total flow >= 1";
}

void automata_cross_validation(Outcome& o) {
  std::mt19937_64 rng(31337);
  int disagreements = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = std::uniform_int_distribution<int>(1, 5)(rng);
    const auto props = testing::props_abc(n);
    // System specs have a single reach goal.
    const auto role = i % 2 ? SpecRole::System : SpecRole::Test;
    const int goals = role == SpecRole::System ? 1 : 3;
    const auto spec = parse_spec(testing::random_spec_text(rng, props, goals), role, props);
    const auto b = build_nba(spec, props);
    const auto trace = testing::random_trace(rng, n, 10);
    if (run_verdict(b, trace) != evaluate_trace(spec, trace)) ++disagreements;
  }
  o.detail << "1000 (spec, trace) pairs, " << disagreements << " disagreements";
  if (disagreements) o.fail("automaton and direct semantics disagree");
}

TestExecutionTrace replanning_trace(const Pipeline& p, const ScenarioConfig& cfg, TestSetup& setup) {
  setup = p.setup(synthesize(p, cfg.solver).cuts);
  ReplanningAgent agent;
  return run_test(setup, agent, cfg.max_steps);
}

void quadruped_replicas(Outcome& o) {
  {
    const auto cfg = bundled_scenario("beaver-rescue");
    const auto p = build_pipeline(cfg.scenario);
    TestSetup setup;
    const auto t = replanning_trace(*p, cfg, setup);
    const auto& ts = p->scenario.ts;
    const LabelSet d1 = label_of(ts, "door_1"), d2 = label_of(ts, "door_2"), carry = label_of(ts, "carry");
    // The door used on a leg is the last door cell crossed before the leg
    // ends; the robot may step onto the other door and turn back.
    std::optional<LabelSet> out_door, back_door;
    std::size_t pickup = t.steps.size();
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      const LabelSet l = ts.labels(t.steps[i].ts_state);
      if ((l & carry) && pickup == t.steps.size()) pickup = i;
      for (LabelSet d : {d1, d2}) {
        if (l & d) ((l & carry) ? back_door : out_door) = d;
      }
    }
    const bool distinct = out_door && back_door && *out_door != *back_door;
    bool first_door_cut = false;
    if (distinct) {
      const auto active = active_sets(t);
      for (std::size_t i = pickup; i < t.steps.size(); ++i) {
        for (int e : active[i]) {
          if ((ts.labels(ts.edge(e).from) | ts.labels(ts.edge(e).to)) & *out_door) first_door_cut = true;
        }
      }
    }
    auto door_name = [&](const std::optional<LabelSet>& d) {
      return !d ? "none" : *d == d1 ? "door_1" : "door_2";
    };
    const bool done = t.sys_verdict == Verdict::Satisfied && t.test_verdict == Verdict::Satisfied;
    o.detail << "beaver-rescue: " << t.steps.size() << " steps, outbound via " << door_name(out_door)
             << ", return via " << door_name(back_door)
             << (first_door_cut ? ", first door cut on the return leg" : ", FIRST DOOR NOT CUT") << "; ";
    if (!distinct) o.fail("beaver-rescue: doors are not used on distinct legs");
    if (!first_door_cut) o.fail("beaver-rescue: first-used door is never cut on the return leg");
    if (!done) o.fail("beaver-rescue: verdicts are not (satisfied, satisfied)");
  }
  {
    const auto cfg = bundled_scenario("motion-primitives");
    const auto p = build_pipeline(cfg.scenario);
    TestSetup setup;
    const auto t = replanning_trace(*p, cfg, setup);
    const auto& ts = p->scenario.ts;
    const LabelSet goal = label_of(ts, "goal");
    LabelSet seen = 0;
    bool reached = false;
    for (const auto& st : t.steps) {
      const LabelSet l = ts.labels(st.ts_state);
      if (l & goal) {
        reached = true;
        break;
      }
      seen |= l;
    }
    std::string missing;
    for (const auto& mode : {"jump", "lie", "stand"}) {
      if (!(seen & label_of(ts, mode))) missing += std::string(" ") + mode;
    }
    o.detail << "motion-primitives: " << t.steps.size() << " steps, "
             << (missing.empty() ? "jump, lie and stand before goal" : "missing" + missing);
    if (!reached) o.fail("motion-primitives: goal not reached");
    if (!missing.empty()) o.fail("motion-primitives: missing before goal:" + missing);
  }
}

int cli(const std::string& args) {
  const std::string cmd = std::string("REACTEST_LOG=error ") + REACTEST_CLI + " " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void determinism(Outcome& o) {
  const auto dir = fs::temp_directory_path() / "reactest_acceptance";
  fs::create_directories(dir);
  int compared = 0;
  for (const auto& name : bundled_scenario_names()) {
    const std::string scenario = std::string(REACTEST_SOURCE_DIR) + "/scenarios/" + name + ".json";
    std::vector<std::string> cuts, traces, random;
    for (int rep = 0; rep < 3; ++rep) {
      const auto base = (dir / (name + "." + std::to_string(rep))).string();
      if (cli("synth " + scenario + " --out " + base + ".cuts.json") != 0 ||
          cli("run " + scenario + " " + base + ".cuts.json --out " + base + ".trace.jsonl") != 0 ||
          cli("run " + scenario + " " + base + ".cuts.json --agent random --seed 7 --out " + base +
              ".random.jsonl") != 0) {
        o.fail(name + ": CLI failed");
        break;
      }
      cuts.push_back(read_text_file(base + ".cuts.json"));
      traces.push_back(read_text_file(base + ".trace.jsonl"));
      random.push_back(read_text_file(base + ".random.jsonl"));
    }
    for (const auto* outputs : {&cuts, &traces, &random}) {
      for (std::size_t i = 1; i < outputs->size(); ++i) {
        ++compared;
        if ((*outputs)[i] != (*outputs)[0]) o.fail(name + ": outputs differ between repetitions");
      }
    }
  }
  fs::remove_all(dir);
  o.detail << "5 scenarios x 3 repetitions, " << compared << " pairwise comparisons of cut files and traces";
}

}  // namespace

int main() {
  report(1, "corridor replication", corridor_replication);
  report(2, "universal check", universal_check);
  report(3, "liveness", liveness);
  report(4, "oracle equivalence", oracle_equivalence);
  report(5, "duality", duality);
  report(6, "verification gate", verification_gate);
  report(7, "automata cross-validation", automata_cross_validation);
  report(8, "quadruped replicas", quadruped_replicas);
  report(9, "determinism", determinism);
  std::cout << (g_failures ? std::to_string(g_failures) + " criteria failed" : "all criteria passed") << std::endl;
  return g_failures ? 1 : 0;
}
