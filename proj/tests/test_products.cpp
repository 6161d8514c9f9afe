#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "reactest/error.hpp"
#include "reactest/products.hpp"
#include "reactest/scenario_file.hpp"
#include "reactest/scenarios.hpp"

using namespace reactest;

namespace {

std::unique_ptr<Pipeline> pipeline(const std::string& name) {
  return build_pipeline(bundled_scenario(name).scenario);
}

/// Def. 1 edge condition checked straight from the automaton's guards.
bool guard_step(const BuchiAutomaton& b, int q, LabelSet label, int p) {
  for (const auto& t : b.transitions()) {
    if (t.from == q && t.to == p && t.guard.evaluate(label)) return true;
  }
  return false;
}

void check_sound(const ProductGraph& g, const TransitionSystem& ts,
                 const std::function<bool(int, LabelSet, int)>& step) {
  for (const auto& e : g.edges()) {
    const auto& u = g.node(e.from);
    const auto& v = g.node(e.to);
    const auto& te = ts.edge(e.ts_edge);
    REQUIRE(te.from == u.ts_state);
    REQUIRE(te.to == v.ts_state);
    REQUIRE(step(u.automaton_state, ts.labels(v.ts_state), v.automaton_state));
  }
}

}  // namespace

TEST_SUITE("products") {

TEST_CASE("sync_product: three-cell corridor with eventually goal") {
  const Scenario sc = build_corridor(3, 1, {3}, {2});
  const auto& props = sc.ts.props();
  const auto b = build_nba(parse_spec("<> (goal)", SpecRole::System, props), props);
  const auto g = sync_product(sc.ts, b);

  // Brute-force enumeration over S x Q x S x Q.
  std::size_t nodes = 0, edges = 0;
  for (std::size_t s = 0; s < sc.ts.num_states(); ++s) {
    for (std::size_t q = 0; q < b.num_states(); ++q) {
      ++nodes;
      for (int e : sc.ts.out_edges(static_cast<int>(s))) {
        const int t = sc.ts.edge(e).to;
        for (std::size_t p = 0; p < b.num_states(); ++p) {
          edges += guard_step(b, static_cast<int>(q), sc.ts.labels(t), static_cast<int>(p));
        }
      }
    }
  }
  CHECK(g.num_nodes() == nodes);
  CHECK(g.num_edges() == edges);
  CHECK(g.num_nodes() == 6);
  for (int n = 0; n < static_cast<int>(g.num_nodes()); ++n) {
    CHECK((g.node_class(n) == NodeClass::Target) == b.accepting(g.node(n).automaton_state));
  }
  const auto c3 = *sc.ts.find_state("c3");
  const auto s_prod = system_product(sc.ts, b);
  CHECK(s_prod.find_node(c3, 1).has_value());
}

TEST_CASE("sync_product: unit automaton and edgeless system") {
  const Scenario sc = build_corridor(4, 2, {4}, {1});
  BuchiAutomaton unit;
  unit.add_state("u", false);
  unit.add_transition(0, PropFormula::truth(), 0);
  unit.add_initial(0);
  const auto g = sync_product(sc.ts, unit);
  CHECK(g.num_nodes() == sc.ts.num_states());
  CHECK(g.num_edges() == sc.ts.num_edges());

  TransitionSystem lonely(sc.ts.props());
  lonely.add_initial(lonely.add_state("only"));
  CHECK(sync_product(lonely, unit).num_edges() == 0);
}

TEST_CASE("sync_product: guards over undeclared propositions are rejected") {
  const Scenario sc = build_corridor(3, 1, {3}, {2});
  BuchiAutomaton b;
  b.add_state("q", false);
  b.add_transition(0, PropFormula::atom(40), 0);
  b.add_initial(0);
  try {
    sync_product(sc.ts, b);
    FAIL("expected PropositionMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::PropositionMismatch);
  }
}

TEST_CASE("spec_product: goal times two keys") {
  PropositionTable props({"goal", "k1", "k2"});
  const auto b_sys = build_nba(parse_spec("<> (goal)", SpecRole::System, props), props);
  const auto b_test = build_nba(parse_spec("<> (k1) && <> (k2)", SpecRole::Test, props), props);
  const auto bpi = spec_product(b_sys, b_test);
  CHECK(bpi.num_states() == 8);
  const int both = bpi.state_of(1, 3);
  CHECK(bpi.acc_sys(both));
  CHECK(bpi.acc_test(both));
  for (int q = 0; q < static_cast<int>(bpi.num_states()); ++q) {
    CHECK(bpi.automaton.accepting(q) == (bpi.acc_sys(q) || bpi.acc_test(q)));
  }
  CHECK(bpi.automaton.is_deterministic_and_complete(7));

  // Lockstep with the factors on every label sequence of length <= 4.
  const int q0 = bpi.automaton.initial_state();
  for (int len = 1; len <= 4; ++len) {
    for (int code = 0; code < (1 << (3 * len)); ++code) {
      int q = q0, a = b_sys.initial_state(), b = b_test.initial_state();
      for (int i = 0; i < len; ++i) {
        const LabelSet l = (code >> (3 * i)) & 7;
        q = bpi.step(q, l);
        a = b_sys.step(a, l);
        b = b_test.step(b, l);
      }
      REQUIRE(bpi.sys_component(q) == a);
      REQUIRE(bpi.test_component(q) == b);
    }
  }
}

TEST_CASE("spec_product: self product stays on the diagonal") {
  PropositionTable props({"a", "b"});
  const auto b = build_nba(parse_spec("<> (a) && <> (b)", SpecRole::Test, props), props);
  const auto p = spec_product(b, b);
  std::set<int> seen{p.automaton.initial_state()};
  std::vector<int> stack(seen.begin(), seen.end());
  while (!stack.empty()) {
    const int q = stack.back();
    stack.pop_back();
    CHECK(p.sys_component(q) == p.test_component(q));
    for (LabelSet l = 0; l < 4; ++l) {
      const int r = p.step(q, l);
      if (seen.insert(r).second) stack.push_back(r);
    }
  }
}

TEST_CASE("async_product: each transition moves one coordinate") {
  PropositionTable props({"a", "b"});
  const auto b1 = build_nba(parse_spec("<> (a)", SpecRole::System, props), props);
  const auto b2 = build_nba(parse_spec("<> (b)", SpecRole::System, props), props);
  const auto p = async_product({b1, b2});
  CHECK(p.num_states() == 4);
  for (const auto& t : p.automaton.transitions()) {
    const auto& u = p.components[t.from];
    const auto& v = p.components[t.to];
    CHECK((u[0] != v[0]) + (u[1] != v[1]) <= 1);
  }
  const auto q = spec_product(b1, b2, ProductMode::Asynchronous);
  CHECK(q.automaton.transitions().size() == p.automaton.transitions().size());
  CHECK(q.mode == ProductMode::Asynchronous);
}

TEST_CASE("property: product soundness on bundled scenarios") {
  for (const auto& name : bundled_scenario_names()) {
    CAPTURE(name);
    const auto p = pipeline(name);
    check_sound(p->system, p->scenario.ts,
                [&](int q, LabelSet l, int r) { return p->b_sys.step(q, l) == r; });
    check_sound(p->graph.graph, p->scenario.ts,
                [&](int q, LabelSet l, int r) { return p->graph.bpi.step(q, l) == r; });
    for (int n = 0; n < static_cast<int>(p->system.num_nodes()); ++n) {
      CHECK(p->system.node(n).automaton_state != p->b_sys.fail_state().value_or(-1));
    }
  }
}

TEST_CASE("property: S, I, T follow the set definitions") {
  for (const auto& name : bundled_scenario_names()) {
    CAPTURE(name);
    const auto p = pipeline(name);
    const auto& g = p->graph;
    std::vector<int> source, inter, target;
    for (int n = 0; n < static_cast<int>(g.graph.num_nodes()); ++n) {
      const auto& comp = g.bpi.components[g.graph.node(n).automaton_state];
      const bool acc_sys = p->b_sys.accepting(comp[0]);
      const bool acc_test = p->b_test.accepting(comp[1]);
      if (acc_sys) target.push_back(n);
      if (acc_test && !acc_sys) inter.push_back(n);
      const bool initial = std::count(g.graph.initial().begin(), g.graph.initial().end(), n) > 0;
      if (initial && !acc_sys && !acc_test) source.push_back(n);
      // Acceptance union: flagged nodes are in T or I.
      if (g.bpi.automaton.accepting(g.graph.node(n).automaton_state)) CHECK((acc_sys || acc_test));
    }
    const auto sets = classify_nodes(g);
    CHECK(sets.source == source);
    CHECK(sets.intermediate == inter);
    CHECK(sets.target == target);
    for (int n : sets.source) {
      CHECK(std::find(inter.begin(), inter.end(), n) == inter.end());
      CHECK(std::find(target.begin(), target.end(), n) == target.end());
    }
  }
}

TEST_CASE("property: G paths replay the automaton runs") {
  std::mt19937_64 rng(99);
  for (const auto& name : bundled_scenario_names()) {
    CAPTURE(name);
    const auto p = pipeline(name);
    const auto& g = p->graph.graph;
    const auto& ts = p->scenario.ts;
    for (int trial = 0; trial < 100; ++trial) {
      int node = g.initial().front();
      int qs = p->b_sys.step(p->b_sys.initial_state(), ts.labels(g.node(node).ts_state));
      int qt = p->b_test.step(p->b_test.initial_state(), ts.labels(g.node(node).ts_state));
      for (int step = 0; step < 30; ++step) {
        const int q = project_to_bpi(p->graph, node);
        REQUIRE(p->graph.bpi.sys_component(q) == qs);
        REQUIRE(p->graph.bpi.test_component(q) == qt);
        const auto& out = g.out_edges(node);
        if (out.empty()) break;
        node = g.edge(out[rng() % out.size()]).to;
        const LabelSet l = ts.labels(project_to_ts(p->graph, node));
        qs = p->b_sys.step(qs, l);
        qt = p->b_test.step(qt, l);
      }
    }
  }
}

TEST_CASE("virtual_product: corridor structure") {
  const auto p = pipeline("corridor-5");
  const auto& g = p->graph;
  REQUIRE(g.graph.initial().size() == 1);
  CHECK(g.graph.node_class(g.graph.initial().front()) == NodeClass::Source);
  const auto sets = classify_nodes(g);
  CHECK_FALSE(sets.intermediate.empty());
  CHECK_FALSE(sets.target.empty());
  // Target nodes are not expanded.
  for (int n : sets.target) CHECK(g.graph.out_edges(n).empty());
}

TEST_CASE("classify_nodes: empty classes") {
  // Key unreachable behind a wall: no intermediate node.
  PropositionTable props({"goal", "key"});
  const Scenario sc = build_grid("#####\n#S.g#\n###k#\n#####\n", {{'g', {"goal"}}, {'k', {"key"}}}, props);
  const auto b_sys = build_nba(parse_spec("<> (goal)", SpecRole::System, props), props);
  const auto b_test = build_nba(parse_spec("<> (key)", SpecRole::Test, props), props);
  const auto g = virtual_product(sc.ts, spec_product(b_sys, b_test));
  try {
    classify_nodes(g);
    FAIL("expected EmptyIntermediate");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyIntermediate);
  }

  // Start on the goal: the initial node is already a target.
  const Scenario one = build_corridor(2, 1, {1}, {2});
  PropositionTable p1 = one.ts.props();
  const auto bs = build_nba(parse_spec("<> (goal)", SpecRole::System, p1), p1);
  const auto bt = build_nba(parse_spec("<> (key_1)", SpecRole::Test, p1), p1);
  const auto g1 = virtual_product(one.ts, spec_product(bs, bt));
  REQUIRE(g1.graph.num_nodes() == 1);
  CHECK(g1.graph.node_class(0) == NodeClass::Target);
  CHECK(node_sets(g1).source.empty());
}

TEST_CASE("map_bpi_to_g and active_cut_candidates partition G") {
  const auto p = pipeline("corridor-5");
  const auto& g = p->graph;
  std::vector<int> nodes, edges;
  for (int q = 0; q < static_cast<int>(g.bpi.num_states()); ++q) {
    for (int n : map_bpi_to_g(g, q)) {
      nodes.push_back(n);
      CHECK(project_to_bpi(g, n) == q);
    }
    for (int e : active_cut_candidates(g, q)) edges.push_back(e);
  }
  std::sort(nodes.begin(), nodes.end());
  std::sort(edges.begin(), edges.end());
  CHECK(nodes.size() == g.graph.num_nodes());
  CHECK(std::adjacent_find(nodes.begin(), nodes.end()) == nodes.end());
  CHECK(edges.size() == g.graph.num_edges());
  CHECK(std::adjacent_find(edges.begin(), edges.end()) == edges.end());
  CHECK_THROWS_AS(map_bpi_to_g(g, -1), Error);

  // In the initial context the only moves are the two steps away from c3.
  const int q0 = project_to_bpi(g, g.graph.initial().front());
  const auto c0 = active_cut_candidates(g, q0);
  std::set<std::string> moves;
  for (int e : c0) moves.insert(p->scenario.ts.describe_edge(g.graph.edge(e).ts_edge));
  CHECK(moves == std::set<std::string>{"(c3 --left--> c2)", "(c3 --right--> c4)"});
}

TEST_CASE("projections to the system product") {
  const auto p = pipeline("corridor-5");
  const auto& g = p->graph;
  std::map<std::pair<int, int>, std::set<int>> preimage;
  for (int n = 0; n < static_cast<int>(g.graph.num_nodes()); ++n) {
    const auto key = project_node_to_system(g, n);
    CHECK(key.q_sys == g.bpi.sys_component(project_to_bpi(g, n)));
    CHECK(p->system.find_node(key.ts_state, key.q_sys).has_value());
    preimage[{key.ts_state, key.q_sys}].insert(n);
    const auto in_context = map_bpi_to_g(g, project_to_bpi(g, n));
    CHECK(std::count(in_context.begin(), in_context.end(), n) == 1);
  }
  // Several test states share one system node.
  std::size_t largest = 0;
  for (const auto& [k, v] : preimage) largest = std::max(largest, v.size());
  CHECK(largest > 1);

  for (int e = 0; e < static_cast<int>(g.graph.num_edges()); ++e) {
    const int se = map_cut_to_system(g, p->system, e);
    CHECK(p->system.edge(se).ts_edge == g.graph.edge(e).ts_edge);
  }
}

TEST_CASE("context_system_cuts keeps the larger value on shared images") {
  const auto p = pipeline("corridor-5");
  const auto& g = p->graph;
  std::vector<double> values(g.graph.num_edges(), 0.0);
  for (int q = 0; q < static_cast<int>(g.bpi.num_states()); ++q) {
    const auto cand = active_cut_candidates(g, q);
    if (cand.empty()) continue;
    for (std::size_t i = 0; i < cand.size(); ++i) values[cand[i]] = 0.25 * static_cast<double>(i % 4);
    const auto cuts = context_system_cuts(g, p->system, q, values);
    for (int e : cand) {
      const int se = map_cut_to_system(g, p->system, e);
      REQUIRE(cuts.count(se));
      CHECK(cuts.at(se) >= values[e]);
    }
  }
}

TEST_CASE("source-return assumption") {
  for (const auto& name : bundled_scenario_names()) {
    CAPTURE(name);
    const auto p = pipeline(name);
    CHECK(check_source_return_assumption(p->system, system_sources(p->graph, p->system)).ok);
  }

  // One-way chain a -> b -> c.
  TransitionSystem ts;
  const int a = ts.add_state("a"), b = ts.add_state("b"), c = ts.add_state("c");
  ts.add_edge(a, "go", b);
  ts.add_edge(b, "go", c);
  ts.add_initial(a);
  BuchiAutomaton unit;
  unit.add_state("u", false);
  unit.add_transition(0, PropFormula::truth(), 0);
  unit.add_initial(0);
  const auto chain = system_product(ts, unit);
  const auto report = check_source_return_assumption(chain);
  CHECK_FALSE(report.ok);
  CHECK(report.violating.size() == 2);

  TransitionSystem loop;
  const int s = loop.add_state("s");
  loop.add_edge(s, "stay", s);
  loop.add_initial(s);
  CHECK(check_source_return_assumption(system_product(loop, unit)).ok);
}

TEST_CASE("graph_hash is stable and sensitive") {
  const auto a = pipeline("corridor-5");
  const auto b = pipeline("corridor-5");
  const auto c = pipeline("corridor-7");
  CHECK(a->hash == b->hash);
  CHECK(a->hash != c->hash);
  CHECK(a->hash.size() == 16);
}

}  // TEST_SUITE
