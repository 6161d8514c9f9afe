#include "reactest/products.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "reactest/error.hpp"

namespace reactest {

std::string_view to_string(NodeClass c) {
  switch (c) {
    case NodeClass::Plain:
      return "plain";
    case NodeClass::Source:
      return "source";
    case NodeClass::Intermediate:
      return "intermediate";
    case NodeClass::Target:
      return "target";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ProductGraph

int ProductGraph::add_node(Node node, NodeClass cls) {
  const auto k = key(node.ts_state, node.automaton_state);
  if (index_.count(k)) throw Error(ErrorKind::InvalidArgument, "duplicate product node");
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  classes_.push_back(cls);
  out_.emplace_back();
  in_.emplace_back();
  index_.emplace(k, id);
  return id;
}

int ProductGraph::add_edge(int from, int to, int ts_edge) {
  const int n = static_cast<int>(nodes_.size());
  if (from < 0 || from >= n || to < 0 || to >= n) {
    throw Error(ErrorKind::UnknownState, "product edge endpoint out of range");
  }
  const int id = static_cast<int>(edges_.size());
  edges_.push_back({from, to, ts_edge});
  out_[from].push_back(id);
  in_[to].push_back(id);
  return id;
}

void ProductGraph::add_initial(int node) {
  if (std::find(initial_.begin(), initial_.end(), node) == initial_.end()) {
    initial_.push_back(node);
  }
}

std::optional<int> ProductGraph::find_node(int ts_state, int automaton_state) const {
  auto it = index_.find(key(ts_state, automaton_state));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> ProductGraph::find_edge(int from, int ts_edge) const {
  for (int e : out_.at(from)) {
    if (edges_[e].ts_edge == ts_edge) return e;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// SpecProductAutomaton

int SpecProductAutomaton::state_of(std::span<const int> tuple) const {
  if (tuple.size() != factors.size()) throw Error(ErrorKind::UnknownState, "tuple arity mismatch");
  int id = 0;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const int n = static_cast<int>(factors[i].num_states());
    if (tuple[i] < 0 || tuple[i] >= n) throw Error(ErrorKind::UnknownState, "component out of range");
    id = id * n + tuple[i];
  }
  return id;
}

int SpecProductAutomaton::state_of(int q_sys, int q_test) const {
  const int t[2] = {q_sys, q_test};
  return state_of(std::span<const int>(t, 2));
}

bool SpecProductAutomaton::component_accepting(int q, std::size_t factor) const {
  return factors.at(factor).accepting(components.at(q).at(factor));
}

bool SpecProductAutomaton::in_fail(int q) const {
  for (std::size_t i = 0; i < factors.size(); ++i) {
    auto f = factors[i].fail_state();
    if (f && components.at(q)[i] == *f) return true;
  }
  return false;
}

bool SpecProductAutomaton::sys_failed(int q) const {
  auto f = factors.at(0).fail_state();
  return f && components.at(q)[0] == *f;
}

int SpecProductAutomaton::step(int q, LabelSet label) const {
  if (mode != ProductMode::Synchronous) {
    throw Error(ErrorKind::InvalidArgument, "step() requires a synchronous product");
  }
  std::vector<int> next(factors.size());
  for (std::size_t i = 0; i < factors.size(); ++i) {
    next[i] = factors[i].step(components.at(q)[i], label);
  }
  return state_of(next);
}

std::string SpecProductAutomaton::state_name(int q) const { return automaton.state_name(q); }

namespace {

void check_guard_support(const BuchiAutomaton& b, const PropositionTable& props) {
  const LabelSet declared =
      props.size() >= 64 ? ~LabelSet{0} : ((LabelSet{1} << props.size()) - 1);
  for (const auto& t : b.transitions()) {
    if (t.guard.support() & ~declared) {
      throw Error(ErrorKind::PropositionMismatch,
                  "automaton guard uses a proposition outside the transition system's AP");
    }
  }
}

// Enumerates the full tuple state space of the factors in row-major order.
SpecProductAutomaton make_tuple_states(const std::vector<BuchiAutomaton>& automata) {
  SpecProductAutomaton p;
  p.factors = automata;
  std::size_t total = 1;
  for (const auto& a : automata) total *= a.num_states();
  std::vector<int> tuple(automata.size(), 0);
  for (std::size_t id = 0; id < total; ++id) {
    std::size_t rem = id;
    for (std::size_t i = automata.size(); i-- > 0;) {
      tuple[i] = static_cast<int>(rem % automata[i].num_states());
      rem /= automata[i].num_states();
    }
    std::string name = "(";
    bool any_accepting = false;
    for (std::size_t i = 0; i < automata.size(); ++i) {
      if (i) name += ',';
      name += automata[i].state_name(tuple[i]);
      any_accepting = any_accepting || automata[i].accepting(tuple[i]);
    }
    p.automaton.add_state(name + ")", any_accepting);
    p.components.push_back(tuple);
  }
  // Q0 = Q0_1 x ... x Q0_n.
  std::vector<std::vector<int>> inits{{}};
  for (const auto& a : automata) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : inits) {
      for (int q0 : a.initial()) {
        auto t = prefix;
        t.push_back(q0);
        next.push_back(std::move(t));
      }
    }
    inits = std::move(next);
  }
  for (const auto& t : inits) p.automaton.add_initial(p.state_of(t));
  return p;
}

}  // namespace

ProductGraph sync_product(const TransitionSystem& ts, const BuchiAutomaton& b) {
  check_guard_support(b, ts.props());
  ProductGraph g(Provenance::SystemProduct);
  const int nq = static_cast<int>(b.num_states());
  for (int s = 0; s < static_cast<int>(ts.num_states()); ++s) {
    for (int q = 0; q < nq; ++q) {
      g.add_node({s, q}, b.accepting(q) ? NodeClass::Target : NodeClass::Plain);
    }
  }
  for (int e = 0; e < static_cast<int>(ts.num_edges()); ++e) {
    const auto& te = ts.edge(e);
    const LabelSet lt = ts.labels(te.to);
    for (int q = 0; q < nq; ++q) {
      for (int p : b.successors(q, lt)) {
        g.add_edge(te.from * nq + q, te.to * nq + p, e);
      }
    }
  }
  for (int s0 : ts.initial()) {
    for (int q0 : b.initial()) {
      for (int q : b.successors(q0, ts.labels(s0))) {
        const int id = s0 * nq + q;
        g.add_initial(id);
        if (g.node_class(id) != NodeClass::Target) g.set_class(id, NodeClass::Source);
      }
    }
  }
  return g;
}

SpecProductAutomaton async_product(const std::vector<BuchiAutomaton>& automata) {
  if (automata.size() < 2) {
    throw Error(ErrorKind::InvalidArgument, "asynchronous product needs at least two automata");
  }
  SpecProductAutomaton p = make_tuple_states(automata);
  p.mode = ProductMode::Asynchronous;
  for (std::size_t u = 0; u < p.components.size(); ++u) {
    const auto& tuple = p.components[u];
    for (std::size_t i = 0; i < automata.size(); ++i) {
      for (const auto& t : automata[i].transitions()) {
        if (t.from != tuple[i]) continue;
        auto v = tuple;
        v[i] = t.to;
        p.automaton.add_transition(static_cast<int>(u), t.guard, p.state_of(v));
      }
    }
  }
  return p;
}

SpecProductAutomaton spec_product(const BuchiAutomaton& b_sys, const BuchiAutomaton& b_test,
                                  ProductMode mode, const PropositionTable* props) {
  if (props) {
    check_guard_support(b_sys, *props);
    check_guard_support(b_test, *props);
  }
  if (mode == ProductMode::Asynchronous) return async_product({b_sys, b_test});

  SpecProductAutomaton p = make_tuple_states({b_sys, b_test});
  p.mode = ProductMode::Synchronous;
  for (std::size_t u = 0; u < p.components.size(); ++u) {
    const int qs = p.components[u][0];
    const int qt = p.components[u][1];
    for (const auto& ts : b_sys.transitions()) {
      if (ts.from != qs) continue;
      for (const auto& tt : b_test.transitions()) {
        if (tt.from != qt) continue;
        p.automaton.add_transition(static_cast<int>(u), ts.guard && tt.guard,
                                   p.state_of(ts.to, tt.to));
      }
    }
  }
  return p;
}

ProductGraph system_product(const TransitionSystem& ts, const BuchiAutomaton& b_sys) {
  ProductGraph full = sync_product(ts, b_sys);
  auto fail = b_sys.fail_state();
  return prune(full, [&](int n) { return !fail || full.node(n).automaton_state != *fail; });
}

VirtualProductGraph virtual_product(const TransitionSystem& ts, const SpecProductAutomaton& bpi) {
  if (bpi.mode != ProductMode::Synchronous) {
    throw Error(ErrorKind::InvalidArgument, "virtual product requires a synchronous B_pi");
  }
  if (bpi.factors.size() != 2) {
    throw Error(ErrorKind::InvalidArgument, "B_pi must have a system and a test factor");
  }
  for (const auto& f : bpi.factors) check_guard_support(f, ts.props());

  VirtualProductGraph vg;
  vg.bpi = bpi;
  ProductGraph& g = vg.graph;
  const int q0 = bpi.automaton.initial_state();

  auto classify = [&](int s, int q) {
    if (bpi.acc_sys(q)) return NodeClass::Target;
    if (bpi.acc_test(q)) return NodeClass::Intermediate;
    (void)s;
    return NodeClass::Plain;
  };

  std::vector<int> queue;
  for (int s0 : ts.initial()) {
    const int q = bpi.step(q0, ts.labels(s0));
    if (bpi.sys_failed(q) || g.find_node(s0, q)) continue;
    NodeClass cls = classify(s0, q);
    const int id = g.add_node({s0, q}, cls == NodeClass::Plain ? NodeClass::Source : cls);
    g.add_initial(id);
    queue.push_back(id);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    const auto [s, q] = g.node(u);
    if (bpi.acc_sys(q)) continue;
    for (int e : ts.out_edges(s)) {
      const int t = ts.edge(e).to;
      const int p = bpi.step(q, ts.labels(t));
      if (bpi.sys_failed(p)) continue;
      auto v = g.find_node(t, p);
      if (!v) {
        v = g.add_node({t, p}, classify(t, p));
        queue.push_back(*v);
      }
      g.add_edge(u, *v, e);
    }
  }
  return vg;
}

NodeSets node_sets(const VirtualProductGraph& g) {
  NodeSets sets;
  const auto& bpi = g.bpi;
  for (int n = 0; n < static_cast<int>(g.graph.num_nodes()); ++n) {
    const int q = g.graph.node(n).automaton_state;
    if (bpi.acc_sys(q)) {
      sets.target.push_back(n);
    } else if (bpi.acc_test(q)) {
      sets.intermediate.push_back(n);
    }
  }
  for (int n : g.graph.initial()) {
    const int q = g.graph.node(n).automaton_state;
    if (!bpi.acc_sys(q) && !bpi.acc_test(q)) sets.source.push_back(n);
  }
  std::sort(sets.source.begin(), sets.source.end());
  return sets;
}

NodeSets classify_nodes(const VirtualProductGraph& g) {
  NodeSets sets = node_sets(g);
  if (sets.target.empty()) {
    throw Error(ErrorKind::EmptyTarget, "no reachable node satisfies the system specification");
  }
  if (sets.intermediate.empty()) {
    throw Error(ErrorKind::EmptyIntermediate,
                "no reachable node satisfies the test specification before the system's");
  }
  return sets;
}

std::vector<int> map_bpi_to_g(const VirtualProductGraph& g, int bpi_state) {
  if (bpi_state < 0 || bpi_state >= static_cast<int>(g.bpi.num_states())) {
    throw Error(ErrorKind::UnknownState, "B_pi state " + std::to_string(bpi_state));
  }
  std::vector<int> out;
  for (int n = 0; n < static_cast<int>(g.graph.num_nodes()); ++n) {
    if (g.graph.node(n).automaton_state == bpi_state) out.push_back(n);
  }
  return out;
}

std::vector<int> active_cut_candidates(const VirtualProductGraph& g, int bpi_state) {
  std::vector<int> out;
  for (int n : map_bpi_to_g(g, bpi_state)) {
    for (int e : g.graph.out_edges(n)) out.push_back(e);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SystemNodeKey project_node_to_system(const VirtualProductGraph& g, int node) {
  const auto& n = g.graph.node(node);
  return {n.ts_state, g.bpi.sys_component(n.automaton_state)};
}

int map_cut_to_system(const VirtualProductGraph& g, const ProductGraph& s_prod, int g_edge) {
  const auto& e = g.graph.edge(g_edge);
  const auto u = project_node_to_system(g, e.from);
  const auto v = project_node_to_system(g, e.to);
  auto su = s_prod.find_node(u.ts_state, u.q_sys);
  if (!su) throw Error(ErrorKind::DanglingEdge, "source image missing from system product");
  auto se = s_prod.find_edge(*su, e.ts_edge);
  if (!se || s_prod.node(s_prod.edge(*se).to).ts_state != v.ts_state ||
      s_prod.node(s_prod.edge(*se).to).automaton_state != v.q_sys) {
    throw Error(ErrorKind::DanglingEdge, "edge image missing from system product");
  }
  return *se;
}

std::map<int, double> context_system_cuts(const VirtualProductGraph& g, const ProductGraph& s_prod,
                                          int bpi_state, std::span<const double> cut_values) {
  std::map<int, double> out;
  for (int e : active_cut_candidates(g, bpi_state)) {
    const double d = cut_values[e];
    const int se = map_cut_to_system(g, s_prod, e);
    auto [it, inserted] = out.emplace(se, d);
    if (!inserted) it->second = std::max(it->second, d);
  }
  return out;
}

int project_to_ts(const VirtualProductGraph& g, int node) { return g.graph.node(node).ts_state; }

int project_to_bpi(const VirtualProductGraph& g, int node) {
  return g.graph.node(node).automaton_state;
}

namespace {

std::vector<int> image_nodes(const VirtualProductGraph& g, const ProductGraph& s_prod,
                             const std::vector<int>& nodes) {
  std::vector<int> out;
  for (int n : nodes) {
    const auto key = project_node_to_system(g, n);
    auto id = s_prod.find_node(key.ts_state, key.q_sys);
    if (!id) throw Error(ErrorKind::DanglingEdge, "node image missing from system product");
    out.push_back(*id);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

std::vector<int> system_sources(const VirtualProductGraph& g, const ProductGraph& s_prod) {
  return image_nodes(g, s_prod, node_sets(g).source);
}

std::vector<int> system_targets(const VirtualProductGraph& g, const ProductGraph& s_prod) {
  return image_nodes(g, s_prod, node_sets(g).target);
}

SourceReturnReport check_source_return_assumption(const ProductGraph& s_prod,
                                                  std::span<const int> sources) {
  // Reverse BFS from the sources.
  std::vector<bool> reaches(s_prod.num_nodes(), false);
  std::vector<int> queue(sources.begin(), sources.end());
  for (int s : queue) reaches[s] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (int e : s_prod.in_edges(queue[head])) {
      const int u = s_prod.edge(e).from;
      if (!reaches[u]) {
        reaches[u] = true;
        queue.push_back(u);
      }
    }
  }
  SourceReturnReport report;
  for (int n = 0; n < static_cast<int>(s_prod.num_nodes()); ++n) {
    if (!reaches[n] && s_prod.node_class(n) != NodeClass::Target) report.violating.push_back(n);
  }
  report.ok = report.violating.empty();
  return report;
}

SourceReturnReport check_source_return_assumption(const ProductGraph& s_prod) {
  return check_source_return_assumption(s_prod, s_prod.initial());
}

std::string describe_node(const VirtualProductGraph& g, const TransitionSystem& ts, int node) {
  const auto& n = g.graph.node(node);
  return "(" + ts.state_name(n.ts_state) + "," + g.bpi.state_name(n.automaton_state) + ")";
}

std::string describe_node(const ProductGraph& s_prod, const BuchiAutomaton& b,
                          const TransitionSystem& ts, int node) {
  const auto& n = s_prod.node(node);
  return "(" + ts.state_name(n.ts_state) + "," + b.state_name(n.automaton_state) + ")";
}

std::string graph_hash(const VirtualProductGraph& g, const TransitionSystem& ts) {
  std::ostringstream os;
  for (int n = 0; n < static_cast<int>(g.graph.num_nodes()); ++n) {
    os << 'n' << n << ' ' << describe_node(g, ts, n) << ' ' << to_string(g.graph.node_class(n))
       << ' ' << ts.props().format(ts.labels(g.graph.node(n).ts_state)) << '\n';
  }
  for (const auto& e : g.graph.edges()) {
    os << 'e' << e.from << ' ' << e.to << ' ' << ts.action_name(ts.edge(e.ts_edge).action) << '\n';
  }
  for (int i : g.graph.initial()) os << 'i' << i << '\n';
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace reactest
