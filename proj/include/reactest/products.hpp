#pragma once

// Product constructions over a transition system and Buchi automata, node
// classification of the virtual product graph and the projections between
// the virtual product, the system product and the physical system.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "reactest/ltl.hpp"
#include "reactest/transition_system.hpp"

namespace reactest {

enum class NodeClass { Plain, Source, Intermediate, Target };
enum class Provenance { SystemProduct, VirtualProduct, SpecProduct };

std::string_view to_string(NodeClass c);

/// Directed graph whose nodes pair a transition-system state with an
/// automaton state. Every edge remembers the transition-system edge it
/// was lifted from, which carries the action.
class ProductGraph {
 public:
  struct Node {
    int ts_state;
    int automaton_state;
  };
  struct Edge {
    int from;
    int to;
    int ts_edge;
  };

  explicit ProductGraph(Provenance provenance = Provenance::SystemProduct)
      : provenance_(provenance) {}

  int add_node(Node node, NodeClass cls = NodeClass::Plain);
  int add_edge(int from, int to, int ts_edge);
  void add_initial(int node);
  void set_class(int node, NodeClass cls) { classes_.at(node) = cls; }

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const Node& node(int id) const { return nodes_.at(id); }
  const Edge& edge(int id) const { return edges_.at(id); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<int>& out_edges(int node) const { return out_.at(node); }
  const std::vector<int>& in_edges(int node) const { return in_.at(node); }
  const std::vector<int>& initial() const { return initial_; }
  NodeClass node_class(int node) const { return classes_.at(node); }
  Provenance provenance() const { return provenance_; }

  std::optional<int> find_node(int ts_state, int automaton_state) const;
  /// Edge leaving `from` that lifts the given transition-system edge.
  std::optional<int> find_edge(int from, int ts_edge) const;

 private:
  static std::uint64_t key(int s, int q) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s)) << 32) |
           static_cast<std::uint32_t>(q);
  }

  Provenance provenance_;
  std::vector<Node> nodes_;
  std::vector<NodeClass> classes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
  std::vector<int> initial_;
  std::unordered_map<std::uint64_t, int> index_;
};

enum class ProductMode { Synchronous, Asynchronous };

/// Product of several automata over tuple states with union acceptance.
/// Factor 0 is the system automaton and factor 1 the test automaton.
struct SpecProductAutomaton {
  BuchiAutomaton automaton;
  std::vector<BuchiAutomaton> factors;
  std::vector<std::vector<int>> components;  // per product state
  ProductMode mode = ProductMode::Synchronous;

  std::size_t num_states() const { return automaton.num_states(); }
  /// Product state holding the given tuple (row-major numbering).
  int state_of(std::span<const int> tuple) const;
  int state_of(int q_sys, int q_test) const;
  int sys_component(int q) const { return components.at(q).at(0); }
  int test_component(int q) const { return components.at(q).at(1); }
  bool component_accepting(int q, std::size_t factor) const;
  bool acc_sys(int q) const { return component_accepting(q, 0); }
  bool acc_test(int q) const { return component_accepting(q, 1); }
  /// True if any component sits in its factor's `fail` sink.
  bool in_fail(int q) const;
  bool sys_failed(int q) const;
  /// Synchronous step: every component moves on the same label.
  int step(int q, LabelSet label) const;
  std::string state_name(int q) const;
};

/// Def. 1 product T (x) B over the full state space S x Q.
ProductGraph sync_product(const TransitionSystem& ts, const BuchiAutomaton& b);

/// Interleaving product: exactly one component moves per transition.
SpecProductAutomaton async_product(const std::vector<BuchiAutomaton>& automata);

SpecProductAutomaton spec_product(const BuchiAutomaton& b_sys, const BuchiAutomaton& b_test,
                                  ProductMode mode = ProductMode::Synchronous,
                                  const PropositionTable* props = nullptr);

/// Copy of `g` restricted to nodes reachable from its initial nodes, with
/// nodes rejected by `keep` removed first.
template <typename Keep>
ProductGraph prune(const ProductGraph& g, Keep keep);

/// System product S = T (x) B_sys: fail-free, reachable part, accepting
/// nodes marked Target and initial nodes marked Source.
ProductGraph system_product(const TransitionSystem& ts, const BuchiAutomaton& b_sys);

struct VirtualProductGraph {
  ProductGraph graph{Provenance::VirtualProduct};
  SpecProductAutomaton bpi;
};

/// G = T (x) B_pi restricted to nodes reachable from the initial nodes.
/// Nodes whose system component failed are dropped; system-accepting
/// nodes are not expanded (the run ends there).
VirtualProductGraph virtual_product(const TransitionSystem& ts, const SpecProductAutomaton& bpi);

struct NodeSets {
  std::vector<int> source;
  std::vector<int> intermediate;
  std::vector<int> target;
};

/// Recomputes the S/I/T sets. Initial nodes that are already accepting for
/// either specification belong to T or I instead of S.
NodeSets classify_nodes(const VirtualProductGraph& g);
/// Same sets without the emptiness checks.
NodeSets node_sets(const VirtualProductGraph& g);

std::vector<int> map_bpi_to_g(const VirtualProductGraph& g, int bpi_state);
std::vector<int> active_cut_candidates(const VirtualProductGraph& g, int bpi_state);

struct SystemNodeKey {
  int ts_state;
  int q_sys;
  bool operator==(const SystemNodeKey&) const = default;
};
SystemNodeKey project_node_to_system(const VirtualProductGraph& g, int node);
/// Image of a virtual-product edge on the system product (DanglingEdge if
/// the image edge does not exist).
int map_cut_to_system(const VirtualProductGraph& g, const ProductGraph& s_prod, int g_edge);
/// C_S(q): system-product edges constrained in context q with their cut
/// value; colliding images keep the maximum.
std::map<int, double> context_system_cuts(const VirtualProductGraph& g, const ProductGraph& s_prod,
                                          int bpi_state, std::span<const double> cut_values);
int project_to_ts(const VirtualProductGraph& g, int node);
int project_to_bpi(const VirtualProductGraph& g, int node);

/// System-product node images of G's source and target nodes.
std::vector<int> system_sources(const VirtualProductGraph& g, const ProductGraph& s_prod);
std::vector<int> system_targets(const VirtualProductGraph& g, const ProductGraph& s_prod);

struct SourceReturnReport {
  bool ok = true;
  std::vector<int> violating;  // s_prod nodes with no path back to a source
};
/// Every non-accepting node of S must reach a source. Accepting nodes are
/// exempt: the run stops there and they cannot leave acceptance.
SourceReturnReport check_source_return_assumption(const ProductGraph& s_prod,
                                                  std::span<const int> sources);
SourceReturnReport check_source_return_assumption(const ProductGraph& s_prod);

std::string describe_node(const VirtualProductGraph& g, const TransitionSystem& ts, int node);
std::string describe_node(const ProductGraph& s_prod, const BuchiAutomaton& b,
                          const TransitionSystem& ts, int node);

/// FNV-1a digest of a canonical serialization of G (nodes, edges, classes).
std::string graph_hash(const VirtualProductGraph& g, const TransitionSystem& ts);

// ---------------------------------------------------------------------------

template <typename Keep>
ProductGraph prune(const ProductGraph& g, Keep keep) {
  ProductGraph out(g.provenance());
  std::vector<int> remap(g.num_nodes(), -1);
  std::vector<int> queue;
  for (int s : g.initial()) {
    if (!keep(s) || remap[s] >= 0) continue;
    remap[s] = out.add_node(g.node(s), g.node_class(s));
    out.add_initial(remap[s]);
    queue.push_back(s);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const int u = queue[head];
    for (int e : g.out_edges(u)) {
      const int v = g.edge(e).to;
      if (!keep(v)) continue;
      if (remap[v] < 0) {
        remap[v] = out.add_node(g.node(v), g.node_class(v));
        queue.push_back(v);
      }
      out.add_edge(remap[u], remap[v], g.edge(e).ts_edge);
    }
  }
  return out;
}

}  // namespace reactest
