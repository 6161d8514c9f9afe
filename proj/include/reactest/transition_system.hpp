#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reactest/ltl.hpp"

namespace reactest {

/// Labelled transition system T = (S, A, E, I, AP, L). Edges are stored as
/// (from, action, to) triples; at most one successor per (state, action).
class TransitionSystem {
 public:
  struct Edge {
    int from;
    int action;
    int to;
  };

  explicit TransitionSystem(PropositionTable props = {}) : props_(std::move(props)) {}

  int add_state(const std::string& name, LabelSet labels = 0);
  int add_action(const std::string& name);  // returns existing index if present
  int add_edge(int from, const std::string& action, int to);
  void add_initial(int state);
  void set_labels(int state, LabelSet labels);

  std::size_t num_states() const { return state_names_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::string& state_name(int s) const { return state_names_.at(s); }
  std::optional<int> find_state(const std::string& name) const;
  const std::string& action_name(int a) const { return action_names_.at(a); }
  const std::vector<std::string>& actions() const { return action_names_; }
  std::optional<int> find_action(const std::string& name) const;
  LabelSet labels(int s) const { return labels_.at(s); }
  const std::vector<int>& initial() const { return initial_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int id) const { return edges_.at(id); }
  /// Outgoing edge ids, in insertion order.
  const std::vector<int>& out_edges(int s) const { return out_.at(s); }
  std::optional<int> find_edge(int from, int action) const;
  const PropositionTable& props() const { return props_; }

  /// "(from --action--> to)" for diagnostics.
  std::string describe_edge(int id) const;

  /// Throws InvalidArgument when |I| = 0.
  void validate() const;

 private:
  PropositionTable props_;
  std::vector<std::string> state_names_;
  std::unordered_map<std::string, int> state_index_;
  std::vector<std::string> action_names_;
  std::vector<LabelSet> labels_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<int> initial_;
};

}  // namespace reactest
