#include "reactest/transition_system.hpp"

#include <algorithm>

#include "reactest/error.hpp"

namespace reactest {

int TransitionSystem::add_state(const std::string& name, LabelSet labels) {
  if (state_index_.count(name)) throw Error(ErrorKind::InvalidArgument, "duplicate state " + name);
  const int id = static_cast<int>(state_names_.size());
  state_names_.push_back(name);
  state_index_.emplace(name, id);
  labels_.push_back(labels);
  out_.emplace_back();
  return id;
}

int TransitionSystem::add_action(const std::string& name) {
  if (auto a = find_action(name)) return *a;
  action_names_.push_back(name);
  return static_cast<int>(action_names_.size()) - 1;
}

int TransitionSystem::add_edge(int from, const std::string& action, int to) {
  const int n = static_cast<int>(num_states());
  if (from < 0 || from >= n || to < 0 || to >= n) {
    throw Error(ErrorKind::UnknownState, "edge endpoint out of range");
  }
  const int a = add_action(action);
  if (find_edge(from, a)) {
    throw Error(ErrorKind::InvalidArgument,
                "state " + state_names_[from] + " already has a successor for action " + action);
  }
  const int id = static_cast<int>(edges_.size());
  edges_.push_back({from, a, to});
  out_[from].push_back(id);
  return id;
}

void TransitionSystem::add_initial(int state) {
  if (state < 0 || state >= static_cast<int>(num_states())) {
    throw Error(ErrorKind::UnknownState, "initial state out of range");
  }
  if (std::find(initial_.begin(), initial_.end(), state) == initial_.end()) {
    initial_.push_back(state);
  }
}

void TransitionSystem::set_labels(int state, LabelSet labels) { labels_.at(state) = labels; }

std::optional<int> TransitionSystem::find_state(const std::string& name) const {
  auto it = state_index_.find(name);
  if (it == state_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> TransitionSystem::find_action(const std::string& name) const {
  auto it = std::find(action_names_.begin(), action_names_.end(), name);
  if (it == action_names_.end()) return std::nullopt;
  return static_cast<int>(it - action_names_.begin());
}

std::optional<int> TransitionSystem::find_edge(int from, int action) const {
  for (int e : out_.at(from)) {
    if (edges_[e].action == action) return e;
  }
  return std::nullopt;
}

std::string TransitionSystem::describe_edge(int id) const {
  const Edge& e = edges_.at(id);
  return "(" + state_names_[e.from] + " --" + action_names_[e.action] + "--> " +
         state_names_[e.to] + ")";
}

void TransitionSystem::validate() const {
  if (initial_.empty()) throw Error(ErrorKind::InvalidArgument, "transition system has no initial state");
}

}  // namespace reactest
