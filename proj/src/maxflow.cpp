#include "reactest/maxflow.hpp"

#include <algorithm>

#include "reactest/error.hpp"

namespace reactest {

FlowNetwork::FlowNetwork(int num_nodes) : n_(num_nodes), adj_(num_nodes + 2) {}

int FlowNetwork::add_arc_pair(int from, int to, std::int64_t cap) {
  const int id = static_cast<int>(arcs_.size());
  arcs_.push_back({to, cap});
  arcs_.push_back({from, 0});
  adj_[from].push_back(id);
  adj_[to].push_back(id + 1);
  return id;
}

int FlowNetwork::add_edge(int from, int to, std::int64_t capacity) {
  if (from < 0 || from >= n_ || to < 0 || to >= n_ || capacity < 0) {
    throw Error(ErrorKind::InvalidArgument, "bad flow edge");
  }
  const int id = add_arc_pair(from, to, capacity);
  original_.resize(arcs_.size(), 0);
  original_[id] = capacity;
  return id;
}

std::int64_t FlowNetwork::max_flow(std::span<const int> sources, std::span<const int> sinks) {
  const int src = n_;
  const int snk = n_ + 1;
  // Drop super arcs left over from a previous call.
  adj_[src].clear();
  adj_[snk].clear();
  for (auto& list : adj_) {
    list.erase(std::remove_if(list.begin(), list.end(),
                              [&](int a) { return a >= static_cast<int>(original_.size()); }),
               list.end());
  }
  arcs_.resize(original_.size());
  for (std::size_t a = 0; a < original_.size(); a += 2) {
    arcs_[a].cap = original_[a];
    arcs_[a + 1].cap = 0;
  }
  for (int s : sources) add_arc_pair(src, s, kInfinite);
  for (int t : sinks) add_arc_pair(t, snk, kInfinite);

  std::int64_t total = 0;
  std::vector<int> parent(n_ + 2);
  while (true) {
    std::fill(parent.begin(), parent.end(), -1);
    std::vector<int> queue{src};
    parent[src] = -2;
    for (std::size_t head = 0; head < queue.size() && parent[snk] == -1; ++head) {
      const int u = queue[head];
      for (int a : adj_[u]) {
        const int v = arcs_[a].to;
        if (arcs_[a].cap > 0 && parent[v] == -1) {
          parent[v] = a;
          queue.push_back(v);
        }
      }
    }
    if (parent[snk] == -1) break;
    std::int64_t push = kInfinite;
    for (int v = snk; v != src; v = arcs_[parent[v] ^ 1].to) push = std::min(push, arcs_[parent[v]].cap);
    if (push >= kInfinite) return kInfinite;  // source connected to sink by unbounded arcs
    for (int v = snk; v != src; v = arcs_[parent[v] ^ 1].to) {
      arcs_[parent[v]].cap -= push;
      arcs_[parent[v] ^ 1].cap += push;
    }
    total += push;
  }
  reach_.assign(n_ + 2, false);
  std::vector<int> queue{src};
  reach_[src] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (int a : adj_[queue[head]]) {
      const int v = arcs_[a].to;
      if (arcs_[a].cap > 0 && !reach_[v]) {
        reach_[v] = true;
        queue.push_back(v);
      }
    }
  }
  return total;
}

std::int64_t FlowNetwork::flow(int edge) const { return original_.at(edge) - arcs_.at(edge).cap; }

std::vector<bool> FlowNetwork::source_side() const {
  return std::vector<bool>(reach_.begin(), reach_.begin() + n_);
}

}  // namespace reactest
