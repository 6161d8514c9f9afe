#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace reactest {

/// Integer-capacity max-flow (Edmonds-Karp). Multiple sources and sinks are
/// joined through implicit unbounded super arcs.
class FlowNetwork {
 public:
  static constexpr std::int64_t kInfinite = std::numeric_limits<std::int64_t>::max() / 4;

  explicit FlowNetwork(int num_nodes);

  int add_edge(int from, int to, std::int64_t capacity);
  std::int64_t max_flow(std::span<const int> sources, std::span<const int> sinks);
  /// Flow on an edge returned by add_edge, valid after max_flow().
  std::int64_t flow(int edge) const;
  /// Nodes on the source side of a minimum cut, valid after max_flow().
  std::vector<bool> source_side() const;

 private:
  struct Arc {
    int to;
    std::int64_t cap;
  };
  int add_arc_pair(int from, int to, std::int64_t cap);

  int n_;
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
  std::vector<std::int64_t> original_;
  std::vector<bool> reach_;
};

}  // namespace reactest
