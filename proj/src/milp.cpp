#include "reactest/milp.hpp"

#include <cmath>
#include <queue>

#include "reactest/error.hpp"

namespace reactest {

namespace {

using BoundChange = SimplexEngine::BoundChange;

struct OpenNode {
  std::vector<BoundChange> changes;  // relative to the root
  double bound;                      // parent's bound, minimization sense
  int depth;
  long seq;
};

struct NodeOrder {
  bool operator()(const OpenNode& a, const OpenNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

}  // namespace

MilpResult branch_and_bound(const LinearProgram& lp, const MilpOptions& options) {
  const double sign = lp.direction() == Direction::Maximize ? -1.0 : 1.0;
  const double tol = options.integrality_tolerance;
  MilpResult result;
  double incumbent = kInf;  // minimization sense

  auto prunable = [&](double bound) {
    if (!std::isfinite(incumbent)) return false;
    if (options.integral_objective) return std::ceil(bound - 1e-6) >= incumbent - 1e-9;
    return bound >= incumbent - 1e-9;
  };
  auto good_enough = [&] {
    return options.stop_at && std::isfinite(incumbent) && incumbent <= sign * *options.stop_at + 1e-9;
  };

  std::priority_queue<OpenNode, std::vector<OpenNode>, NodeOrder> open;
  // Until an incumbent exists the search dives: the up child of the last
  // processed node is evaluated next and its sibling is queued.
  std::vector<OpenNode> dive;
  long seq = 0;

  // Evaluates a solved node: records an incumbent or pushes two children.
  auto process = [&](const SimplexEngine& engine, const std::vector<BoundChange>& changes, int depth) {
    const double bound = sign * engine.objective();
    if (prunable(bound)) return;
    auto x = engine.values();
    // Branch on the variable with the largest fractional part; on cut
    // indicators this is the edge the relaxation most wants to cut.
    int branch_var = -1;
    double best = -1.0;
    for (int j = 0; j < static_cast<int>(x.size()); ++j) {
      if (!lp.variable(j).integer) continue;
      if (std::abs(x[j] - std::round(x[j])) <= tol) continue;
      const double frac = x[j] - std::floor(x[j]);
      if (frac > best) {
        best = frac;
        branch_var = j;
      }
    }
    if (branch_var < 0) {
      auto rounded = x;
      for (int j = 0; j < static_cast<int>(x.size()); ++j) {
        if (lp.variable(j).integer) rounded[j] = std::round(x[j]);
      }
      if (lp.max_violation(rounded) <= options.lp.residual_tolerance) x = rounded;
      if (lp.max_violation(x) > options.lp.residual_tolerance) {
        throw Error(ErrorKind::NumericalInstability, "incumbent violates the program");
      }
      const double value = sign * lp.objective_value(x);
      if (value < incumbent) {
        incumbent = value;
        result.values = std::move(x);
        result.objective = lp.objective_value(result.values);
        result.status = LpStatus::Optimal;
      }
      return;
    }
    const double v = x[branch_var];
    const double lo = engine.lower(branch_var);
    const double hi = engine.upper(branch_var);
    auto down = changes;
    down.push_back({branch_var, lo, std::floor(v)});
    auto up = changes;
    up.push_back({branch_var, std::ceil(v), hi});
    if (!std::isfinite(incumbent)) {
      open.push({std::move(down), bound, depth + 1, seq++});
      dive.push_back({std::move(up), bound, depth + 1, seq++});
      return;
    }
    open.push({std::move(down), bound, depth + 1, seq++});
    open.push({std::move(up), bound, depth + 1, seq++});
  };

  SimplexEngine engine(lp, options.lp);
  const LpStatus root_status = engine.solve();
  result.nodes = 1;
  if (root_status == LpStatus::Unbounded) {
    result.status = LpStatus::Unbounded;
    return result;
  }
  if (root_status == LpStatus::Infeasible) return result;
  const SimplexEngine solved_root = engine;
  process(engine, {}, 0);

  // The working engine moves between nodes by bound changes; it is reset to
  // the root basis now and then to limit accumulated round-off.
  constexpr long kRefreshInterval = 256;
  long moves = 0;
  std::vector<BoundChange> diff;
  while ((!open.empty() || !dive.empty()) && !good_enough()) {
    if (result.nodes >= options.node_limit) {
      result.node_limit_hit = true;
      break;
    }
    OpenNode node;
    if (!dive.empty()) {
      node = std::move(dive.back());
      dive.pop_back();
    } else {
      node = open.top();
      open.pop();
    }
    if (prunable(node.bound)) continue;
    ++result.nodes;
    if (++moves % kRefreshInterval == 0) engine = solved_root;
    diff.clear();
    std::vector<char> touched(lp.num_variables(), 0);
    for (auto it = node.changes.rbegin(); it != node.changes.rend(); ++it) {
      if (touched[it->var]) continue;
      touched[it->var] = 1;
      if (engine.lower(it->var) != it->lower || engine.upper(it->var) != it->upper) diff.push_back(*it);
    }
    for (int j = 0; j < static_cast<int>(lp.num_variables()); ++j) {
      if (touched[j]) continue;
      const double lo = solved_root.lower(j);
      const double hi = solved_root.upper(j);
      if (engine.lower(j) != lo || engine.upper(j) != hi) diff.push_back({j, lo, hi});
    }
    const LpStatus status = engine.change_bounds(diff);
    if (status == LpStatus::Infeasible) continue;
    if (status != LpStatus::Optimal) {
      throw Error(ErrorKind::NumericalInstability, "node relaxation is unbounded");
    }
    process(engine, node.changes, node.depth);
  }
  return result;
}

}  // namespace reactest
