#pragma once

// Best-first branch and bound over the warm-started simplex engine.

#include <optional>
#include <vector>

#include "reactest/lp.hpp"

namespace reactest {

struct MilpOptions {
  double integrality_tolerance = 1e-6;
  /// The objective takes integer values at integer points; enables
  /// rounding the node bound up before pruning.
  bool integral_objective = false;
  long node_limit = 2000000;
  /// Stop as soon as an incumbent at least this good is found.
  std::optional<double> stop_at;
  SimplexOptions lp;
};

struct MilpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> values;
  long nodes = 0;
  bool node_limit_hit = false;
};

MilpResult branch_and_bound(const LinearProgram& lp, const MilpOptions& options = {});

}  // namespace reactest
