#pragma once

// Cut synthesis on the virtual product graph.
//
// The exact solver works with unnormalized flows: every edge has unit
// capacity, the tester maximizes the common flow value F of the S->I and
// I->T commodities, and the bypass commodity is replaced by the dual of its
// max-flow problem (a min cut over the non-intermediate nodes). Normalized
// values are recovered as t = 1/F and d = t * b.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reactest/lp.hpp"
#include "reactest/products.hpp"

namespace reactest {

enum class SolverMode { ExactMilp, RelaxedIterative };
std::string_view to_string(SolverMode m);
SolverMode parse_solver_mode(std::string_view text);

/// Inputs of MCF-OPT. Holds pointers to the graphs, which must outlive it.
struct FlowProblem {
  const VirtualProductGraph* graph = nullptr;
  const ProductGraph* system = nullptr;
  NodeSets sets;
  std::vector<bool> is_intermediate;
  double lambda = 0.0;
  /// B_pi states whose candidate set C_G(q) is nonempty.
  std::vector<int> contexts;
  /// Per context: (system edge, G edge) image pairs of C_G(q).
  std::vector<std::vector<std::pair<int, int>>> context_images;
  std::vector<int> system_sources;
  std::vector<int> system_targets;
  /// Unit-capacity max flow on S without cuts; bounds F from above.
  std::int64_t uncut_system_flow = 0;
  /// B_pi states whose context constraint was dropped because S has no
  /// source-to-target path at all.
  std::vector<int> unsatisfiable_contexts;

  std::size_t num_edges() const { return graph->graph.num_edges(); }
  /// Variables of the normalized program: three commodities and a cut per
  /// edge, t, and one context flow per system edge and B_pi state.
  std::size_t variable_count() const;
};

FlowProblem build_flow_problem(const VirtualProductGraph& g, const ProductGraph& s_prod,
                               double lambda = 0.0);

/// Normalized program over (t, d, f_SI, f_IT, f_ST, f_S(q)) with rows
/// c1-c6. `bypass_weight[e]` multiplies (t - d_e) in the objective when
/// given; f_ST is then omitted (its effect is carried by the weights).
struct NormalizedProgram {
  LinearProgram lp;
  int t = -1;
  std::vector<int> d, f_si, f_it, f_st;
  std::vector<std::vector<int>> f_ctx;  // [context][system edge]
  std::size_t conservation_rows = 0;
  std::size_t cut_rows = 0;
};
NormalizedProgram normalized_program(const FlowProblem& p, bool include_bypass_commodity,
                                     std::span<const double> bypass_weight = {});

/// Single-level program in which the bypass max flow is replaced by its
/// min-cut dual. Binary b_e marks a cut edge and potentials pi describe
/// the dual cut; z_e = max(0, pi_u - pi_v - b_e) is the uncut
/// capacity crossing it, so sum(z) bounds the bypass flow. Objective:
/// maximize (|E'|+1) F - sum(b).
struct DualizedProgram {
  LinearProgram lp;
  int F = -1;
  std::vector<int> b, g_si, g_it, z;
  std::vector<int> pi;  // per G node, -1 for intermediate nodes
  int bypass_row = -1;
  double weight = 1.0;  // |E'| + 1
};
DualizedProgram dualize_bypass(const FlowProblem& p, std::optional<int> bypass_limit);

struct FlowArc {
  int from;
  int to;
  double capacity;
};
struct LpFlowResult {
  double value = 0.0;
  std::vector<double> arc_values;  // flows, or cut indicators y_e
};
/// Max flow written as an LP and solved with the simplex solver.
LpFlowResult lp_max_flow(int num_nodes, std::span<const FlowArc> arcs, std::span<const int> sources,
                         std::span<const int> sinks);
/// Min-cut LP (the dual of lp_max_flow): potentials pi in [0,1] with
/// pi = 1 on sources and 0 on sinks, y_e >= pi_u - pi_v.
LpFlowResult lp_min_cut(int num_nodes, std::span<const FlowArc> arcs, std::span<const int> sources,
                        std::span<const int> sinks);

/// Min-cut dual value of the bypass flow for fixed cuts, solved as an LP.
double bypass_dual_value(const FlowProblem& p, std::span<const int> cuts);

struct VerificationReport {
  std::int64_t bypass_flow = 0;
  std::int64_t flow_si = 0;
  std::int64_t flow_it = 0;
  std::int64_t min_context_flow = 0;
  /// min(flow_si, flow_it, min_context_flow): the largest F the cut set
  /// admits.
  std::int64_t total_flow = 0;
  /// B_pi states whose S max flow under the cuts is zero.
  std::vector<int> failing_contexts;
  bool bypass_ok() const { return bypass_flow == 0; }
  bool flow_ok() const { return total_flow >= 1; }
  bool contexts_ok() const { return failing_contexts.empty(); }
  bool passed() const { return bypass_ok() && flow_ok() && contexts_ok(); }
};

/// Recomputes the bypass flow, F and every context flow on the cut graph
/// with an independent max-flow routine.
VerificationReport verify_cuts(const FlowProblem& p, std::span<const int> cuts);

struct CutSolution {
  std::vector<int> cuts;        // sorted G edge ids
  std::vector<double> profile;  // d/t per G edge
  double total_flow = 0.0;
  double bypass_flow = 0.0;
  double objective = 0.0;  // t + lambda * normalized bypass
  std::optional<double> lambda;
  SolverMode mode = SolverMode::ExactMilp;
  bool hard_bypass = true;
  bool converged = true;
  int rounds = 0;
  long nodes = 0;
  VerificationReport verification;
};

struct SolverOptions {
  SolverMode mode = SolverMode::ExactMilp;
  bool hard_bypass = true;
  double threshold = 0.9;
  int max_rounds = 100;
  double convergence_tolerance = 1e-6;
  long node_limit = 2000000;
};

/// Throws Infeasible when no cut set keeps F >= 1 and every context
/// feasible while meeting the bypass requirement.
CutSolution mcf_opt(const FlowProblem& p, const SolverOptions& options = {});

std::vector<int> extract_cuts(const CutSolution& s, double threshold = 0.9);

inline const std::vector<double> kDefaultLambdaGrid{0.1, 0.5, 1.0, 2.0, 5.0, 10.0};

/// Solves for every lambda and keeps the verified solution with the largest
/// F, then fewest cuts, then lexicographically smallest cut list. With the
/// hard bypass constraint in exact mode a single solve is returned and
/// lambda is left unset.
CutSolution sweep_lambda(FlowProblem p, std::span<const double> grid,
                         const SolverOptions& options = {});

struct OracleResult {
  std::int64_t best_flow = 0;
  std::size_t min_cut_count = 0;
  /// All keeper sets attaining best_flow with min_cut_count cuts, in
  /// lexicographic order.
  std::vector<std::vector<int>> optimal;
  bool feasible() const { return !optimal.empty(); }
};

/// Exhaustive search over cut subsets of size <= max_cut_size.
OracleResult brute_force_oracle(const FlowProblem& p, int max_cut_size);

std::string solution_to_json(const CutSolution& s, const FlowProblem& p,
                             const TransitionSystem& ts, const std::string& graph_hash);

}  // namespace reactest
