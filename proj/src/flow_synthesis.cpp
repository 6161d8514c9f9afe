#include "reactest/flow_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "reactest/error.hpp"
#include "reactest/maxflow.hpp"
#include "reactest/milp.hpp"

namespace reactest {

std::string_view to_string(SolverMode m) {
  return m == SolverMode::ExactMilp ? "exact-milp" : "relaxed-iterative";
}

SolverMode parse_solver_mode(std::string_view text) {
  if (text == "exact" || text == "exact-milp") return SolverMode::ExactMilp;
  if (text == "relaxed" || text == "relaxed-iterative") return SolverMode::RelaxedIterative;
  throw Error(ErrorKind::InvalidArgument, "unknown solver mode '" + std::string(text) + "'");
}

namespace {

std::vector<bool> cut_mask(const FlowProblem& p, std::span<const int> cuts) {
  std::vector<bool> mask(p.num_edges(), false);
  for (int e : cuts) {
    if (e < 0 || e >= static_cast<int>(mask.size())) {
      throw Error(ErrorKind::InvalidArgument, "cut edge id out of range");
    }
    mask[e] = true;
  }
  return mask;
}

std::int64_t bypass_flow(const FlowProblem& p, const std::vector<bool>& cut) {
  const auto& g = p.graph->graph;
  FlowNetwork net(static_cast<int>(g.num_nodes()));
  for (int e = 0; e < static_cast<int>(g.num_edges()); ++e) {
    const auto& ed = g.edge(e);
    if (cut[e] || p.is_intermediate[ed.from] || p.is_intermediate[ed.to]) continue;
    net.add_edge(ed.from, ed.to, 1);
  }
  return net.max_flow(p.sets.source, p.sets.target);
}

std::int64_t system_flow(const FlowProblem& p, const std::vector<bool>& blocked_system_edges) {
  const auto& s = *p.system;
  FlowNetwork net(static_cast<int>(s.num_nodes()));
  for (int e = 0; e < static_cast<int>(s.num_edges()); ++e) {
    if (!blocked_system_edges.empty() && blocked_system_edges[e]) continue;
    net.add_edge(s.edge(e).from, s.edge(e).to, 1);
  }
  return net.max_flow(p.system_sources, p.system_targets);
}

}  // namespace

std::size_t FlowProblem::variable_count() const {
  return 4 * num_edges() + 1 + system->num_edges() * graph->bpi.num_states();
}

FlowProblem build_flow_problem(const VirtualProductGraph& g, const ProductGraph& s_prod,
                               double lambda) {
  if (lambda < 0) throw Error(ErrorKind::InvalidArgument, "lambda must be nonnegative");
  FlowProblem p;
  p.graph = &g;
  p.system = &s_prod;
  p.lambda = lambda;
  p.sets = node_sets(g);
  if (p.sets.source.empty()) throw Error(ErrorKind::EmptyClass, "no source nodes in G");
  if (p.sets.intermediate.empty()) throw Error(ErrorKind::EmptyClass, "no intermediate nodes in G");
  if (p.sets.target.empty()) throw Error(ErrorKind::EmptyClass, "no target nodes in G");
  p.is_intermediate.assign(g.graph.num_nodes(), false);
  for (int v : p.sets.intermediate) p.is_intermediate[v] = true;

  p.system_sources = system_sources(g, s_prod);
  p.system_targets = system_targets(g, s_prod);
  p.uncut_system_flow = system_flow(p, {});

  for (int q = 0; q < static_cast<int>(g.bpi.num_states()); ++q) {
    const auto candidates = active_cut_candidates(g, q);
    if (p.uncut_system_flow == 0) {
      p.unsatisfiable_contexts.push_back(q);
      continue;
    }
    if (candidates.empty()) continue;
    std::vector<std::pair<int, int>> images;
    for (int e : candidates) images.emplace_back(map_cut_to_system(g, s_prod, e), e);
    p.contexts.push_back(q);
    p.context_images.push_back(std::move(images));
  }
  return p;
}

VerificationReport verify_cuts(const FlowProblem& p, std::span<const int> cuts) {
  const auto cut = cut_mask(p, cuts);
  const auto& g = p.graph->graph;
  VerificationReport r;
  r.bypass_flow = bypass_flow(p, cut);

  FlowNetwork net(static_cast<int>(g.num_nodes()));
  for (int e = 0; e < static_cast<int>(g.num_edges()); ++e) {
    if (!cut[e]) net.add_edge(g.edge(e).from, g.edge(e).to, 1);
  }
  r.flow_si = net.max_flow(p.sets.source, p.sets.intermediate);
  r.flow_it = net.max_flow(p.sets.intermediate, p.sets.target);

  r.min_context_flow = p.uncut_system_flow;
  if (p.unsatisfiable_contexts.empty()) {
    for (std::size_t c = 0; c < p.contexts.size(); ++c) {
      std::vector<bool> blocked(p.system->num_edges(), false);
      for (const auto& [se, ge] : p.context_images[c]) {
        if (cut[ge]) blocked[se] = true;
      }
      const auto f = system_flow(p, blocked);
      r.min_context_flow = std::min(r.min_context_flow, f);
      if (f == 0) r.failing_contexts.push_back(p.contexts[c]);
    }
  }
  r.total_flow = std::min({r.flow_si, r.flow_it, r.min_context_flow});
  return r;
}

LpFlowResult lp_max_flow(int num_nodes, std::span<const FlowArc> arcs, std::span<const int> sources,
                         std::span<const int> sinks) {
  std::vector<int> role(num_nodes, 0);  // 1 source, 2 sink
  for (int s : sources) role.at(s) = 1;
  for (int t : sinks) role.at(t) = 2;
  LinearProgram lp;
  lp.set_direction(Direction::Maximize);
  std::vector<std::vector<LpTerm>> balance(num_nodes);
  std::vector<int> vars;
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const auto& arc = arcs[a];
    double gain = 0.0;
    if (role[arc.from] == 1) gain += 1.0;
    if (role[arc.to] == 1) gain -= 1.0;
    const int v = lp.add_variable("f" + std::to_string(a), 0.0, arc.capacity, gain);
    vars.push_back(v);
    balance[arc.from].push_back({v, 1.0});
    balance[arc.to].push_back({v, -1.0});
  }
  for (int n = 0; n < num_nodes; ++n) {
    if (role[n] == 0 && !balance[n].empty()) {
      lp.add_constraint("bal" + std::to_string(n), balance[n], Sense::Equal, 0.0);
    }
  }
  const auto sol = simplex_solve(lp);
  if (sol.status != LpStatus::Optimal) {
    throw Error(ErrorKind::NumericalInstability, "max-flow LP did not solve to optimality");
  }
  return {sol.objective, sol.values};
}

namespace {

/// Min-cut LP. A positive `reach` rewards every free potential, which among
/// all minimum cuts selects the one closest to the sinks.
LpFlowResult min_cut_lp(int num_nodes, std::span<const FlowArc> arcs, std::span<const int> sources,
                        std::span<const int> sinks, double reach) {
  LinearProgram lp;
  std::vector<int> pi(num_nodes);
  std::vector<double> lo(num_nodes, 0.0), hi(num_nodes, 1.0);
  for (int s : sources) lo.at(s) = hi.at(s) = 1.0;
  for (int t : sinks) lo.at(t) = hi.at(t) = 0.0;
  for (int n = 0; n < num_nodes; ++n) {
    pi[n] = lp.add_variable("pi" + std::to_string(n), lo[n], hi[n], lo[n] == hi[n] ? 0.0 : -reach);
  }
  std::vector<int> y;
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    y.push_back(lp.add_variable("y" + std::to_string(a), 0.0, 1.0, arcs[a].capacity));
    lp.add_constraint("cut" + std::to_string(a),
                      {{y.back(), 1.0}, {pi[arcs[a].from], -1.0}, {pi[arcs[a].to], 1.0}},
                      Sense::GreaterEqual, 0.0);
  }
  const auto sol = simplex_solve(lp);
  if (sol.status != LpStatus::Optimal) {
    throw Error(ErrorKind::NumericalInstability, "min-cut LP did not solve to optimality");
  }
  LpFlowResult r{0.0, {}};
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    r.arc_values.push_back(sol.values[y[a]]);
    r.value += arcs[a].capacity * sol.values[y[a]];
  }
  return r;
}

}  // namespace

LpFlowResult lp_min_cut(int num_nodes, std::span<const FlowArc> arcs, std::span<const int> sources,
                        std::span<const int> sinks) {
  return min_cut_lp(num_nodes, arcs, sources, sinks, 0.0);
}

namespace {

/// Bypass arcs of G (both endpoints outside I) with capacities 1 - cut.
std::vector<FlowArc> bypass_arcs(const FlowProblem& p, std::span<const double> cut_fraction,
                                 std::vector<int>* edge_of_arc) {
  const auto& g = p.graph->graph;
  std::vector<FlowArc> arcs;
  for (int e = 0; e < static_cast<int>(g.num_edges()); ++e) {
    const auto& ed = g.edge(e);
    if (p.is_intermediate[ed.from] || p.is_intermediate[ed.to]) continue;
    const double c = cut_fraction.empty() ? 0.0 : cut_fraction[e];
    arcs.push_back({ed.from, ed.to, std::max(0.0, 1.0 - c)});
    if (edge_of_arc) edge_of_arc->push_back(e);
  }
  return arcs;
}

}  // namespace

double bypass_dual_value(const FlowProblem& p, std::span<const int> cuts) {
  const auto mask = cut_mask(p, cuts);
  std::vector<double> frac(mask.size());
  for (std::size_t e = 0; e < mask.size(); ++e) frac[e] = mask[e] ? 1.0 : 0.0;
  const auto arcs = bypass_arcs(p, frac, nullptr);
  return lp_min_cut(static_cast<int>(p.graph->graph.num_nodes()), arcs, p.sets.source,
                    p.sets.target)
      .value;
}

namespace {

struct Commodity {
  std::vector<bool> source;
  std::vector<bool> sink;
};

std::vector<bool> membership(std::size_t n, std::span<const int> nodes) {
  std::vector<bool> m(n, false);
  for (int v : nodes) m[v] = true;
  return m;
}

/// Adds conservation rows at every node that is neither a source nor a sink
/// of the commodity and returns the net-outflow terms of its source set.
std::vector<LpTerm> add_commodity_rows(LinearProgram& lp, const ProductGraph& g,
                                       const std::vector<int>& var, const Commodity& k,
                                       const std::string& tag, std::size_t* rows) {
  for (int v = 0; v < static_cast<int>(g.num_nodes()); ++v) {
    if (k.source[v] || k.sink[v]) continue;
    std::vector<LpTerm> terms;
    for (int e : g.in_edges(v)) {
      if (var[e] >= 0) terms.push_back({var[e], 1.0});
    }
    for (int e : g.out_edges(v)) {
      if (var[e] >= 0) terms.push_back({var[e], -1.0});
    }
    if (terms.empty()) continue;
    lp.add_constraint("cons_" + tag + "_" + std::to_string(v), std::move(terms), Sense::Equal, 0.0);
    if (rows) ++*rows;
  }
  std::vector<LpTerm> out;
  for (int v = 0; v < static_cast<int>(g.num_nodes()); ++v) {
    if (!k.source[v]) continue;
    for (int e : g.out_edges(v)) {
      if (var[e] >= 0) out.push_back({var[e], 1.0});
    }
    for (int e : g.in_edges(v)) {
      if (var[e] >= 0) out.push_back({var[e], -1.0});
    }
  }
  return out;
}

}  // namespace

NormalizedProgram normalized_program(const FlowProblem& p, bool include_bypass_commodity,
                                     std::span<const double> bypass_weight) {
  const auto& g = p.graph->graph;
  const auto& s = *p.system;
  const std::size_t n = g.num_nodes();
  const int m = static_cast<int>(g.num_edges());
  NormalizedProgram np;
  LinearProgram& lp = np.lp;

  np.t = lp.add_variable("t", 0.0, kInf, 1.0);
  for (int e = 0; e < m; ++e) {
    const std::string id = std::to_string(e);
    np.d.push_back(lp.add_variable("d_" + id));
    np.f_si.push_back(lp.add_variable("fsi_" + id));
    np.f_it.push_back(lp.add_variable("fit_" + id));
    if (include_bypass_commodity) {
      const bool touches_i = p.is_intermediate[g.edge(e).from] || p.is_intermediate[g.edge(e).to];
      np.f_st.push_back(lp.add_variable("fst_" + id, 0.0, touches_i ? 0.0 : kInf));
    }
  }
  // c1 for d (the flow bounds follow from c2).
  for (int e = 0; e < m; ++e) {
    lp.add_constraint("c1_" + std::to_string(e), {{np.d[e], 1.0}, {np.t, -1.0}}, Sense::LessEqual,
                      0.0);
  }
  // c2
  for (int e = 0; e < m; ++e) {
    const std::string id = std::to_string(e);
    lp.add_constraint("c2si_" + id, {{np.d[e], 1.0}, {np.f_si[e], 1.0}, {np.t, -1.0}},
                      Sense::LessEqual, 0.0);
    lp.add_constraint("c2it_" + id, {{np.d[e], 1.0}, {np.f_it[e], 1.0}, {np.t, -1.0}},
                      Sense::LessEqual, 0.0);
    np.cut_rows += 2;
    if (include_bypass_commodity) {
      lp.add_constraint("c2st_" + id, {{np.d[e], 1.0}, {np.f_st[e], 1.0}, {np.t, -1.0}},
                        Sense::LessEqual, 0.0);
      ++np.cut_rows;
    }
  }
  // c3 and c4
  const auto src = membership(n, p.sets.source);
  const auto mid = membership(n, p.sets.intermediate);
  const auto tgt = membership(n, p.sets.target);
  auto si_out = add_commodity_rows(lp, g, np.f_si, {src, mid}, "si", &np.conservation_rows);
  auto it_out = add_commodity_rows(lp, g, np.f_it, {mid, tgt}, "it", &np.conservation_rows);
  lp.add_constraint("c4_si", std::move(si_out), Sense::Equal, 1.0);
  lp.add_constraint("c4_it", std::move(it_out), Sense::Equal, 1.0);
  if (include_bypass_commodity) {
    auto st_out = add_commodity_rows(lp, g, np.f_st, {src, tgt}, "st", &np.conservation_rows);
    for (const auto& term : st_out) {
      lp.set_cost(term.var, lp.variable(term.var).cost + p.lambda * term.coef);
    }
  }
  if (!bypass_weight.empty()) {
    double total = 0.0;
    for (int e = 0; e < m; ++e) {
      if (bypass_weight[e] == 0.0) continue;
      total += bypass_weight[e];
      lp.set_cost(np.d[e], -p.lambda * bypass_weight[e]);
    }
    lp.set_cost(np.t, 1.0 + p.lambda * total);
  }

  // c5/c6: one S flow per B_pi state.
  if (p.unsatisfiable_contexts.empty()) {
    const auto s_src = membership(s.num_nodes(), p.system_sources);
    const auto s_tgt = membership(s.num_nodes(), p.system_targets);
    std::map<int, std::size_t> context_index;
    for (std::size_t c = 0; c < p.contexts.size(); ++c) context_index[p.contexts[c]] = c;
    for (int q = 0; q < static_cast<int>(p.graph->bpi.num_states()); ++q) {
      const std::string tag = "q" + std::to_string(q);
      std::vector<int> f;
      for (int e = 0; e < static_cast<int>(s.num_edges()); ++e) {
        f.push_back(lp.add_variable("fs_" + tag + "_" + std::to_string(e)));
      }
      std::vector<std::vector<int>> mapped(s.num_edges());
      if (auto it = context_index.find(q); it != context_index.end()) {
        for (const auto& [se, ge] : p.context_images[it->second]) mapped[se].push_back(ge);
      }
      for (int e = 0; e < static_cast<int>(s.num_edges()); ++e) {
        const std::string id = tag + "_" + std::to_string(e);
        if (mapped[e].empty()) {
          lp.add_constraint("c6cap_" + id, {{f[e], 1.0}, {np.t, -1.0}}, Sense::LessEqual, 0.0);
        }
        for (int ge : mapped[e]) {
          lp.add_constraint("c6cut_" + id + "_" + std::to_string(ge),
                            {{f[e], 1.0}, {np.d[ge], 1.0}, {np.t, -1.0}}, Sense::LessEqual, 0.0);
        }
      }
      auto out = add_commodity_rows(lp, s, f, {s_src, s_tgt}, "s" + tag, &np.conservation_rows);
      lp.add_constraint("c6_" + tag, std::move(out), Sense::GreaterEqual, 1.0);
      np.f_ctx.push_back(std::move(f));
    }
  }
  return np;
}

DualizedProgram dualize_bypass(const FlowProblem& p, std::optional<int> bypass_limit) {
  const auto& g = p.graph->graph;
  const auto& s = *p.system;
  const std::size_t n = g.num_nodes();
  const int m = static_cast<int>(g.num_edges());
  DualizedProgram dp;
  LinearProgram& lp = dp.lp;
  lp.set_direction(Direction::Maximize);
  dp.weight = static_cast<double>(m + 1);

  dp.F = lp.add_variable("F", 1.0, static_cast<double>(std::max(m, 1)), dp.weight, true);
  for (int e = 0; e < m; ++e) {
    const std::string id = std::to_string(e);
    dp.b.push_back(lp.add_variable("b_" + id, 0.0, 1.0, -1.0, true));
    dp.g_si.push_back(lp.add_variable("gsi_" + id, 0.0, 1.0));
    dp.g_it.push_back(lp.add_variable("git_" + id, 0.0, 1.0));
  }
  for (int e = 0; e < m; ++e) {
    const std::string id = std::to_string(e);
    lp.add_constraint("capsi_" + id, {{dp.g_si[e], 1.0}, {dp.b[e], 1.0}}, Sense::LessEqual, 1.0);
    lp.add_constraint("capit_" + id, {{dp.g_it[e], 1.0}, {dp.b[e], 1.0}}, Sense::LessEqual, 1.0);
  }
  const auto src = membership(n, p.sets.source);
  const auto mid = membership(n, p.sets.intermediate);
  const auto tgt = membership(n, p.sets.target);
  auto si_out = add_commodity_rows(lp, g, dp.g_si, {src, mid}, "si", nullptr);
  auto it_out = add_commodity_rows(lp, g, dp.g_it, {mid, tgt}, "it", nullptr);
  si_out.push_back({dp.F, -1.0});
  it_out.push_back({dp.F, -1.0});
  lp.add_constraint("flow_si", std::move(si_out), Sense::Equal, 0.0);
  lp.add_constraint("flow_it", std::move(it_out), Sense::Equal, 0.0);

  // Min-cut dual of the bypass flow over the non-intermediate nodes. The
  // edge dual y_e = max(0, pi_u - pi_v) is folded into z_e >= y_e - b_e.
  // Potentials stay continuous: once b is integral the min-cut LP is exact.
  dp.pi.assign(n, -1);
  for (int v = 0; v < static_cast<int>(n); ++v) {
    if (mid[v]) continue;
    const double lo = src[v] ? 1.0 : 0.0;
    const double hi = tgt[v] ? 0.0 : 1.0;
    dp.pi[v] = lp.add_variable("pi_" + std::to_string(v), lo, hi);
  }
  dp.z.assign(m, -1);
  std::vector<LpTerm> bypass;
  for (int e = 0; e < m; ++e) {
    const auto& ed = g.edge(e);
    if (mid[ed.from] || mid[ed.to]) continue;
    const std::string id = std::to_string(e);
    dp.z[e] = lp.add_variable("z_" + id, 0.0, 1.0);
    // z >= (pi_u - pi_v) - M b with M = 1.
    lp.add_constraint("dual_" + id,
                      {{dp.z[e], 1.0}, {dp.pi[ed.from], -1.0}, {dp.pi[ed.to], 1.0}, {dp.b[e], 1.0}},
                      Sense::GreaterEqual, 0.0);
    bypass.push_back({dp.z[e], 1.0});
  }
  if (bypass_limit) {
    dp.bypass_row = lp.add_constraint("bypass", std::move(bypass), Sense::LessEqual,
                                      static_cast<double>(*bypass_limit));
  }

  if (p.unsatisfiable_contexts.empty()) {
    if (p.contexts.size() < p.graph->bpi.num_states()) {
      lp.set_bounds(dp.F, 1.0,
                    std::min(lp.variable(dp.F).upper, static_cast<double>(p.uncut_system_flow)));
    }
    const auto s_src = membership(s.num_nodes(), p.system_sources);
    const auto s_tgt = membership(s.num_nodes(), p.system_targets);
    for (std::size_t c = 0; c < p.contexts.size(); ++c) {
      const std::string tag = "q" + std::to_string(p.contexts[c]);
      std::vector<int> h;
      for (int e = 0; e < static_cast<int>(s.num_edges()); ++e) {
        h.push_back(lp.add_variable("h_" + tag + "_" + std::to_string(e), 0.0, 1.0));
      }
      for (const auto& [se, ge] : p.context_images[c]) {
        lp.add_constraint("ctx_" + tag + "_" + std::to_string(se) + "_" + std::to_string(ge),
                          {{h[se], 1.0}, {dp.b[ge], 1.0}}, Sense::LessEqual, 1.0);
      }
      auto out = add_commodity_rows(lp, s, h, {s_src, s_tgt}, "s" + tag, nullptr);
      out.push_back({dp.F, -1.0});
      lp.add_constraint("ctx_" + tag, std::move(out), Sense::GreaterEqual, 0.0);
    }
  }
  return dp;
}

// ---------------------------------------------------------------------------
// MCF-OPT

namespace {

struct ExactOutcome {
  bool feasible = false;
  std::int64_t flow = 0;
  std::vector<int> cuts;
  long nodes = 0;
};

MilpResult run_milp(const LinearProgram& lp, long node_limit, std::optional<double> stop_at) {
  MilpOptions mo;
  mo.integral_objective = true;
  mo.node_limit = node_limit;
  mo.stop_at = stop_at;
  auto r = branch_and_bound(lp, mo);
  if (r.node_limit_hit) {
    throw Error(ErrorKind::IterationLimit, "branch-and-bound node limit reached");
  }
  return r;
}

/// Maximizes F, then minimizes the cut count, then picks the
/// lexicographically smallest cut list by fixing b in edge order.
ExactOutcome solve_exact(const FlowProblem& p, std::optional<int> bypass_limit, long node_limit) {
  DualizedProgram dp = dualize_bypass(p, bypass_limit);
  ExactOutcome out;
  auto r = run_milp(dp.lp, node_limit, std::nullopt);
  out.nodes = r.nodes;
  if (r.status != LpStatus::Optimal) return out;

  const double F = std::round(r.values[dp.F]);
  int count = 0;
  for (int v : dp.b) count += static_cast<int>(std::round(r.values[v]));
  LinearProgram& lp = dp.lp;
  lp.set_bounds(dp.F, F, F);
  std::vector<LpTerm> all_b;
  for (int v : dp.b) all_b.push_back({v, 1.0});
  lp.add_constraint("count", std::move(all_b), Sense::Equal, count);
  const double key = dp.weight * F - count;

  std::vector<double> x = std::move(r.values);
  int fixed_ones = 0;
  for (std::size_t e = 0; e < dp.b.size(); ++e) {
    const int v = dp.b[e];
    if (fixed_ones == count) {
      lp.set_bounds(v, 0.0, 0.0);
      continue;
    }
    lp.set_bounds(v, 1.0, 1.0);
    if (std::round(x[v]) == 1.0) {
      ++fixed_ones;
      continue;
    }
    auto probe = run_milp(lp, node_limit, key);
    out.nodes += probe.nodes;
    if (probe.status == LpStatus::Optimal) {
      x = std::move(probe.values);
      ++fixed_ones;
    } else {
      lp.set_bounds(v, 0.0, 0.0);
    }
  }
  out.feasible = true;
  out.flow = static_cast<std::int64_t>(F);
  for (std::size_t e = 0; e < dp.b.size(); ++e) {
    if (lp.variable(dp.b[e]).lower == 1.0) out.cuts.push_back(static_cast<int>(e));
  }
  return out;
}

/// (value, cut count, cut list) ordering used to rank candidate solutions.
bool better_candidate(double value_a, const std::vector<int>& a, double value_b,
                      const std::vector<int>& b) {
  const double scale = std::max({1.0, std::abs(value_a), std::abs(value_b)});
  if (std::abs(value_a - value_b) > 1e-12 * scale) return value_a < value_b;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

CutSolution exact_solution(const FlowProblem& p, const ExactOutcome& o, bool hard) {
  CutSolution s;
  s.mode = SolverMode::ExactMilp;
  s.hard_bypass = hard;
  s.cuts = o.cuts;
  s.profile.assign(p.num_edges(), 0.0);
  for (int e : o.cuts) s.profile[e] = 1.0;
  s.verification = verify_cuts(p, s.cuts);
  s.total_flow = static_cast<double>(o.flow);
  s.bypass_flow = static_cast<double>(s.verification.bypass_flow);
  s.objective = (1.0 + p.lambda * s.bypass_flow) / s.total_flow;
  if (!hard) s.lambda = p.lambda;
  s.nodes = o.nodes;
  s.rounds = 1;
  return s;
}

CutSolution solve_exact_mode(const FlowProblem& p, const SolverOptions& options) {
  if (options.hard_bypass) {
    const auto o = solve_exact(p, 0, options.node_limit);
    if (!o.feasible) {
      throw Error(ErrorKind::Infeasible, "no cut set removes the bypass flow while keeping F >= 1");
    }
    return exact_solution(p, o, true);
  }
  // Soft penalty: (1 + lambda B) / F is minimized by scanning the bypass
  // bound k downwards; each solve maximizes F for bypass <= k.
  std::optional<CutSolution> best;
  long nodes = 0;
  std::int64_t k = bypass_flow(p, std::vector<bool>(p.num_edges(), false));
  while (k >= 0) {
    const auto o = solve_exact(p, static_cast<int>(k), options.node_limit);
    nodes += o.nodes;
    if (!o.feasible) break;
    auto s = exact_solution(p, o, false);
    if (!best || better_candidate(s.objective, s.cuts, best->objective, best->cuts)) best = s;
    k = s.verification.bypass_flow - 1;
  }
  if (!best) throw Error(ErrorKind::Infeasible, "no cut set keeps F >= 1");
  best->nodes = nodes;
  return *best;
}

constexpr double kCutPenalty = 1e-5;

CutSolution solve_relaxed_mode(const FlowProblem& p, const SolverOptions& options) {
  const int n = static_cast<int>(p.graph->graph.num_nodes());
  const std::size_t m = p.num_edges();
  std::vector<int> edge_of_arc;
  auto arcs = bypass_arcs(p, {}, &edge_of_arc);
  std::vector<double> weight(m, 0.0);
  // The bypass is linearized along a minimum cut. Cuts next to the sources
  // usually carry the tester's own flow too, so the one nearest the targets
  // is used.
  const double reach = 1e-4 / std::max(1, n);
  auto cut = min_cut_lp(n, arcs, p.sets.source, p.sets.target, reach);
  for (std::size_t a = 0; a < arcs.size(); ++a) weight[edge_of_arc[a]] = cut.arc_values[a];

  CutSolution best;
  best.mode = SolverMode::RelaxedIterative;
  best.hard_bypass = false;
  best.lambda = p.lambda;
  best.objective = kInf;
  best.converged = false;
  double previous = kInf;
  int round = 0;
  while (round < options.max_rounds) {
    ++round;
    auto np = normalized_program(p, false, weight);
    // Tie-break toward fewer cuts; the reported objective stays literal.
    for (int d : np.d) np.lp.set_cost(d, np.lp.variable(d).cost + kCutPenalty);
    const auto sol = simplex_solve(np.lp);
    if (sol.status != LpStatus::Optimal) {
      if (round == 1) throw Error(ErrorKind::Infeasible, "tester program is infeasible");
      break;
    }
    const double t = sol.values[np.t];
    std::vector<double> profile(m);
    for (std::size_t e = 0; e < m; ++e) {
      profile[e] = std::clamp(sol.values[np.d[e]] / t, 0.0, 1.0);
    }
    edge_of_arc.clear();
    arcs = bypass_arcs(p, profile, &edge_of_arc);
    cut = min_cut_lp(n, arcs, p.sets.source, p.sets.target, reach);
    const double bypass = cut.value;
    const double objective = t + p.lambda * t * bypass;
    if (objective < best.objective - 1e-12) {
      best.objective = objective;
      best.profile = profile;
      best.total_flow = 1.0 / t;
      best.bypass_flow = bypass;
    }
    if (std::abs(objective - previous) < options.convergence_tolerance) {
      best.converged = true;
      break;
    }
    previous = objective;
    std::fill(weight.begin(), weight.end(), 0.0);
    for (std::size_t a = 0; a < arcs.size(); ++a) weight[edge_of_arc[a]] = cut.arc_values[a];
  }
  best.rounds = round;
  best.cuts = extract_cuts(best, options.threshold);
  best.verification = verify_cuts(p, best.cuts);
  return best;
}

}  // namespace

CutSolution mcf_opt(const FlowProblem& p, const SolverOptions& options) {
  if (options.mode == SolverMode::ExactMilp) return solve_exact_mode(p, options);
  return solve_relaxed_mode(p, options);
}

std::vector<int> extract_cuts(const CutSolution& s, double threshold) {
  const double th = s.mode == SolverMode::ExactMilp ? 0.5 : threshold;
  std::vector<int> cuts;
  for (std::size_t e = 0; e < s.profile.size(); ++e) {
    if (s.profile[e] >= th) cuts.push_back(static_cast<int>(e));
  }
  return cuts;
}

CutSolution sweep_lambda(FlowProblem p, std::span<const double> grid,
                         const SolverOptions& options) {
  if (options.mode == SolverMode::ExactMilp && options.hard_bypass) return mcf_opt(p, options);
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty lambda grid");
  std::optional<CutSolution> best;
  for (double lambda : grid) {
    if (lambda < 0) throw Error(ErrorKind::InvalidArgument, "lambda must be nonnegative");
    p.lambda = lambda;
    CutSolution s;
    try {
      s = mcf_opt(p, options);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Infeasible) continue;
      throw;
    }
    if (!s.verification.passed()) continue;
    if (!best) {
      best = std::move(s);
      continue;
    }
    const auto fa = s.verification.total_flow;
    const auto fb = best->verification.total_flow;
    if (fa > fb || (fa == fb && (s.cuts.size() < best->cuts.size() ||
                                 (s.cuts.size() == best->cuts.size() && s.cuts < best->cuts)))) {
      best = std::move(s);
    }
  }
  if (!best) throw Error(ErrorKind::NoFeasibleLambda, "no lambda in the grid yields verified cuts");
  return *best;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

OracleResult brute_force_oracle(const FlowProblem& p, int max_cut_size) {
  const int m = static_cast<int>(p.num_edges());
  if (m > 25 && max_cut_size > 4) {
    throw Error(ErrorKind::TooLarge, "oracle limited to 25 edges or cut sets of size <= 4");
  }
  max_cut_size = std::min(max_cut_size, m);
  OracleResult result;
  std::vector<std::vector<int>> bypass_free;  // minimal sets with zero bypass
  auto has_free_subset = [&](const std::vector<int>& set) {
    for (const auto& f : bypass_free) {
      if (std::includes(set.begin(), set.end(), f.begin(), f.end())) return true;
    }
    return false;
  };
  for (int size = 0; size <= max_cut_size; ++size) {
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      if (!has_free_subset(idx)) {
        const auto r = verify_cuts(p, idx);
        if (r.bypass_ok()) {
          bypass_free.push_back(idx);
          if (r.flow_ok() && r.contexts_ok()) {
            const auto f = r.total_flow;
            if (result.optimal.empty() || f > result.best_flow) {
              result.best_flow = f;
              result.min_cut_count = idx.size();
              result.optimal = {idx};
            } else if (f == result.best_flow && idx.size() == result.min_cut_count) {
              result.optimal.push_back(idx);
            }
          }
        }
      }
      int i = size - 1;
      while (i >= 0 && idx[i] == m - size + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

std::string solution_to_json(const CutSolution& s, const FlowProblem& p,
                             const TransitionSystem& ts, const std::string& graph_hash) {
  using nlohmann::json;
  const auto& vg = *p.graph;
  const auto& g = vg.graph;
  json j;
  j["graph_hash"] = graph_hash;
  j["mode"] = std::string(to_string(s.mode));
  j["hard_bypass"] = s.hard_bypass;
  j["lambda"] = s.lambda ? json(*s.lambda) : json(nullptr);
  j["total_flow"] = s.total_flow;
  j["bypass_flow"] = s.bypass_flow;
  j["objective"] = s.objective;
  j["converged"] = s.converged;
  j["rounds"] = s.rounds;
  j["bb_nodes"] = s.nodes;
  json cuts = json::array();
  for (int e : s.cuts) {
    const auto& ed = g.edge(e);
    cuts.push_back({{"edge", e},
                    {"from", ed.from},
                    {"to", ed.to},
                    {"from_node", describe_node(vg, ts, ed.from)},
                    {"to_node", describe_node(vg, ts, ed.to)},
                    {"transition", ts.describe_edge(ed.ts_edge)},
                    {"value", s.profile.at(e)}});
  }
  j["cuts"] = cuts;
  json profile = json::array();
  for (std::size_t e = 0; e < s.profile.size(); ++e) {
    if (s.profile[e] > 1e-9) profile.push_back({{"edge", e}, {"value", s.profile[e]}});
  }
  j["profile"] = profile;
  const auto& v = s.verification;
  j["verification"] = {{"bypass_flow", v.bypass_flow},
                       {"flow_si", v.flow_si},
                       {"flow_it", v.flow_it},
                       {"min_context_flow", v.min_context_flow},
                       {"total_flow", v.total_flow},
                       {"failing_contexts", v.failing_contexts},
                       {"bypass_ok", v.bypass_ok()},
                       {"flow_ok", v.flow_ok()},
                       {"contexts_ok", v.contexts_ok()},
                       {"passed", v.passed()}};
  j["stats"] = {{"g_nodes", g.num_nodes()},
                {"g_edges", g.num_edges()},
                {"source_nodes", p.sets.source.size()},
                {"intermediate_nodes", p.sets.intermediate.size()},
                {"target_nodes", p.sets.target.size()},
                {"system_nodes", p.system->num_nodes()},
                {"system_edges", p.system->num_edges()},
                {"bpi_states", vg.bpi.num_states()},
                {"contexts", p.contexts.size()},
                {"normalized_variables", p.variable_count()}};
  return j.dump(2) + "\n";
}

}  // namespace reactest
