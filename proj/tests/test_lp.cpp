#include <doctest.h>

#include <cmath>
#include <random>

#include "reactest/error.hpp"
#include "reactest/flow_synthesis.hpp"
#include "reactest/lp.hpp"
#include "reactest/maxflow.hpp"
#include "reactest/milp.hpp"

using namespace reactest;

namespace {

struct RandomDigraph {
  int n = 0;
  std::vector<FlowArc> arcs;
};

RandomDigraph random_digraph(std::mt19937_64& rng) {
  RandomDigraph g;
  g.n = std::uniform_int_distribution<int>(2, 12)(rng);
  const double density = std::uniform_real_distribution<double>(0.1, 0.5)(rng);
  for (int u = 0; u < g.n; ++u) {
    for (int v = 0; v < g.n; ++v) {
      if (u != v && std::bernoulli_distribution(density)(rng)) g.arcs.push_back({u, v, 1.0});
    }
  }
  return g;
}

std::int64_t edmonds_karp(const RandomDigraph& g, int s, int t) {
  FlowNetwork net(g.n);
  for (const auto& a : g.arcs) net.add_edge(a.from, a.to, static_cast<std::int64_t>(a.capacity));
  const std::vector<int> src{s}, snk{t};
  return net.max_flow(src, snk);
}

}  // namespace

TEST_SUITE("lp") {

TEST_CASE("simplex: textbook two-variable program") {
  LinearProgram lp;
  lp.set_direction(Direction::Maximize);
  const int x = lp.add_variable("x", 0, kInf, 1);
  const int y = lp.add_variable("y", 0, kInf, 1);
  lp.add_constraint("cx", {{x, 1}}, Sense::LessEqual, 1);
  lp.add_constraint("cy", {{y, 1}}, Sense::LessEqual, 2);
  const auto s = simplex_solve(lp);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(lp.max_violation(s.values) < 1e-9);
}

TEST_CASE("simplex: diamond max flow") {
  const std::vector<FlowArc> arcs{{0, 1, 1}, {0, 2, 1}, {1, 3, 1}, {2, 3, 1}};
  const std::vector<int> s{0}, t{3};
  CHECK(lp_max_flow(4, arcs, s, t).value == doctest::Approx(2.0));
  CHECK(lp_min_cut(4, arcs, s, t).value == doctest::Approx(2.0));
}

TEST_CASE("simplex: infeasible and unbounded programs") {
  LinearProgram a;
  const int x = a.add_variable("x");
  a.add_constraint("up", {{x, 1}}, Sense::LessEqual, 0);
  a.add_constraint("down", {{x, 1}}, Sense::GreaterEqual, 1);
  CHECK(simplex_solve(a).status == LpStatus::Infeasible);

  LinearProgram b;
  b.set_direction(Direction::Maximize);
  const int y = b.add_variable("y", 0, kInf, 1);
  b.add_constraint("lo", {{y, 1}}, Sense::GreaterEqual, 1);
  CHECK(simplex_solve(b).status == LpStatus::Unbounded);
}

TEST_CASE("simplex: equality rows and negative bounds") {
  // min x + 2y s.t. x + y = 3, x - y <= 1, x in [-5, 5], y in [-10, 10].
  LinearProgram lp;
  const int x = lp.add_variable("x", -5, 5, 1);
  const int y = lp.add_variable("y", -10, 10, 2);
  lp.add_constraint("sum", {{x, 1}, {y, 1}}, Sense::Equal, 3);
  lp.add_constraint("gap", {{x, 1}, {y, -1}}, Sense::LessEqual, 1);
  const auto s = simplex_solve(lp);
  REQUIRE(s.status == LpStatus::Optimal);
  CHECK(s.values[x] == doctest::Approx(2.0));
  CHECK(s.values[y] == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(4.0));

  LinearProgram free;
  free.add_variable("y", -kInf, kInf, 1);
  CHECK_THROWS_AS(simplex_solve(free), Error);
}

TEST_CASE("property: max flow equals min cut on random unit digraphs") {
  std::mt19937_64 rng(123);
  int mismatches = 0;
  for (int i = 0; i < 100; ++i) {
    const auto g = random_digraph(rng);
    const std::vector<int> s{0}, t{g.n - 1};
    const double flow = lp_max_flow(g.n, g.arcs, s, t).value;
    const double cut = lp_min_cut(g.n, g.arcs, s, t).value;
    const auto reference = static_cast<double>(edmonds_karp(g, 0, g.n - 1));
    if (std::round(flow) != std::round(cut) || std::abs(flow - cut) > 1e-9) ++mismatches;
    CHECK(flow == doctest::Approx(reference));
  }
  CHECK(mismatches == 0);
}

TEST_CASE("property: warm-started bound changes match fresh solves") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    LinearProgram lp;
    lp.set_direction(Direction::Maximize);
    const int n = 6;
    for (int j = 0; j < n; ++j) {
      lp.add_variable("x" + std::to_string(j), 0, 4, std::uniform_int_distribution<int>(-3, 5)(rng));
    }
    for (int r = 0; r < 5; ++r) {
      std::vector<LpTerm> terms;
      for (int j = 0; j < n; ++j) terms.push_back({j, static_cast<double>(std::uniform_int_distribution<int>(0, 4)(rng))});
      lp.add_constraint("r" + std::to_string(r), terms, Sense::LessEqual, std::uniform_int_distribution<int>(4, 20)(rng));
    }
    SimplexEngine engine(lp);
    REQUIRE(engine.solve() == LpStatus::Optimal);
    LinearProgram copy = lp;
    for (int step = 0; step < 6; ++step) {
      const int j = std::uniform_int_distribution<int>(0, n - 1)(rng);
      const double lo = std::uniform_int_distribution<int>(0, 2)(rng);
      const double hi = lo + std::uniform_int_distribution<int>(0, 2)(rng);
      const SimplexEngine::BoundChange change{j, lo, hi};
      const LpStatus warm = engine.change_bounds({&change, 1});
      copy.set_bounds(j, lo, hi);
      const auto fresh = simplex_solve(copy);
      REQUIRE(warm == fresh.status);
      if (warm == LpStatus::Optimal) CHECK(engine.objective() == doctest::Approx(fresh.objective));
    }
  }
}

TEST_CASE("branch and bound matches enumeration on small integer programs") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    LinearProgram lp;
    lp.set_direction(Direction::Maximize);
    const int n = 5;
    std::vector<int> value(n), weight(n);
    std::vector<LpTerm> row;
    for (int j = 0; j < n; ++j) {
      value[j] = std::uniform_int_distribution<int>(1, 9)(rng);
      weight[j] = std::uniform_int_distribution<int>(1, 9)(rng);
      lp.add_variable("x" + std::to_string(j), 0, 2, value[j], true);
      row.push_back({j, static_cast<double>(weight[j])});
    }
    const int capacity = std::uniform_int_distribution<int>(5, 25)(rng);
    lp.add_constraint("cap", row, Sense::LessEqual, capacity);

    int best = 0;
    for (int code = 0; code < 243; ++code) {
      int c = code, v = 0, w = 0;
      for (int j = 0; j < n; ++j, c /= 3) {
        v += (c % 3) * value[j];
        w += (c % 3) * weight[j];
      }
      if (w <= capacity) best = std::max(best, v);
    }
    MilpOptions opt;
    opt.integral_objective = true;
    const auto r = branch_and_bound(lp, opt);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(best));
    for (double x : r.values) CHECK(std::abs(x - std::round(x)) < 1e-6);
  }
}

TEST_CASE("branch and bound reports infeasibility") {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0, 1, 1, true);
  lp.add_constraint("half", {{x, 2}}, Sense::Equal, 1);
  CHECK(branch_and_bound(lp).status == LpStatus::Infeasible);
}

TEST_CASE("edmonds-karp with several sources and sinks") {
  FlowNetwork net(6);
  net.add_edge(0, 2, 1);
  net.add_edge(1, 2, 1);
  net.add_edge(2, 3, 5);
  net.add_edge(3, 4, 1);
  net.add_edge(3, 5, 1);
  const std::vector<int> s{0, 1}, t{4, 5};
  CHECK(net.max_flow(s, t) == 2);
  const auto side = net.source_side();
  CHECK(side[0]);
  CHECK_FALSE(side[4]);
}

TEST_CASE("LP text export names every row") {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0, 3, 1, true);
  lp.add_constraint("row_a", {{x, 1}}, Sense::GreaterEqual, 1);
  const auto text = lp.to_lp_format();
  CHECK(text.find("row_a") != std::string::npos);
  CHECK(text.find("General") != std::string::npos);
}

}  // TEST_SUITE
