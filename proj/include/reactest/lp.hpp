#pragma once

// Linear programs and a dense bounded-variable simplex solver.
//
// Tolerances: 1e-9 on pivoting/feasibility decisions, 1e-6 on the final
// residual check against the original constraints. Pricing is Dantzig's
// rule; after 50 consecutive degenerate pivots the solver switches to
// Bland's rule until the objective moves again.

#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace reactest {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, GreaterEqual, Equal };
enum class Direction { Minimize, Maximize };

struct LpTerm {
  int var;
  double coef;
};

class LinearProgram {
 public:
  struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    double cost = 0.0;
    bool integer = false;
  };
  struct Constraint {
    std::string name;
    std::vector<LpTerm> terms;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
  };

  int add_variable(std::string name, double lower = 0.0, double upper = kInf, double cost = 0.0,
                   bool integer = false);
  int add_constraint(std::string name, std::vector<LpTerm> terms, Sense sense, double rhs);

  void set_direction(Direction d) { direction_ = d; }
  Direction direction() const { return direction_; }
  void set_cost(int var, double cost) { vars_.at(var).cost = cost; }
  void set_bounds(int var, double lower, double upper);

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }
  const Variable& variable(int i) const { return vars_.at(i); }
  const Constraint& constraint(int i) const { return rows_.at(i); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }

  double objective_value(std::span<const double> x) const;
  /// Largest bound or row violation of x.
  double max_violation(std::span<const double> x) const;

  /// CPLEX LP text format.
  std::string to_lp_format() const;

 private:
  Direction direction_ = Direction::Minimize;
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };
std::string_view to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> values;
  int iterations = 0;
};

struct SimplexOptions {
  double tolerance = 1e-9;
  double residual_tolerance = 1e-6;
  int max_iterations = 200000;
};

/// Solves from scratch. Throws NumericalInstability when the final residual
/// check fails or the iteration limit is hit.
LpSolution simplex_solve(const LinearProgram& lp, const SimplexOptions& options = {});

/// Warm-startable simplex state. After an optimal solve, variable bounds can
/// be changed in either direction and the problem re-optimized with the dual
/// simplex. An infeasible re-optimization leaves the engine usable for
/// further bound changes.
class SimplexEngine {
 public:
  explicit SimplexEngine(const LinearProgram& lp, SimplexOptions options = {});

  struct BoundChange {
    int var;
    double lower;
    double upper;
  };

  LpStatus solve();
  /// Changes the bounds of a variable and re-optimizes.
  LpStatus tighten(int var, double lower, double upper);
  /// Applies several bound changes, then re-optimizes once.
  LpStatus change_bounds(std::span<const BoundChange> changes);

  double objective() const;  // in the program's own direction
  std::vector<double> values() const;
  int iterations() const { return iterations_; }
  double lower(int var) const { return lo_.at(var); }
  double upper(int var) const { return up_.at(var); }

 private:
  enum class Status : unsigned char { Basic, AtLower, AtUpper };

  double& at(int r, int c) { return tab_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return tab_[static_cast<std::size_t>(r) * cols_ + c]; }
  double nonbasic_value(int j) const;
  void compute_reduced_costs();
  void pivot(int r, int j);
  LpStatus primal();
  LpStatus dual();
  void set_bound(int var, double lower, double upper);

  SimplexOptions opt_;
  double sign_ = 1.0;  // -1 for maximization (internal form is minimization)
  int n_ = 0;          // structural variables
  int m_ = 0;
  int cols_ = 0;
  std::vector<double> tab_;
  std::vector<int> nonzero_;  // pivot row scratch
  std::vector<double> beta_;
  std::vector<double> cost_;
  std::vector<double> phase2_cost_;
  std::vector<double> d_;
  std::vector<double> lo_;
  std::vector<double> up_;
  std::vector<Status> status_;
  std::vector<int> basis_;
  double obj_ = 0.0;
  int iterations_ = 0;
  bool solved_ = false;
};

}  // namespace reactest
