#include "reactest/lp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reactest/error.hpp"

namespace reactest {

// ---------------------------------------------------------------------------
// LinearProgram

int LinearProgram::add_variable(std::string name, double lower, double upper, double cost,
                                bool integer) {
  if (lower > upper) throw Error(ErrorKind::InvalidArgument, "variable " + name + " has lower > upper");
  vars_.push_back({std::move(name), lower, upper, cost, integer});
  return static_cast<int>(vars_.size()) - 1;
}

int LinearProgram::add_constraint(std::string name, std::vector<LpTerm> terms, Sense sense,
                                  double rhs) {
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= static_cast<int>(vars_.size())) {
      throw Error(ErrorKind::InvalidArgument, "constraint " + name + " references unknown variable");
    }
  }
  rows_.push_back({std::move(name), std::move(terms), sense, rhs});
  return static_cast<int>(rows_.size()) - 1;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
  if (lower > upper) throw Error(ErrorKind::InvalidArgument, "lower > upper");
  vars_.at(var).lower = lower;
  vars_.at(var).upper = upper;
}

double LinearProgram::objective_value(std::span<const double> x) const {
  double v = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) v += vars_[j].cost * x[j];
  return v;
}

double LinearProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max(worst, vars_[j].lower - x[j]);
    worst = std::max(worst, x[j] - vars_[j].upper);
  }
  for (const auto& r : rows_) {
    double lhs = 0.0;
    for (const auto& t : r.terms) lhs += t.coef * x[t.var];
    switch (r.sense) {
      case Sense::LessEqual:
        worst = std::max(worst, lhs - r.rhs);
        break;
      case Sense::GreaterEqual:
        worst = std::max(worst, r.rhs - lhs);
        break;
      case Sense::Equal:
        worst = std::max(worst, std::abs(lhs - r.rhs));
        break;
    }
  }
  return worst;
}

namespace {

std::string lp_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') ? c : '_';
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) out = "v" + out;
  return out;
}

void write_linear(std::ostringstream& os, const std::vector<std::pair<double, std::string>>& terms) {
  bool first = true;
  for (const auto& [c, name] : terms) {
    if (c == 0.0) continue;
    if (first) {
      if (c < 0) os << "- ";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    const double a = std::abs(c);
    if (a != 1.0) os << a << ' ';
    os << name;
    first = false;
  }
  if (first) os << "0";
}

}  // namespace

std::string LinearProgram::to_lp_format() const {
  std::ostringstream os;
  os.precision(17);
  os << (direction_ == Direction::Minimize ? "Minimize\n" : "Maximize\n") << " obj: ";
  std::vector<std::pair<double, std::string>> obj;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (vars_[j].cost != 0.0) obj.emplace_back(vars_[j].cost, lp_name(vars_[j].name));
  }
  write_linear(os, obj);
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    os << ' ' << lp_name(r.name.empty() ? "r" + std::to_string(i) : r.name) << ": ";
    std::vector<std::pair<double, std::string>> terms;
    for (const auto& t : r.terms) terms.emplace_back(t.coef, lp_name(vars_[t.var].name));
    write_linear(os, terms);
    os << (r.sense == Sense::LessEqual ? " <= " : r.sense == Sense::GreaterEqual ? " >= " : " = ")
       << r.rhs << '\n';
  }
  os << "Bounds\n";
  for (const auto& v : vars_) {
    os << ' ';
    if (std::isinf(v.lower)) os << "-inf";
    else os << v.lower;
    os << " <= " << lp_name(v.name) << " <= ";
    if (std::isinf(v.upper)) os << "+inf";
    else os << v.upper;
    os << '\n';
  }
  bool any_int = std::any_of(vars_.begin(), vars_.end(), [](const Variable& v) { return v.integer; });
  if (any_int) {
    os << "General\n";
    for (const auto& v : vars_) {
      if (v.integer) os << ' ' << lp_name(v.name) << '\n';
    }
  }
  os << "End\n";
  return os.str();
}

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal:
      return "optimal";
    case LpStatus::Infeasible:
      return "infeasible";
    case LpStatus::Unbounded:
      return "unbounded";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// SimplexEngine

SimplexEngine::SimplexEngine(const LinearProgram& lp, SimplexOptions options) : opt_(options) {
  sign_ = lp.direction() == Direction::Maximize ? -1.0 : 1.0;
  n_ = static_cast<int>(lp.num_variables());
  m_ = static_cast<int>(lp.num_constraints());

  lo_.assign(n_ + m_, 0.0);
  up_.assign(n_ + m_, kInf);
  status_.assign(n_ + m_, Status::AtLower);
  std::vector<double> x0(n_, 0.0);
  for (int j = 0; j < n_; ++j) {
    const auto& v = lp.variable(j);
    lo_[j] = v.lower;
    up_[j] = v.upper;
    if (std::isfinite(v.lower)) {
      status_[j] = Status::AtLower;
      x0[j] = v.lower;
    } else if (std::isfinite(v.upper)) {
      status_[j] = Status::AtUpper;
      x0[j] = v.upper;
    } else {
      throw Error(ErrorKind::InvalidArgument, "free variable " + v.name + " is not supported");
    }
  }

  // Decide per row whether the slack can start basic.
  std::vector<double> slack_coef(m_), residual(m_);
  std::vector<bool> needs_art(m_, false);
  int arts = 0;
  for (int i = 0; i < m_; ++i) {
    const auto& r = lp.constraint(i);
    double lhs = 0.0;
    for (const auto& t : r.terms) lhs += t.coef * x0[t.var];
    residual[i] = r.rhs - lhs;
    slack_coef[i] = r.sense == Sense::GreaterEqual ? -1.0 : 1.0;
    if (r.sense == Sense::Equal) up_[n_ + i] = 0.0;
    const double v = residual[i] / slack_coef[i];
    const bool ok = v >= lo_[n_ + i] - opt_.tolerance && v <= up_[n_ + i] + opt_.tolerance;
    if (!ok) {
      needs_art[i] = true;
      ++arts;
    }
  }

  cols_ = n_ + m_ + arts;
  lo_.resize(cols_, 0.0);
  up_.resize(cols_, kInf);
  status_.resize(cols_, Status::AtLower);
  tab_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
  beta_.assign(m_, 0.0);
  basis_.assign(m_, -1);
  cost_.assign(cols_, 0.0);
  phase2_cost_.assign(cols_, 0.0);
  for (int j = 0; j < n_; ++j) phase2_cost_[j] = sign_ * lp.variable(j).cost;

  int next_art = n_ + m_;
  for (int i = 0; i < m_; ++i) {
    const auto& r = lp.constraint(i);
    for (const auto& t : r.terms) at(i, t.var) += t.coef;
    at(i, n_ + i) = slack_coef[i];
    if (!needs_art[i]) {
      const double s = slack_coef[i];
      for (int j = 0; j < n_ + m_; ++j) at(i, j) *= s;  // s is +-1
      basis_[i] = n_ + i;
      status_[n_ + i] = Status::Basic;
      beta_[i] = residual[i] / s;
    } else {
      const double sg = residual[i] >= 0 ? 1.0 : -1.0;
      for (int j = 0; j < n_ + m_; ++j) at(i, j) *= sg;
      const int a = next_art++;
      at(i, a) = 1.0;
      basis_[i] = a;
      status_[a] = Status::Basic;
      beta_[i] = std::abs(residual[i]);
      cost_[a] = 1.0;
      status_[n_ + i] = Status::AtLower;
    }
  }
}

double SimplexEngine::nonbasic_value(int j) const {
  return status_[j] == Status::AtUpper ? up_[j] : lo_[j];
}

void SimplexEngine::compute_reduced_costs() {
  d_ = cost_;
  for (int i = 0; i < m_; ++i) {
    const double cb = cost_[basis_[i]];
    if (cb == 0.0) continue;
    const double* row = &tab_[static_cast<std::size_t>(i) * cols_];
    for (int j = 0; j < cols_; ++j) d_[j] -= cb * row[j];
  }
  obj_ = 0.0;
  for (int i = 0; i < m_; ++i) {
    d_[basis_[i]] = 0.0;
    obj_ += cost_[basis_[i]] * beta_[i];
  }
  for (int j = 0; j < cols_; ++j) {
    if (status_[j] != Status::Basic) obj_ += cost_[j] * nonbasic_value(j);
  }
}

void SimplexEngine::pivot(int r, int j) {
  double* prow = &tab_[static_cast<std::size_t>(r) * cols_];
  const double p = prow[j];
  nonzero_.clear();
  for (int k = 0; k < cols_; ++k) {
    if (prow[k] == 0.0) continue;
    prow[k] /= p;
    nonzero_.push_back(k);
  }
  prow[j] = 1.0;
  for (int i = 0; i < m_; ++i) {
    if (i == r) continue;
    double* row = &tab_[static_cast<std::size_t>(i) * cols_];
    const double f = row[j];
    if (f == 0.0) continue;
    for (int k : nonzero_) row[k] -= f * prow[k];
    row[j] = 0.0;
  }
  const double fd = d_[j];
  if (fd != 0.0) {
    for (int k : nonzero_) d_[k] -= fd * prow[k];
  }
  d_[j] = 0.0;
  status_[basis_[r]] = Status::AtLower;  // caller fixes the leaving status
  basis_[r] = j;
  status_[j] = Status::Basic;
}

LpStatus SimplexEngine::primal() {
  const double tol = opt_.tolerance;
  int degenerate = 0;
  bool bland = false;
  while (true) {
    if (++iterations_ > opt_.max_iterations) {
      throw Error(ErrorKind::NumericalInstability, "simplex iteration limit reached");
    }
    int enter = -1;
    double best = 0.0;
    for (int j = 0; j < cols_; ++j) {
      if (status_[j] == Status::Basic || lo_[j] == up_[j]) continue;
      double gain = 0.0;
      if (status_[j] == Status::AtLower && d_[j] < -tol) gain = -d_[j];
      else if (status_[j] == Status::AtUpper && d_[j] > tol) gain = d_[j];
      if (gain <= 0.0) continue;
      if (bland) {
        enter = j;
        break;
      }
      if (gain > best) {
        best = gain;
        enter = j;
      }
    }
    if (enter < 0) return LpStatus::Optimal;

    const double dir = status_[enter] == Status::AtLower ? 1.0 : -1.0;
    double theta = up_[enter] - lo_[enter];  // bound flip
    int leave = -1;
    double leave_alpha = 0.0;
    for (int i = 0; i < m_; ++i) {
      const double alpha = dir * at(i, enter);
      const int b = basis_[i];
      double ratio;
      if (alpha > tol) {
        if (!std::isfinite(lo_[b])) continue;
        ratio = (beta_[i] - lo_[b]) / alpha;
      } else if (alpha < -tol) {
        if (!std::isfinite(up_[b])) continue;
        ratio = (up_[b] - beta_[i]) / (-alpha);
      } else {
        continue;
      }
      ratio = std::max(ratio, 0.0);
      bool take = false;
      if (ratio < theta - tol) {
        take = true;
      } else if (ratio <= theta + tol && leave >= 0) {
        take = bland ? b < basis_[leave] : std::abs(alpha) > std::abs(leave_alpha);
      } else if (ratio <= theta + tol && leave < 0 && !std::isfinite(theta)) {
        take = true;
      }
      if (take) {
        theta = ratio;
        leave = i;
        leave_alpha = alpha;
      }
    }
    if (!std::isfinite(theta)) return LpStatus::Unbounded;

    if (theta <= tol) {
      if (++degenerate > 50) bland = true;
    } else {
      degenerate = 0;
      bland = false;
    }

    const double entering_value = nonbasic_value(enter) + dir * theta;
    for (int i = 0; i < m_; ++i) beta_[i] -= dir * at(i, enter) * theta;
    obj_ += d_[enter] * dir * theta;

    if (leave < 0) {
      status_[enter] = status_[enter] == Status::AtLower ? Status::AtUpper : Status::AtLower;
      continue;
    }
    const int out = basis_[leave];
    const Status out_status = leave_alpha > 0 ? Status::AtLower : Status::AtUpper;
    pivot(leave, enter);
    status_[out] = out_status;
    beta_[leave] = entering_value;
  }
}

LpStatus SimplexEngine::dual() {
  const double tol = opt_.tolerance;
  while (true) {
    if (++iterations_ > opt_.max_iterations) {
      throw Error(ErrorKind::NumericalInstability, "dual simplex iteration limit reached");
    }
    int r = -1;
    double worst = 1e-7;
    bool below = false;
    for (int i = 0; i < m_; ++i) {
      const int b = basis_[i];
      const double lv = lo_[b] - beta_[i];
      const double uv = beta_[i] - up_[b];
      if (lv > worst) {
        worst = lv;
        r = i;
        below = true;
      } else if (uv > worst) {
        worst = uv;
        r = i;
        below = false;
      }
    }
    if (r < 0) return LpStatus::Optimal;

    const double target = below ? lo_[basis_[r]] : up_[basis_[r]];
    int enter = -1;
    double best_ratio = kInf;
    double best_alpha = 0.0;
    for (int j = 0; j < cols_; ++j) {
      if (status_[j] == Status::Basic || lo_[j] == up_[j]) continue;
      const double a = at(r, j);
      bool eligible;
      if (below) {
        eligible = (status_[j] == Status::AtLower && a < -tol) ||
                   (status_[j] == Status::AtUpper && a > tol);
      } else {
        eligible = (status_[j] == Status::AtLower && a > tol) ||
                   (status_[j] == Status::AtUpper && a < -tol);
      }
      if (!eligible) continue;
      const double ratio = std::abs(d_[j]) / std::abs(a);
      if (ratio < best_ratio - tol ||
          (ratio <= best_ratio + tol && std::abs(a) > std::abs(best_alpha))) {
        best_ratio = ratio;
        enter = j;
        best_alpha = a;
      }
    }
    if (enter < 0) return LpStatus::Infeasible;

    const double delta = (beta_[r] - target) / at(r, enter);
    const double entering_value = nonbasic_value(enter) + delta;
    for (int i = 0; i < m_; ++i) beta_[i] -= at(i, enter) * delta;
    obj_ += d_[enter] * delta;
    const int out = basis_[r];
    pivot(r, enter);
    status_[out] = below ? Status::AtLower : Status::AtUpper;
    beta_[r] = entering_value;
  }
}

LpStatus SimplexEngine::solve() {
  compute_reduced_costs();
  if (cols_ > n_ + m_) {
    primal();
    if (obj_ > 1e-7) {
      solved_ = false;
      return LpStatus::Infeasible;
    }
    for (int a = n_ + m_; a < cols_; ++a) {
      lo_[a] = up_[a] = 0.0;
      if (status_[a] != Status::Basic) status_[a] = Status::AtLower;
    }
  }
  cost_ = phase2_cost_;
  compute_reduced_costs();
  const LpStatus s = primal();
  solved_ = s == LpStatus::Optimal;
  return s;
}

void SimplexEngine::set_bound(int var, double lower, double upper) {
  if (var < 0 || var >= n_) throw Error(ErrorKind::InvalidArgument, "bound change on unknown variable");
  if (status_[var] == Status::Basic) {
    lo_[var] = lower;
    up_[var] = upper;
    return;
  }
  const double old_value = nonbasic_value(var);
  lo_[var] = lower;
  up_[var] = upper;
  // Keep the reduced cost sign consistent with the bound the variable sits at.
  if (lower == upper || (d_[var] >= 0.0 && std::isfinite(lower)) || !std::isfinite(upper)) {
    status_[var] = Status::AtLower;
  } else {
    status_[var] = Status::AtUpper;
  }
  const double delta = nonbasic_value(var) - old_value;
  if (delta != 0.0) {
    for (int i = 0; i < m_; ++i) beta_[i] -= at(i, var) * delta;
    obj_ += d_[var] * delta;
  }
}

LpStatus SimplexEngine::change_bounds(std::span<const BoundChange> changes) {
  if (!solved_) throw Error(ErrorKind::InvalidArgument, "bound changes require a dual feasible basis");
  for (const auto& c : changes) {
    if (c.lower > c.upper) return LpStatus::Infeasible;
  }
  for (const auto& c : changes) set_bound(c.var, c.lower, c.upper);
  // An infeasible dual simplex exit keeps the basis dual feasible, so the
  // engine can still take further bound changes.
  LpStatus s = dual();
  if (s != LpStatus::Optimal) return s;
  s = primal();
  solved_ = s == LpStatus::Optimal;
  return s;
}

LpStatus SimplexEngine::tighten(int var, double lower, double upper) {
  const BoundChange c{var, lower, upper};
  return change_bounds({&c, 1});
}

std::vector<double> SimplexEngine::values() const {
  std::vector<double> x(n_);
  for (int j = 0; j < n_; ++j) {
    if (status_[j] != Status::Basic) x[j] = nonbasic_value(j);
  }
  for (int i = 0; i < m_; ++i) {
    if (basis_[i] < n_) x[basis_[i]] = beta_[i];
  }
  return x;
}

double SimplexEngine::objective() const {
  const auto x = values();
  double v = 0.0;
  for (int j = 0; j < n_; ++j) v += phase2_cost_[j] * x[j];
  return sign_ * v;
}

// ---------------------------------------------------------------------------

LpSolution simplex_solve(const LinearProgram& lp, const SimplexOptions& options) {
  SimplexEngine engine(lp, options);
  LpSolution sol;
  sol.status = engine.solve();
  sol.iterations = engine.iterations();
  if (sol.status != LpStatus::Optimal) return sol;
  sol.values = engine.values();
  const double residual = lp.max_violation(sol.values);
  if (residual > options.residual_tolerance) {
    throw Error(ErrorKind::NumericalInstability,
                "residual check failed (" + std::to_string(residual) + ")");
  }
  sol.objective = lp.objective_value(sol.values);
  return sol;
}

}  // namespace reactest
