#pragma once

// Reach-avoid LTL fragment: propositional formulas, spec parsing, the
// deterministic Buchi automaton compiler and a direct trace evaluator.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace reactest {

/// Bit i set <=> proposition i holds.
using LabelSet = std::uint64_t;

class PropositionTable {
 public:
  static constexpr std::size_t kMaxPropositions = 64;

  PropositionTable() = default;
  explicit PropositionTable(const std::vector<std::string>& names);

  /// Adds a proposition, returning its index. Re-adding a name is an error.
  int add(const std::string& name);
  std::optional<int> find(std::string_view name) const;
  int index(std::string_view name) const;  // throws UnknownProposition
  const std::string& name(int index) const { return names_.at(index); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  LabelSet labels(const std::vector<std::string>& names) const;
  std::vector<std::string> names_of(LabelSet labels) const;
  std::string format(LabelSet labels) const;  // "{a,b}"

  bool operator==(const PropositionTable&) const = default;

 private:
  std::vector<std::string> names_;
};

bool is_valid_proposition_name(std::string_view name);

/// Immutable propositional formula over proposition indices.
class PropFormula {
 public:
  enum class Kind { True, False, Atom, Not, And, Or };

  static PropFormula truth();
  static PropFormula falsity();
  static PropFormula atom(int proposition);

  PropFormula operator!() const;
  friend PropFormula operator&&(const PropFormula& a, const PropFormula& b);
  friend PropFormula operator||(const PropFormula& a, const PropFormula& b);

  Kind kind() const;
  int proposition() const;  // Atom only
  PropFormula lhs() const;  // Not/And/Or
  PropFormula rhs() const;  // And/Or

  bool evaluate(LabelSet labels) const;
  /// Bitmask of propositions mentioned.
  LabelSet support() const;
  std::string to_string(const PropositionTable& props) const;

 private:
  struct Node;
  explicit PropFormula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

enum class SpecRole { System, Test };

struct ReachAvoidSpec {
  std::optional<PropFormula> safety;
  std::vector<PropFormula> progress;
  SpecRole role = SpecRole::System;

  std::string to_string(const PropositionTable& props) const;
};

/// Grammar: conjunction (`&&`) of `[] (prop)` and `<> (prop)` terms where
/// prop uses `!`, `&&`, `||`, parentheses, `true`, `false` and declared
/// proposition names. `U`, `X`, `W`, `R` are reserved temporal keywords.
ReachAvoidSpec parse_spec(std::string_view text, SpecRole role, const PropositionTable& props);

/// A guard-labelled automaton over 2^AP. Accepting states use Buchi
/// acceptance; for the reach-avoid compiler the accepting state is absorbing.
class BuchiAutomaton {
 public:
  struct Transition {
    int from;
    PropFormula guard;
    int to;
  };

  int add_state(std::string name, bool accepting);
  void add_transition(int from, PropFormula guard, int to);
  void add_initial(int state);

  std::size_t num_states() const { return names_.size(); }
  const std::string& state_name(int q) const { return names_.at(q); }
  bool accepting(int q) const { return accepting_.at(q); }
  const std::vector<int>& initial() const { return initial_; }
  const std::vector<Transition>& transitions() const { return transitions_; }
  std::optional<int> fail_state() const { return fail_state_; }
  void set_fail_state(int q) { fail_state_ = q; }

  /// All states reachable from q on the given label set.
  std::vector<int> successors(int q, LabelSet label) const;
  /// The unique successor; throws if the automaton is not deterministic
  /// and complete at (q, label).
  int step(int q, LabelSet label) const;
  int initial_state() const;  // requires |Q0| == 1

  /// Exhaustive determinism/completeness check over all label sets formed
  /// from the propositions in `support` (at most 16 bits).
  bool is_deterministic_and_complete(LabelSet support) const;

 private:
  std::vector<std::string> names_;
  std::vector<bool> accepting_;
  std::vector<int> initial_;
  std::vector<Transition> transitions_;
  std::vector<std::vector<int>> out_;  // transition indices per state
  std::optional<int> fail_state_;
};

/// Compiles a reach-avoid spec to a deterministic, complete automaton whose
/// states track the set of progress formulas seen so far, plus an absorbing
/// `fail` sink when a safety formula is present.
BuchiAutomaton build_nba(const ReachAvoidSpec& spec, const PropositionTable& props);

enum class Verdict { Satisfied, ViolatedSafety, Pending };
std::string_view to_string(Verdict v);

/// Direct finite-trace semantics: safety must hold on every label up to and
/// including the one that completes the last outstanding progress formula.
Verdict evaluate_trace(const ReachAvoidSpec& spec, std::span<const LabelSet> trace);

/// Verdict obtained by running a compiled automaton over a finite trace.
Verdict run_verdict(const BuchiAutomaton& automaton, std::span<const LabelSet> trace);

}  // namespace reactest
