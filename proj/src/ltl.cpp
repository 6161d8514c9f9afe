#include "reactest/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "reactest/error.hpp"

namespace reactest {

// ---------------------------------------------------------------------------
// Propositions

bool is_valid_proposition_name(std::string_view name) {
  if (name.empty()) return false;
  auto head = static_cast<unsigned char>(name.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || c == '_';
  });
}

PropositionTable::PropositionTable(const std::vector<std::string>& names) {
  for (const auto& n : names) add(n);
}

int PropositionTable::add(const std::string& name) {
  if (!is_valid_proposition_name(name)) {
    throw Error(ErrorKind::InvalidArgument, "invalid proposition name '" + name + "'");
  }
  if (name == "true" || name == "false" || name == "U" || name == "X" || name == "W" ||
      name == "R") {
    throw Error(ErrorKind::InvalidArgument, "reserved word used as proposition: " + name);
  }
  if (find(name)) throw Error(ErrorKind::InvalidArgument, "duplicate proposition " + name);
  if (names_.size() >= kMaxPropositions) {
    throw Error(ErrorKind::InvalidArgument, "too many propositions (max 64)");
  }
  names_.push_back(name);
  return static_cast<int>(names_.size()) - 1;
}

std::optional<int> PropositionTable::find(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) return std::nullopt;
  return static_cast<int>(it - names_.begin());
}

int PropositionTable::index(std::string_view name) const {
  auto i = find(name);
  if (!i) throw Error(ErrorKind::UnknownProposition, std::string(name));
  return *i;
}

LabelSet PropositionTable::labels(const std::vector<std::string>& names) const {
  LabelSet out = 0;
  for (const auto& n : names) out |= LabelSet{1} << index(n);
  return out;
}

std::vector<std::string> PropositionTable::names_of(LabelSet labels) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (labels & (LabelSet{1} << i)) out.push_back(names_[i]);
  }
  return out;
}

std::string PropositionTable::format(LabelSet labels) const {
  std::string out = "{";
  bool first = true;
  for (const auto& n : names_of(labels)) {
    if (!first) out += ',';
    out += n;
    first = false;
  }
  return out + "}";
}

// ---------------------------------------------------------------------------
// PropFormula

struct PropFormula::Node {
  Kind kind;
  int prop = -1;
  std::shared_ptr<const Node> a;
  std::shared_ptr<const Node> b;
};

PropFormula PropFormula::truth() {
  static const auto node = std::make_shared<const Node>(Node{Kind::True, -1, nullptr, nullptr});
  return PropFormula(node);
}

PropFormula PropFormula::falsity() {
  static const auto node = std::make_shared<const Node>(Node{Kind::False, -1, nullptr, nullptr});
  return PropFormula(node);
}

PropFormula PropFormula::atom(int proposition) {
  if (proposition < 0 || proposition >= 64) {
    throw Error(ErrorKind::InvalidArgument, "proposition index out of range");
  }
  return PropFormula(std::make_shared<const Node>(Node{Kind::Atom, proposition, nullptr, nullptr}));
}

PropFormula PropFormula::operator!() const {
  return PropFormula(std::make_shared<const Node>(Node{Kind::Not, -1, node_, nullptr}));
}

PropFormula operator&&(const PropFormula& a, const PropFormula& b) {
  using K = PropFormula::Kind;
  if (a.kind() == K::True) return b;
  if (b.kind() == K::True) return a;
  return PropFormula(
      std::make_shared<const PropFormula::Node>(PropFormula::Node{K::And, -1, a.node_, b.node_}));
}

PropFormula operator||(const PropFormula& a, const PropFormula& b) {
  using K = PropFormula::Kind;
  if (a.kind() == K::False) return b;
  if (b.kind() == K::False) return a;
  return PropFormula(
      std::make_shared<const PropFormula::Node>(PropFormula::Node{K::Or, -1, a.node_, b.node_}));
}

PropFormula::Kind PropFormula::kind() const { return node_->kind; }
int PropFormula::proposition() const { return node_->prop; }

PropFormula PropFormula::lhs() const { return PropFormula(node_->a); }
PropFormula PropFormula::rhs() const { return PropFormula(node_->b); }

bool PropFormula::evaluate(LabelSet labels) const {
  const Node* n = node_.get();
  switch (n->kind) {
    case Kind::True:
      return true;
    case Kind::False:
      return false;
    case Kind::Atom:
      return (labels >> n->prop) & 1U;
    case Kind::Not:
      return !PropFormula(n->a).evaluate(labels);
    case Kind::And:
      return PropFormula(n->a).evaluate(labels) && PropFormula(n->b).evaluate(labels);
    case Kind::Or:
      return PropFormula(n->a).evaluate(labels) || PropFormula(n->b).evaluate(labels);
  }
  return false;
}

LabelSet PropFormula::support() const {
  switch (node_->kind) {
    case Kind::True:
    case Kind::False:
      return 0;
    case Kind::Atom:
      return LabelSet{1} << node_->prop;
    case Kind::Not:
      return PropFormula(node_->a).support();
    case Kind::And:
    case Kind::Or:
      return PropFormula(node_->a).support() | PropFormula(node_->b).support();
  }
  return 0;
}

std::string PropFormula::to_string(const PropositionTable& props) const {
  switch (node_->kind) {
    case Kind::True:
      return "true";
    case Kind::False:
      return "false";
    case Kind::Atom:
      return props.name(node_->prop);
    case Kind::Not:
      return "!" + PropFormula(node_->a).to_string(props);
    case Kind::And:
      return "(" + PropFormula(node_->a).to_string(props) + " && " +
             PropFormula(node_->b).to_string(props) + ")";
    case Kind::Or:
      return "(" + PropFormula(node_->a).to_string(props) + " || " +
             PropFormula(node_->b).to_string(props) + ")";
  }
  return "?";
}

std::string ReachAvoidSpec::to_string(const PropositionTable& props) const {
  std::string out;
  if (safety) out = "[] (" + safety->to_string(props) + ")";
  for (const auto& p : progress) {
    if (!out.empty()) out += " && ";
    out += "<> (" + p.to_string(props) + ")";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

enum class Tok { Ident, True, False, Not, And, Or, Always, Eventually, Temporal, LParen, RParen, End };

struct Token {
  Tok kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    auto two = s.substr(i, 2);
    if (two == "[]") {
      out.push_back({Tok::Always, "[]", i});
      i += 2;
    } else if (two == "<>") {
      out.push_back({Tok::Eventually, "<>", i});
      i += 2;
    } else if (two == "&&") {
      out.push_back({Tok::And, "&&", i});
      i += 2;
    } else if (two == "||") {
      out.push_back({Tok::Or, "||", i});
      i += 2;
    } else if (c == '!') {
      out.push_back({Tok::Not, "!", i++});
    } else if (c == '(') {
      out.push_back({Tok::LParen, "(", i++});
    } else if (c == ')') {
      out.push_back({Tok::RParen, ")", i++});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) {
        ++j;
      }
      std::string word(s.substr(i, j - i));
      Tok kind = Tok::Ident;
      if (word == "true") kind = Tok::True;
      else if (word == "false") kind = Tok::False;
      else if (word == "U" || word == "X" || word == "W" || word == "R") kind = Tok::Temporal;
      out.push_back({kind, word, i});
      i = j;
    } else {
      throw Error(ErrorKind::SyntaxError,
                  "unexpected character '" + std::string(1, c) + "' at " + std::to_string(i));
    }
  }
  out.push_back({Tok::End, "", s.size()});
  return out;
}

// General LTL syntax tree, used only to classify the parsed text.
struct Ltl {
  enum class Kind { Prop, Not, And, Or, Always, Eventually, Other };
  Kind kind;
  std::optional<PropFormula> prop;  // set when the subtree is propositional
  std::vector<std::shared_ptr<Ltl>> kids;
};
using LtlPtr = std::shared_ptr<Ltl>;

class Parser {
 public:
  Parser(std::vector<Token> toks, const PropositionTable& props)
      : toks_(std::move(toks)), props_(props) {}

  LtlPtr parse() {
    auto e = parse_or();
    expect(Tok::End, "end of input");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) {
      throw Error(ErrorKind::SyntaxError, std::string("expected ") + what + " at " +
                                              std::to_string(peek().pos) + ", got '" +
                                              peek().text + "'");
    }
    ++pos_;
  }

  static LtlPtr binary(Ltl::Kind kind, LtlPtr a, LtlPtr b) {
    auto n = std::make_shared<Ltl>(Ltl{kind, std::nullopt, {a, b}});
    if (a->prop && b->prop) {
      n->prop = kind == Ltl::Kind::And ? (*a->prop && *b->prop) : (*a->prop || *b->prop);
    }
    return n;
  }

  LtlPtr parse_or() {
    auto lhs = parse_and();
    while (peek().kind == Tok::Or) {
      take();
      lhs = binary(Ltl::Kind::Or, lhs, parse_and());
    }
    return lhs;
  }

  LtlPtr parse_and() {
    auto lhs = parse_binary_temporal();
    while (peek().kind == Tok::And) {
      take();
      lhs = binary(Ltl::Kind::And, lhs, parse_binary_temporal());
    }
    return lhs;
  }

  LtlPtr parse_binary_temporal() {
    auto lhs = parse_unary();
    while (peek().kind == Tok::Temporal && peek().text != "X") {
      take();
      auto rhs = parse_unary();
      lhs = std::make_shared<Ltl>(Ltl{Ltl::Kind::Other, std::nullopt, {lhs, rhs}});
    }
    return lhs;
  }

  LtlPtr parse_unary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Not: {
        take();
        auto sub = parse_unary();
        auto n = std::make_shared<Ltl>(Ltl{Ltl::Kind::Not, std::nullopt, {sub}});
        if (sub->prop) n->prop = !*sub->prop;
        return n;
      }
      case Tok::Always:
      case Tok::Eventually: {
        take();
        auto sub = parse_unary();
        auto kind = t.kind == Tok::Always ? Ltl::Kind::Always : Ltl::Kind::Eventually;
        return std::make_shared<Ltl>(Ltl{kind, std::nullopt, {sub}});
      }
      case Tok::Temporal: {
        if (t.text != "X") {
          throw Error(ErrorKind::SyntaxError, "binary operator '" + t.text + "' without left operand");
        }
        take();
        auto sub = parse_unary();
        return std::make_shared<Ltl>(Ltl{Ltl::Kind::Other, std::nullopt, {sub}});
      }
      default:
        return parse_primary();
    }
  }

  LtlPtr parse_primary() {
    Token t = take();
    switch (t.kind) {
      case Tok::LParen: {
        auto e = parse_or();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::True:
        return std::make_shared<Ltl>(Ltl{Ltl::Kind::Prop, PropFormula::truth(), {}});
      case Tok::False:
        return std::make_shared<Ltl>(Ltl{Ltl::Kind::Prop, PropFormula::falsity(), {}});
      case Tok::Ident: {
        auto idx = props_.find(t.text);
        if (!idx) throw Error(ErrorKind::UnknownProposition, t.text);
        return std::make_shared<Ltl>(Ltl{Ltl::Kind::Prop, PropFormula::atom(*idx), {}});
      }
      default:
        throw Error(ErrorKind::SyntaxError,
                    "unexpected token '" + t.text + "' at " + std::to_string(t.pos));
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  const PropositionTable& props_;
};

void flatten_conjunction(const LtlPtr& n, std::vector<LtlPtr>& out) {
  if (n->kind == Ltl::Kind::And && !n->prop) {
    flatten_conjunction(n->kids[0], out);
    flatten_conjunction(n->kids[1], out);
  } else {
    out.push_back(n);
  }
}

}  // namespace

ReachAvoidSpec parse_spec(std::string_view text, SpecRole role, const PropositionTable& props) {
  Parser parser(tokenize(text), props);
  LtlPtr root = parser.parse();

  std::vector<LtlPtr> terms;
  flatten_conjunction(root, terms);

  ReachAvoidSpec spec;
  spec.role = role;
  for (const auto& term : terms) {
    if (term->kind != Ltl::Kind::Always && term->kind != Ltl::Kind::Eventually) {
      throw Error(ErrorKind::UnsupportedFragment,
                  "top-level terms must be [] (...) or <> (...) joined by &&");
    }
    const auto& body = term->kids[0];
    if (!body->prop) {
      throw Error(ErrorKind::UnsupportedFragment,
                  "temporal operator nested inside [] or <> is not supported");
    }
    if (term->kind == Ltl::Kind::Always) {
      spec.safety = spec.safety ? (*spec.safety && *body->prop) : *body->prop;
    } else {
      spec.progress.push_back(*body->prop);
    }
  }
  if (spec.progress.empty()) {
    throw Error(ErrorKind::UnsupportedFragment, "at least one <> (...) term is required");
  }
  if (role == SpecRole::System && spec.progress.size() != 1) {
    throw Error(ErrorKind::UnsupportedFragment,
                "a system specification has exactly one <> (...) term");
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Automata

int BuchiAutomaton::add_state(std::string name, bool accepting) {
  names_.push_back(std::move(name));
  accepting_.push_back(accepting);
  out_.emplace_back();
  return static_cast<int>(names_.size()) - 1;
}

void BuchiAutomaton::add_transition(int from, PropFormula guard, int to) {
  const int n = static_cast<int>(num_states());
  if (from < 0 || from >= n || to < 0 || to >= n) {
    throw Error(ErrorKind::UnknownState, "transition endpoint out of range");
  }
  out_[from].push_back(static_cast<int>(transitions_.size()));
  transitions_.push_back({from, std::move(guard), to});
}

void BuchiAutomaton::add_initial(int state) {
  if (state < 0 || state >= static_cast<int>(num_states())) {
    throw Error(ErrorKind::UnknownState, "initial state out of range");
  }
  initial_.push_back(state);
}

std::vector<int> BuchiAutomaton::successors(int q, LabelSet label) const {
  std::vector<int> out;
  for (int t : out_.at(q)) {
    if (transitions_[t].guard.evaluate(label)) out.push_back(transitions_[t].to);
  }
  return out;
}

int BuchiAutomaton::step(int q, LabelSet label) const {
  int found = -1;
  for (int t : out_.at(q)) {
    if (!transitions_[t].guard.evaluate(label)) continue;
    if (found >= 0) {
      throw Error(ErrorKind::InvalidArgument, "automaton is nondeterministic at " + names_[q]);
    }
    found = transitions_[t].to;
  }
  if (found < 0) throw Error(ErrorKind::InvalidArgument, "automaton is incomplete at " + names_[q]);
  return found;
}

int BuchiAutomaton::initial_state() const {
  if (initial_.size() != 1) {
    throw Error(ErrorKind::InvalidArgument, "automaton must have exactly one initial state");
  }
  return initial_.front();
}

bool BuchiAutomaton::is_deterministic_and_complete(LabelSet support) const {
  std::vector<int> bits;
  for (int i = 0; i < 64; ++i) {
    if (support & (LabelSet{1} << i)) bits.push_back(i);
  }
  if (bits.size() > 16) throw Error(ErrorKind::TooLarge, "support too large for exhaustive check");
  for (std::size_t q = 0; q < num_states(); ++q) {
    for (std::uint32_t m = 0; m < (1U << bits.size()); ++m) {
      LabelSet label = 0;
      for (std::size_t k = 0; k < bits.size(); ++k) {
        if (m & (1U << k)) label |= LabelSet{1} << bits[k];
      }
      int enabled = 0;
      for (int t : out_[q]) enabled += transitions_[t].guard.evaluate(label) ? 1 : 0;
      if (enabled != 1) return false;
    }
  }
  return true;
}

namespace {

std::string subset_name(unsigned mask, std::size_t n) {
  std::string s = "{";
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (mask & (1U << i)) {
      if (!first) s += ',';
      s += std::to_string(i);
      first = false;
    }
  }
  return s + "}";
}

}  // namespace

BuchiAutomaton build_nba(const ReachAvoidSpec& spec, const PropositionTable& props) {
  const std::size_t n = spec.progress.size();
  if (n == 0) throw Error(ErrorKind::EmptyProgress, "no progress formula to encode");
  if (n > 16) throw Error(ErrorKind::TooLarge, "at most 16 progress formulas are supported");
  const LabelSet declared =
      props.size() == 64 ? ~LabelSet{0} : ((LabelSet{1} << props.size()) - 1);
  auto check_support = [&](const PropFormula& f) {
    if (f.support() & ~declared) {
      throw Error(ErrorKind::PropositionMismatch, "formula references undeclared proposition");
    }
  };
  if (spec.safety) check_support(*spec.safety);
  for (const auto& p : spec.progress) check_support(p);

  BuchiAutomaton b;
  const unsigned full = (1U << n) - 1;
  for (unsigned mask = 0; mask <= full; ++mask) {
    b.add_state("q" + subset_name(mask, n), mask == full);
  }
  int fail = -1;
  if (spec.safety) {
    fail = b.add_state("fail", false);
    b.set_fail_state(fail);
  }
  b.add_initial(0);

  for (unsigned mask = 0; mask <= full; ++mask) {
    if (mask == full) {
      b.add_transition(static_cast<int>(mask), PropFormula::truth(), static_cast<int>(mask));
      continue;
    }
    const unsigned open = full & ~mask;
    // Every subset of the outstanding formulas that becomes true now.
    for (unsigned hit = open;; hit = (hit - 1) & open) {
      PropFormula guard = spec.safety ? *spec.safety : PropFormula::truth();
      for (std::size_t i = 0; i < n; ++i) {
        if (!(open & (1U << i))) continue;
        guard = guard && ((hit & (1U << i)) ? spec.progress[i] : !spec.progress[i]);
      }
      b.add_transition(static_cast<int>(mask), guard, static_cast<int>(mask | hit));
      if (hit == 0) break;
    }
    if (spec.safety) b.add_transition(static_cast<int>(mask), !*spec.safety, fail);
  }
  if (fail >= 0) b.add_transition(fail, PropFormula::truth(), fail);
  return b;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Satisfied:
      return "satisfied";
    case Verdict::ViolatedSafety:
      return "violated-safety";
    case Verdict::Pending:
      return "pending";
  }
  return "?";
}

Verdict evaluate_trace(const ReachAvoidSpec& spec, std::span<const LabelSet> trace) {
  std::vector<bool> seen(spec.progress.size(), false);
  std::size_t remaining = spec.progress.size();
  for (LabelSet label : trace) {
    if (spec.safety && !spec.safety->evaluate(label)) return Verdict::ViolatedSafety;
    for (std::size_t i = 0; i < spec.progress.size(); ++i) {
      if (!seen[i] && spec.progress[i].evaluate(label)) {
        seen[i] = true;
        --remaining;
      }
    }
    if (remaining == 0) return Verdict::Satisfied;
  }
  return Verdict::Pending;
}

Verdict run_verdict(const BuchiAutomaton& automaton, std::span<const LabelSet> trace) {
  int q = automaton.initial_state();
  for (LabelSet label : trace) {
    q = automaton.step(q, label);
    if (automaton.accepting(q)) return Verdict::Satisfied;
    if (automaton.fail_state() && q == *automaton.fail_state()) return Verdict::ViolatedSafety;
  }
  return Verdict::Pending;
}

}  // namespace reactest
