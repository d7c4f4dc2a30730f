#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kmarf/term.hpp"

namespace kmarf {

// Implicitly conjunctive set of predicates. std::set keyed by the canonical
// predicate order, so iteration is always canonical and duplicates collapse.
// Equality ignores the name: two states are equal iff their predicate sets
// are.
struct State {
  std::string name;
  std::set<Predicate> predicates;

  bool is_ground() const {
    for (const Predicate& p : predicates)
      if (!p.is_ground()) return false;
    return true;
  }

  bool contains(const Predicate& p) const { return predicates.count(p) != 0; }

  friend bool operator==(const State& a, const State& b) { return a.predicates == b.predicates; }
  friend bool operator!=(const State& a, const State& b) { return !(a == b); }
};

// Effect-free function call inside a computation block.
struct FunctionCall {
  std::string name;
  std::vector<Term> args;

  std::string to_text() const { return Predicate(name, args).to_text(); }

  friend bool operator==(const FunctionCall& a, const FunctionCall& b) {
    return a.name == b.name && a.args == b.args;
  }
};

enum class ActionOp { Add, Delete };

// One action entry: add(p) or delete(p).
struct ActionItem {
  ActionOp op = ActionOp::Add;
  Predicate pred;

  std::string to_text() const {
    std::string out = op == ActionOp::Add ? "add(" : "delete(";
    out += pred.to_text();
    out += ')';
    return out;
  }

  friend bool operator==(const ActionItem& a, const ActionItem& b) {
    return a.op == b.op && a.pred == b.pred;
  }
};

// Named (precondition, computation, action) triple. The precondition is a
// set; computation and action are ordered (order is semantics).
struct TransitionSpec {
  std::string name;
  std::set<Predicate> precondition;
  std::vector<FunctionCall> computation;
  std::vector<ActionItem> action;

  std::set<std::string> precondition_variables() const {
    std::set<std::string> vars;
    for (const Predicate& p : precondition) p.collect_variables(vars);
    return vars;
  }

  friend bool operator==(const TransitionSpec& a, const TransitionSpec& b) {
    return a.name == b.name && a.precondition == b.precondition &&
           a.computation == b.computation && a.action == b.action;
  }
};

// Declarations consumed by the PDDL compiler. The three functor sets must be
// disjoint (checked by the parser).
struct TransformationRules {
  std::set<std::string> type_predicates;
  std::map<std::string, std::size_t> fluent_predicates;  // functor -> arity
  std::map<std::string, std::string> wrappers;           // functor -> mangling suffix
  bool allow_existential_goal = false;

  friend bool operator==(const TransformationRules& a, const TransformationRules& b) {
    return a.type_predicates == b.type_predicates && a.fluent_predicates == b.fluent_predicates &&
           a.wrappers == b.wrappers && a.allow_existential_goal == b.allow_existential_goal;
  }
};

// A full knowledge model: named states and transitions plus the designated
// initial/goal states. All states are ground except (possibly) the goal.
struct Model {
  std::map<std::string, State> states;
  std::map<std::string, TransitionSpec> transitions;
  std::optional<std::string> initial;
  std::optional<std::string> goal;
  std::optional<TransformationRules> rules;

  const State& state(const std::string& name) const {
    auto it = states.find(name);
    if (it == states.end()) throw std::out_of_range("unknown state: " + name);
    return it->second;
  }

  bool has_endpoints() const { return initial.has_value() && goal.has_value(); }
  const State& initial_state() const {
    if (!initial) throw std::logic_error("model has no initial state designation");
    return state(*initial);
  }
  const State& goal_state() const {
    if (!goal) throw std::logic_error("model has no goal state designation");
    return state(*goal);
  }

  friend bool operator==(const Model& a, const Model& b) {
    return a.states == b.states && a.transitions == b.transitions && a.initial == b.initial &&
           a.goal == b.goal && a.rules == b.rules;
  }
};

// --- canonical state text and hashing ------------------------------------
//
// The canonical text of a state is its predicates in canonical order, each
// terminated by '.', joined with single spaces: "at(p1, bs1). is_bus(b25)."
// State hashes everywhere (trace dumps, plan documents, run logs) are
// 64-bit FNV-1a over exactly this text, printed as 16 lowercase hex digits.

inline std::string canonical_state_text(const State& s) {
  std::string out;
  for (const Predicate& p : s.predicates) {
    if (!out.empty()) out += ' ';
    out += p.to_text();
    out += '.';
  }
  return out;
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string to_hex16(std::uint64_t v) {
  static const char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string state_hash(const State& s) { return to_hex16(fnv1a64(canonical_state_text(s))); }

}  // namespace kmarf
