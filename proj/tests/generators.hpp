// Seeded random model generators for property tests. Deterministic for a
// given seed; everything produced is valid by construction (parses, obeys
// the static checks).
#pragma once

#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "kmarf/model.hpp"
#include "kmarf/term.hpp"

namespace gen {

using kmarf::ActionItem;
using kmarf::ActionOp;
using kmarf::FunctionCall;
using kmarf::Model;
using kmarf::Predicate;
using kmarf::Rational;
using kmarf::State;
using kmarf::Term;
using kmarf::TransitionSpec;

struct Rng {
  std::mt19937_64 engine;
  explicit Rng(std::uint64_t seed) : engine(seed) {}
  std::size_t below(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine);
  }
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine);
  }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(engine) < p; }
};

// Fixed arity per functor so generated preconditions and states share
// predicate shapes and matches actually happen.
inline const std::vector<std::pair<std::string, std::size_t>>& functor_pool() {
  static const std::vector<std::pair<std::string, std::size_t>> pool{
      {"at", 2}, {"cap", 2}, {"link", 2}, {"mark", 1}, {"p", 1}, {"q", 1}, {"r", 0}};
  return pool;
}
inline const std::vector<std::string>& literal_pool() {
  static const std::vector<std::string> pool{"a", "b", "c", "d", "n1", "n2", "v1"};
  return pool;
}
inline const std::vector<std::string>& variable_pool() {
  static const std::vector<std::string> pool{"X", "Y", "Z"};
  return pool;
}
inline const std::vector<std::string>& wrapper_pool() {
  static const std::vector<std::string> pool{"min", "kmh"};
  return pool;
}

inline Term random_ground_term(Rng& rng, int depth = 0) {
  std::size_t roll = rng.below(depth == 0 ? 10 : 8);
  if (roll < 2) return Term::number(Rational(rng.range(-3, 3)));
  if (roll < 3) return Term::number(Rational(rng.range(-9, 9), rng.range(1, 9)));
  if (roll < 8) return Term::literal(literal_pool()[rng.below(literal_pool().size())]);
  return Term::compound(wrapper_pool()[rng.below(wrapper_pool().size())],
                        {random_ground_term(rng, depth + 1)});
}

inline Term random_pattern_term(Rng& rng, std::vector<std::string>& vars_used, int depth = 0) {
  if (depth == 0 && rng.chance(0.35)) {
    std::string v = variable_pool()[rng.below(variable_pool().size())];
    vars_used.push_back(v);
    return Term::variable(v);
  }
  if (depth == 0 && rng.chance(0.2)) {
    Term arg = rng.chance(0.5) ? random_pattern_term(rng, vars_used, 1) : random_ground_term(rng, 1);
    return Term::compound(wrapper_pool()[rng.below(wrapper_pool().size())], {arg});
  }
  if (depth > 0 && rng.chance(0.3)) {
    std::string v = variable_pool()[rng.below(variable_pool().size())];
    vars_used.push_back(v);
    return Term::variable(v);
  }
  return random_ground_term(rng, depth);
}

inline Predicate random_ground_predicate(Rng& rng) {
  const auto& [functor, arity] = functor_pool()[rng.below(functor_pool().size())];
  Predicate p;
  p.functor = functor;
  for (std::size_t i = 0; i < arity; ++i) p.args.push_back(random_ground_term(rng));
  return p;
}

inline State random_state(Rng& rng, std::string name, std::size_t max_predicates = 6) {
  State s;
  s.name = std::move(name);
  std::size_t count = rng.below(max_predicates + 1);
  for (std::size_t i = 0; i < count; ++i) s.predicates.insert(random_ground_predicate(rng));
  return s;
}

// Transition whose preconditions tend to match generated states: the functor
// pool is shared and arities overlap. Computations only use builtins, with
// arguments drawn from numbers and bound variables, so the executable
// semantics are exercised end to end.
inline TransitionSpec random_transition(Rng& rng, std::string name) {
  TransitionSpec t;
  t.name = std::move(name);
  std::vector<std::string> vars;
  std::size_t pre_count = rng.below(5);  // 0..4
  for (std::size_t i = 0; i < pre_count; ++i) {
    const auto& [functor, arity] = functor_pool()[rng.below(functor_pool().size())];
    Predicate p;
    p.functor = functor;
    for (std::size_t j = 0; j < arity; ++j) p.args.push_back(random_pattern_term(rng, vars));
    t.precondition.insert(p);
  }

  std::set<std::string> bound(vars.begin(), vars.end());
  auto numeric_arg = [&rng, &bound]() {
    if (!bound.empty() && rng.chance(0.5)) {
      std::vector<std::string> pool(bound.begin(), bound.end());
      return Term::variable(pool[rng.below(pool.size())]);
    }
    return Term::number(Rational(rng.range(-20, 20)));
  };
  std::size_t call_count = rng.below(3);  // 0..2
  static const std::vector<std::string> tests{"less_than", "less_or_equal", "greater_than",
                                              "greater_or_equal", "equal", "not_equal"};
  static const std::vector<std::string> values{"add", "subtract", "multiply", "divide", "min",
                                               "max"};
  int fresh = 0;
  for (std::size_t i = 0; i < call_count; ++i) {
    FunctionCall call;
    if (rng.chance(0.5)) {
      call.name = tests[rng.below(tests.size())];
      call.args = {numeric_arg(), numeric_arg()};
    } else {
      call.name = values[rng.below(values.size())];
      std::string result = "R" + std::to_string(fresh++);
      call.args = {numeric_arg(), numeric_arg(), Term::variable(result)};
      bound.insert(result);
    }
    t.computation.push_back(std::move(call));
  }

  std::size_t action_count = 1 + rng.below(3);  // 1..3
  for (std::size_t i = 0; i < action_count; ++i) {
    ActionItem item;
    item.op = rng.chance(0.5) ? ActionOp::Add : ActionOp::Delete;
    const auto& [functor, arity] = functor_pool()[rng.below(functor_pool().size())];
    Predicate p;
    p.functor = functor;
    for (std::size_t j = 0; j < arity; ++j) {
      if (!bound.empty() && rng.chance(0.5)) {
        std::vector<std::string> pool(bound.begin(), bound.end());
        p.args.push_back(Term::variable(pool[rng.below(pool.size())]));
      } else {
        p.args.push_back(random_ground_term(rng));
      }
    }
    item.pred = p;
    t.action.push_back(std::move(item));
  }
  return t;
}

// Transition built against a concrete state: precondition predicates are
// state predicates with some arguments abstracted to variables, so matches
// are dense. One extra fully random predicate is mixed in sometimes to keep
// the no-match path exercised.
inline TransitionSpec random_matching_transition(Rng& rng, const State& s, std::string name) {
  TransitionSpec t;
  t.name = std::move(name);
  std::vector<std::string> vars;
  std::vector<Predicate> facts(s.predicates.begin(), s.predicates.end());
  std::size_t pre_count = rng.below(std::min<std::size_t>(facts.size() + 1, 5));
  for (std::size_t i = 0; i < pre_count && !facts.empty(); ++i) {
    Predicate p = facts[rng.below(facts.size())];
    for (Term& arg : p.args) {
      if (rng.chance(0.5)) {
        std::string v = variable_pool()[rng.below(variable_pool().size())];
        vars.push_back(v);
        arg = Term::variable(v);
      } else if (arg.kind() == kmarf::TermKind::Compound && rng.chance(0.6)) {
        std::string v = variable_pool()[rng.below(variable_pool().size())];
        vars.push_back(v);
        arg = Term::compound(arg.name(), {Term::variable(v)});
      }
    }
    t.precondition.insert(p);
  }
  if (t.precondition.size() < 4 && rng.chance(0.3)) {
    const auto& [functor, arity] = functor_pool()[rng.below(functor_pool().size())];
    Predicate p;
    p.functor = functor;
    for (std::size_t j = 0; j < arity; ++j) p.args.push_back(random_pattern_term(rng, vars));
    t.precondition.insert(p);
  }
  // Collect the variables actually present after set-insertion.
  vars.clear();
  {
    std::set<std::string> present;
    for (const Predicate& p : t.precondition) p.collect_variables(present);
    vars.assign(present.begin(), present.end());
  }

  std::set<std::string> bound(vars.begin(), vars.end());
  auto numeric_arg = [&rng, &bound]() {
    if (!bound.empty() && rng.chance(0.5)) {
      std::vector<std::string> pool(bound.begin(), bound.end());
      return Term::variable(pool[rng.below(pool.size())]);
    }
    return Term::number(Rational(rng.range(-20, 20)));
  };
  static const std::vector<std::string> tests{"less_than", "less_or_equal", "greater_than",
                                              "greater_or_equal", "equal", "not_equal"};
  static const std::vector<std::string> values{"add", "subtract", "multiply", "divide", "min",
                                               "max"};
  int fresh = 0;
  std::size_t call_count = rng.below(3);
  for (std::size_t i = 0; i < call_count; ++i) {
    FunctionCall call;
    if (rng.chance(0.5)) {
      call.name = tests[rng.below(tests.size())];
      call.args = {numeric_arg(), numeric_arg()};
    } else {
      call.name = values[rng.below(values.size())];
      std::string result = "R" + std::to_string(fresh++);
      call.args = {numeric_arg(), numeric_arg(), Term::variable(result)};
      bound.insert(result);
    }
    t.computation.push_back(std::move(call));
  }

  std::size_t action_count = 1 + rng.below(3);
  for (std::size_t i = 0; i < action_count; ++i) {
    ActionItem item;
    item.op = rng.chance(0.5) ? ActionOp::Add : ActionOp::Delete;
    if (!t.precondition.empty() && rng.chance(0.6)) {
      std::vector<Predicate> pre(t.precondition.begin(), t.precondition.end());
      item.pred = pre[rng.below(pre.size())];
    } else {
      const auto& [functor, arity] = functor_pool()[rng.below(functor_pool().size())];
      Predicate p;
      p.functor = functor;
      for (std::size_t j = 0; j < arity; ++j) {
        if (!bound.empty() && rng.chance(0.5)) {
          std::vector<std::string> pool(bound.begin(), bound.end());
          p.args.push_back(Term::variable(pool[rng.below(pool.size())]));
        } else {
          p.args.push_back(random_ground_term(rng));
        }
      }
      item.pred = p;
    }
    t.action.push_back(std::move(item));
  }
  return t;
}

inline Model random_model(Rng& rng, std::size_t states = 2, std::size_t transitions = 2) {
  Model m;
  for (std::size_t i = 0; i < states; ++i) {
    State s = random_state(rng, "s" + std::to_string(i));
    m.states.emplace(s.name, std::move(s));
  }
  for (std::size_t i = 0; i < transitions; ++i) {
    TransitionSpec t = random_transition(rng, "t" + std::to_string(i));
    m.transitions.emplace(t.name, std::move(t));
  }
  if (rng.chance(0.7)) {
    m.initial = "s0";
    m.goal = "s" + std::to_string(rng.below(states));
  }
  if (rng.chance(0.3)) {
    kmarf::TransformationRules r;
    r.type_predicates.insert("mark");
    r.fluent_predicates["cap"] = 2;
    r.wrappers["min"] = "minutes";
    if (rng.chance(0.5)) r.allow_existential_goal = true;
    m.rules = r;
  }
  return m;
}

}  // namespace gen
