#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kmarf/model.hpp"
#include "kmarf/term.hpp"

namespace kmarf {

// Variable -> ground term. Idempotent by construction: bindings are ground
// because matching only ever runs against ground states.
using Substitution = std::map<std::string, Term>;

inline Term substitute(const Substitution& sub, const Term& t) {
  switch (t.kind()) {
    case TermKind::Variable: {
      auto it = sub.find(t.name());
      return it == sub.end() ? t : it->second;
    }
    case TermKind::Compound: {
      std::vector<Term> args;
      args.reserve(t.args().size());
      for (const Term& a : t.args()) args.push_back(substitute(sub, a));
      return Term::compound(t.name(), std::move(args));
    }
    default:
      return t;
  }
}

inline Predicate substitute(const Substitution& sub, const Predicate& p) {
  Predicate out;
  out.functor = p.functor;
  out.args.reserve(p.args.size());
  for (const Term& a : p.args) out.args.push_back(substitute(sub, a));
  return out;
}

inline std::string substitution_text(const Substitution& sub) {
  std::string out = "{";
  bool first = true;
  for (const auto& [var, term] : sub) {
    if (!first) out += ", ";
    first = false;
    out += var + "=" + term.to_text();
  }
  out += "}";
  return out;
}

namespace detail {

// One side is a pattern, the other is ground (asserted; stands in for the
// occurs check, which cannot trigger with a ground right-hand side).
inline bool unify_into(const Term& pattern, const Term& ground, Substitution& sub) {
  if (!ground.is_ground()) throw std::invalid_argument("unify: right-hand side must be ground");
  if (pattern.kind() == TermKind::Variable) {
    auto [it, inserted] = sub.emplace(pattern.name(), ground);
    return inserted || it->second == ground;
  }
  if (pattern.kind() != ground.kind()) return false;
  switch (pattern.kind()) {
    case TermKind::Number:
      return pattern.value() == ground.value();
    case TermKind::Literal:
      return pattern.name() == ground.name();
    case TermKind::Compound: {
      if (pattern.name() != ground.name() || pattern.args().size() != ground.args().size())
        return false;
      for (std::size_t i = 0; i < pattern.args().size(); ++i)
        if (!unify_into(pattern.args()[i], ground.args()[i], sub)) return false;
      return true;
    }
    default:
      return false;
  }
}

}  // namespace detail

inline std::optional<Substitution> unify(const Term& pattern, const Term& ground,
                                         Substitution seed = {}) {
  return detail::unify_into(pattern, ground, seed) ? std::optional<Substitution>(std::move(seed))
                                                   : std::nullopt;
}

inline std::optional<Substitution> unify(const Predicate& pattern, const Predicate& ground,
                                         Substitution seed = {}) {
  if (pattern.functor != ground.functor || pattern.args.size() != ground.args.size())
    return std::nullopt;
  for (std::size_t i = 0; i < pattern.args.size(); ++i)
    if (!detail::unify_into(pattern.args[i], ground.args[i], seed)) return std::nullopt;
  return seed;
}

// Deterministically ordered list of substitutions, no duplicates.
using MatchSet = std::vector<Substitution>;

// All substitutions under which every precondition predicate unifies with
// some state predicate. Backtracks over precondition predicates in canonical
// order and candidate state predicates in canonical order, so the result
// order is reproducible. Matching is not injective: two precondition
// predicates may map to the same state predicate.
inline MatchSet match_precondition(const std::set<Predicate>& precondition, const State& state) {
  MatchSet out;
  std::set<std::string> seen;
  std::vector<const Predicate*> goals;
  goals.reserve(precondition.size());
  for (const Predicate& p : precondition) goals.push_back(&p);

  struct Walker {
    const std::vector<const Predicate*>& goals;
    const State& state;
    MatchSet& out;
    std::set<std::string>& seen;

    void walk(std::size_t index, const Substitution& sub) {
      if (index == goals.size()) {
        if (seen.insert(substitution_text(sub)).second) out.push_back(sub);
        return;
      }
      for (const Predicate& candidate : state.predicates) {
        if (auto extended = unify(*goals[index], candidate, sub))
          walk(index + 1, *extended);
      }
    }
  };
  Walker{goals, state, out, seen}.walk(0, Substitution{});
  return out;
}

}  // namespace kmarf
