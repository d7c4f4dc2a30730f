#pragma once

#include <optional>
#include <string>
#include <vector>

#include "kmarf/builtins.hpp"
#include "kmarf/model.hpp"
#include "kmarf/unify.hpp"

namespace kmarf {

// One element of the transition relation: source --transition{sigma}--> destination.
struct TransitionStep {
  State source;
  std::string transition;
  Substitution binding;
  State destination;

  // Trace dump line, bit-exact for golden tests:
  //   <source-hash> --<transition>{X=a, Y=b}--> <dest-hash>
  std::string trace_line() const {
    return state_hash(source) + " --" + transition + substitution_text(binding) + "--> " +
           state_hash(destination);
  }

  friend bool operator==(const TransitionStep& a, const TransitionStep& b) {
    return a.source == b.source && a.transition == b.transition && a.binding == b.binding &&
           a.destination == b.destination;
  }
};

// Evaluate the calls in order, threading the substitution. The computation
// succeeds iff every call succeeds.
inline std::optional<Substitution> eval_computation(const std::vector<FunctionCall>& calls,
                                                    Substitution sub) {
  for (const FunctionCall& call : calls) {
    auto next = eval_call(call, std::move(sub));
    if (!next) return std::nullopt;
    sub = std::move(*next);
  }
  return sub;
}

// Copy the source state, then fold the action list in order: add inserts the
// instantiated predicate, delete removes it. Deleting an absent predicate is
// a no-op. Every action predicate must be ground after substitution.
inline State apply_transition(const State& source, const TransitionSpec& t,
                              const Substitution& sub) {
  State dest;
  dest.predicates = source.predicates;
  for (const ActionItem& item : t.action) {
    Predicate p = substitute(sub, item.pred);
    if (!p.is_ground())
      throw EvalError("non-ground action predicate " + p.to_text() + " in transition " + t.name);
    if (item.op == ActionOp::Add)
      dest.predicates.insert(std::move(p));
    else
      dest.predicates.erase(p);
  }
  return dest;
}

// Exhaustive, deterministic successor enumeration: transitions in name
// order, matches in canonical backtracking order, computation filtering
// applied per match.
inline std::vector<TransitionStep> successors(const State& s,
                                              const std::map<std::string, TransitionSpec>& ts) {
  std::vector<TransitionStep> out;
  for (const auto& [name, t] : ts) {
    for (const Substitution& match : match_precondition(t.precondition, s)) {
      auto sub = eval_computation(t.computation, match);
      if (!sub) continue;
      TransitionStep step;
      step.source = s;
      step.transition = name;
      step.binding = *sub;
      step.destination = apply_transition(s, t, *sub);
      out.push_back(std::move(step));
    }
  }
  return out;
}

// Static semantic checks that need the function library: unknown functions,
// result-variable shadowing, arguments that can never be ground at call
// time. Returns human-readable findings; empty means clean.
inline std::vector<std::string> check_model_semantics(const Model& m) {
  std::vector<std::string> issues;
  std::set<std::string> predicate_functors;
  std::set<std::string> compound_functors;
  auto scan_term = [&compound_functors](const Term& t, auto&& self) -> void {
    if (t.kind() == TermKind::Compound) {
      compound_functors.insert(t.name());
      for (const Term& a : t.args()) self(a, self);
    }
  };
  auto scan_pred = [&](const Predicate& p) {
    predicate_functors.insert(p.functor);
    for (const Term& a : p.args) scan_term(a, scan_term);
  };
  for (const auto& [name, state] : m.states)
    for (const Predicate& p : state.predicates) scan_pred(p);

  for (const auto& [name, t] : m.transitions) {
    for (const Predicate& p : t.precondition) scan_pred(p);
    for (const ActionItem& item : t.action) scan_pred(item.pred);

    std::set<std::string> bound = t.precondition_variables();
    for (const FunctionCall& call : t.computation) {
      const FunctionSignature* sig = find_builtin(call.name, call.args.size());
      if (!sig) {
        issues.push_back("transition " + name + ": unknown function " + call.name + "/" +
                         std::to_string(call.args.size()));
        continue;
      }
      std::size_t inputs = sig->kind == FunctionKind::Value ? call.args.size() - 1 : call.args.size();
      for (std::size_t i = 0; i < inputs; ++i) {
        std::set<std::string> vars;
        call.args[i].collect_variables(vars);
        for (const std::string& v : vars)
          if (!bound.count(v))
            issues.push_back("transition " + name + ": call " + call.to_text() +
                             " reads unbound variable " + v);
      }
      if (sig->kind == FunctionKind::Value) {
        const Term& slot = call.args.back();
        if (slot.kind() == TermKind::Variable) {
          if (bound.count(slot.name()))
            issues.push_back("transition " + name + ": call " + call.to_text() +
                             " shadows already-bound variable " + slot.name());
          bound.insert(slot.name());
        }
      }
    }
  }

  // Lint, not an error: the language allows a functor to name both a
  // predicate and a compound term; flag it so model authors notice.
  for (const std::string& f : predicate_functors)
    if (compound_functors.count(f))
      issues.push_back("note: functor '" + f + "' is used as both a predicate and a compound term");
  return issues;
}

}  // namespace kmarf
