#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kmarf/engine.hpp"
#include "kmarf/model.hpp"
#include "kmarf/unify.hpp"

namespace kmarf {

struct Plan {
  std::vector<TransitionStep> steps;
  std::size_t cost = 0;  // step count
};

enum class FailReason { FrontierExhausted, BoundHit };

struct PlanFailure {
  std::size_t explored = 0;
  FailReason reason = FailReason::FrontierExhausted;
  // Goal predicates never co-satisfied in any reached state; non-empty when
  // the frontier was exhausted.
  std::vector<Predicate> unsatisfied;
};

using PlanResult = std::variant<Plan, PlanFailure>;

inline constexpr std::size_t kDefaultPlanBound = 1000000;

// Existential subset match: the goal (which may carry variables) holds in s
// iff its predicate set matches s under some substitution.
inline bool satisfies_goal(const State& s, const State& goal) {
  return !match_precondition(goal.predicates, s).empty();
}

namespace detail {

// Largest goal subset jointly satisfiable in some reached state; the
// complement is the unsolvability diagnosis. Subsets are enumerated by
// decreasing size, so the first hit wins. Goals are small; for pathological
// sizes fall back to per-predicate analysis.
inline std::vector<Predicate> never_satisfied_goals(const std::set<Predicate>& goal,
                                                    const std::vector<State>& reached) {
  std::vector<Predicate> preds(goal.begin(), goal.end());
  std::size_t n = preds.size();
  if (n == 0) return {};
  if (n <= 12) {
    std::vector<std::vector<std::size_t>> by_size(n);  // subsets of size 1..n-1, grouped
    for (std::size_t mask = 1; mask + 1 < (1ull << n); ++mask)
      by_size[static_cast<std::size_t>(__builtin_popcountll(mask)) - 1].push_back(mask);
    for (std::size_t size = n; size >= 1; --size) {
      std::vector<std::size_t> masks =
          size == n ? std::vector<std::size_t>{(1ull << n) - 1} : by_size[size - 1];
      for (std::size_t mask : masks) {
        std::set<Predicate> subset;
        for (std::size_t i = 0; i < n; ++i)
          if (mask & (1ull << i)) subset.insert(preds[i]);
        for (const State& s : reached) {
          if (!match_precondition(subset, s).empty()) {
            std::vector<Predicate> out;
            for (std::size_t i = 0; i < n; ++i)
              if (!(mask & (1ull << i))) out.push_back(preds[i]);
            return out;
          }
        }
      }
    }
    return preds;  // not even one goal predicate is ever reached
  }
  std::vector<Predicate> out;
  for (const Predicate& p : preds) {
    bool hit = false;
    for (const State& s : reached)
      if (!match_precondition({p}, s).empty()) {
        hit = true;
        break;
      }
    if (!hit) out.push_back(p);
  }
  if (out.empty()) out = preds;
  return out;
}

}  // namespace detail

// Breadth-first search from the initial state to the goal. Uniform unit
// cost, duplicate elimination on canonical state text, deterministic
// tie-breaking through canonical successor order. `bound` caps the number of
// expanded (popped) states.
inline PlanResult find_plan(const Model& m, std::size_t bound = kDefaultPlanBound) {
  if (!m.has_endpoints())
    throw std::logic_error("find_plan requires initial and goal designations");
  if (bound < 1) throw std::invalid_argument("bound must be >= 1");
  const State& goal = m.goal_state();

  struct Node {
    State state;
    std::size_t parent;       // index into nodes; self for the root
    std::string transition;   // edge into this node
    Substitution binding;
  };
  std::vector<Node> nodes;
  std::unordered_map<std::string, std::size_t> seen;

  auto reconstruct = [&nodes](std::size_t index) {
    Plan plan;
    std::vector<std::size_t> chain;
    for (std::size_t i = index; nodes[i].parent != i; i = nodes[i].parent) chain.push_back(i);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      TransitionStep step;
      step.source = nodes[nodes[*it].parent].state;
      step.transition = nodes[*it].transition;
      step.binding = nodes[*it].binding;
      step.destination = nodes[*it].state;
      plan.steps.push_back(std::move(step));
    }
    plan.cost = plan.steps.size();
    return plan;
  };

  nodes.push_back(Node{m.initial_state(), 0, {}, {}});
  seen.emplace(canonical_state_text(nodes[0].state), 0);
  if (satisfies_goal(nodes[0].state, goal)) return reconstruct(0);

  std::deque<std::size_t> frontier{0};
  std::size_t expanded = 0;
  while (!frontier.empty()) {
    if (expanded >= bound) {
      PlanFailure f;
      f.explored = expanded;
      f.reason = FailReason::BoundHit;
      return f;
    }
    std::size_t current = frontier.front();
    frontier.pop_front();
    ++expanded;
    for (TransitionStep& step : successors(nodes[current].state, m.transitions)) {
      std::string key = canonical_state_text(step.destination);
      if (seen.count(key)) continue;
      nodes.push_back(Node{std::move(step.destination), current, step.transition,
                           std::move(step.binding)});
      std::size_t index = nodes.size() - 1;
      seen.emplace(std::move(key), index);
      if (satisfies_goal(nodes[index].state, goal)) return reconstruct(index);
      frontier.push_back(index);
    }
  }

  PlanFailure f;
  f.explored = expanded;
  f.reason = FailReason::FrontierExhausted;
  std::vector<State> reached;
  reached.reserve(nodes.size());
  for (const Node& n : nodes) reached.push_back(n.state);
  f.unsatisfied = detail::never_satisfied_goals(goal.predicates, reached);
  return f;
}

// --- independent plan checking --------------------------------------------

struct ValidationError {
  enum class Cause {
    UnknownTransition,
    ChainBreak,
    Precondition,
    Computation,
    DestinationMismatch,
    GoalUnsatisfied,
  };
  std::size_t step = 0;
  Cause cause = Cause::Precondition;
  std::string detail;
};

inline const char* to_string(ValidationError::Cause c) {
  switch (c) {
    case ValidationError::Cause::UnknownTransition: return "unknown-transition";
    case ValidationError::Cause::ChainBreak: return "chain-break";
    case ValidationError::Cause::Precondition: return "precondition";
    case ValidationError::Cause::Computation: return "computation";
    case ValidationError::Cause::DestinationMismatch: return "destination-mismatch";
    case ValidationError::Cause::GoalUnsatisfied: return "goal-unsatisfied";
  }
  return "?";
}

// Re-derives every step from scratch (match + compute + apply) and checks
// chaining and final goal satisfaction. Accepts iff the whole plan is
// reproducible from the model.
inline std::optional<ValidationError> validate_plan(const Model& m, const Plan& plan) {
  using Cause = ValidationError::Cause;
  State current = m.initial_state();
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const TransitionStep& step = plan.steps[i];
    auto it = m.transitions.find(step.transition);
    if (it == m.transitions.end())
      return ValidationError{i, Cause::UnknownTransition, step.transition};
    const TransitionSpec& t = it->second;
    if (step.source != current)
      return ValidationError{i, Cause::ChainBreak, "source does not chain from previous step"};

    Substitution pre_binding;
    std::set<std::string> pre_vars = t.precondition_variables();
    for (const std::string& v : pre_vars) {
      auto b = step.binding.find(v);
      if (b == step.binding.end())
        return ValidationError{i, Cause::Precondition, "binding missing variable " + v};
      pre_binding.emplace(v, b->second);
    }
    MatchSet matches = match_precondition(t.precondition, current);
    bool found = false;
    for (const Substitution& s : matches)
      if (s == pre_binding) {
        found = true;
        break;
      }
    if (!found)
      return ValidationError{i, Cause::Precondition,
                             "recorded binding is not a precondition match"};

    auto computed = eval_computation(t.computation, pre_binding);
    if (!computed) return ValidationError{i, Cause::Computation, "computation fails"};
    if (*computed != step.binding)
      return ValidationError{i, Cause::Computation, "recorded binding disagrees with computation"};

    State derived = apply_transition(current, t, *computed);
    if (derived != step.destination)
      return ValidationError{i, Cause::DestinationMismatch,
                             "recorded destination differs from derived state"};
    current = std::move(derived);
  }
  if (!satisfies_goal(current, m.goal_state()))
    return ValidationError{plan.steps.size(), Cause::GoalUnsatisfied,
                           "final state does not satisfy the goal"};
  return std::nullopt;
}

// --- JSON documents --------------------------------------------------------

inline nlohmann::json to_json(const Substitution& sub) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [var, term] : sub) out[var] = term.to_text();
  return out;
}

inline nlohmann::json to_json(const Plan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (const TransitionStep& s : plan.steps)
    steps.push_back({{"transition", s.transition},
                     {"bindings", to_json(s.binding)},
                     {"destination", state_hash(s.destination)}});
  return {{"status", "plan"}, {"cost", plan.cost}, {"steps", steps}};
}

inline nlohmann::json to_json(const PlanFailure& f) {
  nlohmann::json unsatisfied = nlohmann::json::array();
  for (const Predicate& p : f.unsatisfied) unsatisfied.push_back(p.to_text());
  return {{"status", "failure"},
          {"reason", f.reason == FailReason::FrontierExhausted ? "frontier-exhausted" : "bound-hit"},
          {"explored", f.explored},
          {"unsatisfied", unsatisfied}};
}

inline nlohmann::json to_json(const PlanResult& r) {
  if (std::holds_alternative<Plan>(r)) return to_json(std::get<Plan>(r));
  return to_json(std::get<PlanFailure>(r));
}

}  // namespace kmarf
