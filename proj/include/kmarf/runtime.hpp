#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kmarf/planner.hpp"

namespace kmarf {

// Misuse of the run lifecycle (stepping a finished run, perturbing with
// variables, ...). Distinct from domain outcomes like PlanFailure.
struct RuntimeApiError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- meta-reasoning dispatch -------------------------------------------------

enum class QueryKind { ReachGoal, ValidateTrace, CheckInvariant };

inline std::optional<QueryKind> parse_query_kind(const std::string& text) {
  if (text == "reach-goal") return QueryKind::ReachGoal;
  if (text == "validate-trace") return QueryKind::ValidateTrace;
  if (text == "check-invariant") return QueryKind::CheckInvariant;
  return std::nullopt;
}

inline const char* to_string(QueryKind kind) {
  switch (kind) {
    case QueryKind::ReachGoal: return "reach-goal";
    case QueryKind::ValidateTrace: return "validate-trace";
    case QueryKind::CheckInvariant: return "check-invariant";
  }
  return "?";
}

struct Query {
  QueryKind kind = QueryKind::ReachGoal;
  std::string model;
  nlohmann::json payload;  // kind-specific arguments
};

// Ordered (query kind -> solver) rules; first match wins; must be total
// over the query kinds. Lives in the knowledge base as data, not code.
struct ExpertiseRule {
  QueryKind kind;
  std::string solver;
  nlohmann::json config;
};

struct ExpertiseTable {
  std::vector<ExpertiseRule> rules;

  static ExpertiseTable from_json(const nlohmann::json& doc) {
    ExpertiseTable table;
    for (const auto& item : doc.at("rules")) {
      auto kind = parse_query_kind(item.at("query").get<std::string>());
      if (!kind) throw RuntimeApiError("unknown query kind in expertise table");
      table.rules.push_back(
          ExpertiseRule{*kind, item.at("solver").get<std::string>(),
                        item.value("config", nlohmann::json::object())});
    }
    for (QueryKind kind :
         {QueryKind::ReachGoal, QueryKind::ValidateTrace, QueryKind::CheckInvariant}) {
      bool covered = false;
      for (const ExpertiseRule& r : table.rules) covered |= r.kind == kind;
      if (!covered)
        throw RuntimeApiError(std::string("expertise table does not cover ") + to_string(kind));
    }
    return table;
  }

  nlohmann::json to_json() const {
    nlohmann::json rules_doc = nlohmann::json::array();
    for (const ExpertiseRule& r : rules)
      rules_doc.push_back({{"query", to_string(r.kind)}, {"solver", r.solver}, {"config", r.config}});
    return {{"rules", rules_doc}};
  }
};

// Mirrors config/expertise.json; used when no table file is supplied.
inline ExpertiseTable default_expertise_table() {
  return ExpertiseTable::from_json(nlohmann::json{
      {"rules",
       {{{"query", "reach-goal"},
         {"solver", "planner"},
         {"config", {{"bound", kDefaultPlanBound}}}},
        {{"query", "validate-trace"}, {"solver", "plan-validator"}, {"config", nlohmann::json::object()}},
        {{"query", "check-invariant"},
         {"solver", "reachability-checker"},
         {"config", {{"bound", kDefaultPlanBound}}}}}}});
}

struct SolverInvocation {
  std::string solver;
  nlohmann::json config;
};

inline SolverInvocation dispatch(const Query& q, const ExpertiseTable& table) {
  for (const ExpertiseRule& r : table.rules)
    if (r.kind == q.kind) return SolverInvocation{r.solver, r.config};
  throw RuntimeApiError("expertise table does not cover the query kind");  // unreachable if total
}

// --- bounded reachability checking ---------------------------------------

struct InvariantOutcome {
  bool violated = false;
  std::optional<State> witness;
  std::size_t explored = 0;
  bool exhaustive = false;  // whole reachable space visited within the bound
};

// Asserts that `forbidden` (optionally filtered by an effect-free
// computation over the matched bindings) never matches any reachable state.
inline InvariantOutcome check_invariant(const Model& m, const std::set<Predicate>& forbidden,
                                        const std::vector<FunctionCall>& filter = {},
                                        std::size_t bound = kDefaultPlanBound) {
  if (!m.initial) throw std::logic_error("check_invariant requires an initial designation");
  InvariantOutcome outcome;
  std::vector<State> frontier{m.initial_state()};
  std::set<std::string> seen{canonical_state_text(frontier[0])};
  while (!frontier.empty()) {
    State current = frontier.back();
    frontier.pop_back();
    if (outcome.explored >= bound) return outcome;  // inconclusive
    ++outcome.explored;
    for (const Substitution& match : match_precondition(forbidden, current)) {
      if (!eval_computation(filter, match)) continue;
      outcome.violated = true;
      outcome.witness = current;
      return outcome;
    }
    for (TransitionStep& step : successors(current, m.transitions)) {
      std::string key = canonical_state_text(step.destination);
      if (seen.insert(std::move(key)).second) frontier.push_back(std::move(step.destination));
    }
  }
  outcome.exhaustive = true;
  return outcome;
}

// --- run lifecycle -----------------------------------------------------------

enum class RunStatus { Running, Replanning, Done, Failed };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Running: return "running";
    case RunStatus::Replanning: return "replanning";
    case RunStatus::Done: return "done";
    case RunStatus::Failed: return "failed";
  }
  return "?";
}

struct PerturbRecord {
  std::vector<Predicate> added;
  std::vector<Predicate> deleted;
};

using HistoryEntry = std::variant<TransitionStep, PerturbRecord>;

// One simulated execution of a plan against a world state. The world only
// ever changes through apply_transition of a validated step or an explicit
// perturbation.
struct RunState {
  std::string id;
  Model model;  // carries the goal; `initial` tracks the current world
  State world;
  std::vector<TransitionStep> remaining;
  std::vector<HistoryEntry> history;
  RunStatus status = RunStatus::Running;
  std::optional<PlanFailure> failure;
  std::size_t bound = kDefaultPlanBound;
  std::vector<nlohmann::json> events;
  std::size_t seq = 0;
};

namespace runtime_detail {

inline nlohmann::json base_event(const RunState& run, const char* kind) {
  return {{"event", kind},
          {"run", run.id},
          {"seq", run.seq},
          {"world", state_hash(run.world)}};
}

inline void finish_event(RunState& run, nlohmann::json event) {
  event["status"] = to_string(run.status);
  run.events.push_back(std::move(event));
  ++run.seq;
}

inline void plan_into(RunState& run, const char* event_kind) {
  Model query = run.model;
  State current = run.world;
  current.name = "world";
  query.states["world"] = current;
  query.initial = "world";
  PlanResult result = find_plan(query, run.bound);
  nlohmann::json event = base_event(run, event_kind);
  if (std::holds_alternative<Plan>(result)) {
    Plan plan = std::get<Plan>(result);
    event["outcome"] = "plan";
    event["cost"] = plan.cost;
    run.remaining = std::move(plan.steps);
    run.failure.reset();
    run.status = run.remaining.empty() ? RunStatus::Done : RunStatus::Running;
  } else {
    PlanFailure f = std::get<PlanFailure>(result);
    event["outcome"] = "failure";
    event["reason"] = f.reason == FailReason::FrontierExhausted ? "frontier-exhausted" : "bound-hit";
    nlohmann::json unsatisfied = nlohmann::json::array();
    for (const Predicate& p : f.unsatisfied) unsatisfied.push_back(p.to_text());
    event["unsatisfied"] = unsatisfied;
    run.failure = std::move(f);
    run.remaining.clear();
    run.status = RunStatus::Failed;
  }
  finish_event(run, std::move(event));
}

}  // namespace runtime_detail

// Creates a run and plans from the model's initial state to its goal.
inline RunState start_run(std::string id, Model model, std::size_t bound = kDefaultPlanBound) {
  if (!model.has_endpoints())
    throw RuntimeApiError("run requires a model with initial and goal designations");
  RunState run;
  run.id = std::move(id);
  run.world = model.initial_state();
  run.model = std::move(model);
  run.bound = bound;
  runtime_detail::plan_into(run, "plan");
  return run;
}

// Applies the next plan step. The step must re-derive against the current
// world (precondition with the recorded bindings, computation, application);
// any discrepancy with the plan's expectation flips the run to replanning.
inline void execute(RunState& run) {
  if (run.status != RunStatus::Running)
    throw RuntimeApiError("execute requires a running run (status is " +
                          std::string(to_string(run.status)) + ")");
  nlohmann::json event = runtime_detail::base_event(run, "execute");
  if (run.remaining.empty()) {
    if (satisfies_goal(run.world, run.model.goal_state())) {
      run.status = RunStatus::Done;
      event["outcome"] = "done";
    } else {
      run.status = RunStatus::Replanning;
      event["outcome"] = "goal-not-reached";
    }
    event["world"] = state_hash(run.world);
    runtime_detail::finish_event(run, std::move(event));
    return;
  }

  const TransitionStep& step = run.remaining.front();
  event["transition"] = step.transition;
  const TransitionSpec& t = run.model.transitions.at(step.transition);

  Substitution pre_binding;
  for (const std::string& v : t.precondition_variables()) {
    auto it = step.binding.find(v);
    if (it != step.binding.end()) pre_binding.emplace(v, it->second);
  }
  bool matches = false;
  for (const Substitution& match : match_precondition(t.precondition, run.world))
    if (match == pre_binding) {
      matches = true;
      break;
    }
  if (!matches) {
    run.status = RunStatus::Replanning;
    event["outcome"] = "precondition-miss";
    runtime_detail::finish_event(run, std::move(event));
    return;
  }
  auto computed = eval_computation(t.computation, pre_binding);
  if (!computed) {
    run.status = RunStatus::Replanning;
    event["outcome"] = "computation-miss";
    runtime_detail::finish_event(run, std::move(event));
    return;
  }

  // Actuate, then compare the produced world against the plan's expectation
  // (full canonical state comparison).
  TransitionStep actual;
  actual.source = run.world;
  actual.transition = step.transition;
  actual.binding = *computed;
  actual.destination = apply_transition(run.world, t, *computed);
  State expected = step.destination;
  run.world = actual.destination;
  run.history.push_back(actual);
  if (run.world != expected) {
    run.status = RunStatus::Replanning;
    event["outcome"] = "mismatch";
  } else {
    run.remaining.erase(run.remaining.begin());
    event["outcome"] = "applied";
    event["remaining"] = run.remaining.size();
  }
  event["world"] = state_hash(run.world);
  runtime_detail::finish_event(run, std::move(event));
}

// Pushes external knowledge into the world: set delete, then set add. No
// replanning is triggered until the next execute.
inline void perturb(RunState& run, const std::vector<Predicate>& add,
                    const std::vector<Predicate>& del) {
  if (run.status != RunStatus::Running)
    throw RuntimeApiError("perturb requires a running run (status is " +
                          std::string(to_string(run.status)) + ")");
  for (const Predicate& p : add)
    if (!p.is_ground()) throw RuntimeApiError("perturbation predicate is not ground: " + p.to_text());
  for (const Predicate& p : del)
    if (!p.is_ground()) throw RuntimeApiError("perturbation predicate is not ground: " + p.to_text());
  nlohmann::json event = runtime_detail::base_event(run, "perturb");
  PerturbRecord record;
  record.added = add;
  record.deleted = del;
  for (const Predicate& p : del) run.world.predicates.erase(p);
  for (const Predicate& p : add) run.world.predicates.insert(p);
  run.history.push_back(record);
  nlohmann::json added = nlohmann::json::array(), deleted = nlohmann::json::array();
  for (const Predicate& p : add) added.push_back(p.to_text());
  for (const Predicate& p : del) deleted.push_back(p.to_text());
  event["add"] = added;
  event["delete"] = deleted;
  event["world"] = state_hash(run.world);
  runtime_detail::finish_event(run, std::move(event));
}

// Replans from the current world to the original goal, from scratch.
inline void replan(RunState& run) {
  if (run.status != RunStatus::Replanning)
    throw RuntimeApiError("replan requires a replanning run (status is " +
                          std::string(to_string(run.status)) + ")");
  runtime_detail::plan_into(run, "replan");
}

// The interpreter loop: execute steps, replanning whenever the world
// disagrees with the plan, until the run is done or failed.
inline void run_to_completion(RunState& run) {
  while (run.status == RunStatus::Running || run.status == RunStatus::Replanning) {
    if (run.status == RunStatus::Replanning)
      replan(run);
    else
      execute(run);
  }
}

// History replay: folds transition steps and perturbation pseudo-steps from
// the run's starting world; true iff the fold reproduces the current world.
inline bool replay_history(const Model& model, const State& start, const RunState& run) {
  State current = start;
  for (const HistoryEntry& entry : run.history) {
    if (std::holds_alternative<TransitionStep>(entry)) {
      const TransitionStep& step = std::get<TransitionStep>(entry);
      if (!(step.source == current)) return false;
      auto it = model.transitions.find(step.transition);
      if (it == model.transitions.end()) return false;
      if (!(apply_transition(current, it->second, step.binding) == step.destination)) return false;
      current = step.destination;
    } else {
      const PerturbRecord& record = std::get<PerturbRecord>(entry);
      for (const Predicate& p : record.deleted) current.predicates.erase(p);
      for (const Predicate& p : record.added) current.predicates.insert(p);
    }
  }
  return current == run.world;
}

inline nlohmann::json run_summary(const RunState& run) {
  nlohmann::json out{{"run", run.id},
                     {"status", to_string(run.status)},
                     {"world", state_hash(run.world)},
                     {"remaining", run.remaining.size()},
                     {"history", run.history.size()}};
  if (run.failure) {
    nlohmann::json unsatisfied = nlohmann::json::array();
    for (const Predicate& p : run.failure->unsatisfied) unsatisfied.push_back(p.to_text());
    out["unsatisfied"] = unsatisfied;
  }
  return out;
}

}  // namespace kmarf
