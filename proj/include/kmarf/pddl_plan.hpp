#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "kmarf/pddl.hpp"
#include "kmarf/pddl_check.hpp"
#include "kmarf/planner.hpp"

namespace kmarf {

// One ground action instance from an external solver's sequential plan.
struct PlanAction {
  std::string name;
  std::vector<std::string> args;

  std::string to_text() const {
    std::string out = "(" + name;
    for (const std::string& a : args) out += " " + a;
    out += ")";
    return out;
  }
};

// Parses sequential plan output: one action per line, "(name arg ...)",
// tolerating the usual solver decorations — "0.000: (name arg) [1.000]",
// comment lines starting with ';', and blank lines.
inline std::vector<PlanAction> parse_plan_text(const std::string& text) {
  std::vector<PlanAction> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    std::size_t open = line.find('(');
    std::size_t comment = line.find(';');
    if (open == std::string::npos || (comment != std::string::npos && comment < open)) continue;
    std::size_t close = line.find(')', open);
    if (close == std::string::npos) continue;
    std::string body = line.substr(open + 1, close - open - 1);
    PlanAction action;
    std::size_t i = 0;
    while (i < body.size()) {
      while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
      std::size_t start = i;
      while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
      if (start == i) break;
      std::string word = body.substr(start, i - start);
      for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (action.name.empty())
        action.name = word;
      else
        action.args.push_back(word);
    }
    if (!action.name.empty()) out.push_back(std::move(action));
  }
  return out;
}

struct Divergence {
  std::size_t index = 0;  // first non-replayable action (actions.size() = goal not reached)
  std::string reason;
};

// Maps each external action instance back onto a transition step and replays
// the whole plan under the native semantics; the replayed plan then goes
// through validate_plan. nullopt means the external plan is faithful.
inline std::optional<Divergence> cross_validate(const Model& m, const TransformationRules& rules,
                                                const std::vector<PlanAction>& actions,
                                                Plan* replayed_out = nullptr) {
  if (!m.has_endpoints()) return Divergence{0, "model has no initial/goal designation"};
  pddl::Analysis analysis = pddl::analyze(m, rules);

  // Backtracking replay: an action instance may admit several native
  // matches (fluent duplicates); accept if any assignment replays fully.
  struct Replayer {
    const Model& m;
    const TransformationRules& rules;
    const pddl::Analysis& analysis;
    const std::vector<PlanAction>& actions;
    Divergence failure;
    std::size_t deepest = 0;

    bool walk(std::size_t index, const State& current, std::vector<TransitionStep>& steps) {
      if (index == actions.size()) {
        if (satisfies_goal(current, m.goal_state())) return true;
        note(index, "replayed final state does not satisfy the goal");
        return false;
      }
      const PlanAction& action = actions[index];
      auto it = m.transitions.find(action.name);
      if (it == m.transitions.end()) {
        note(index, "no transition named " + action.name);
        return false;
      }
      const TransitionSpec& t = it->second;
      std::vector<std::string> params = pddl::compile_action(t, analysis, rules).parameters;
      if (params.size() != action.args.size()) {
        note(index, "arity mismatch: action takes " + std::to_string(params.size()) +
                        " parameters, plan gives " + std::to_string(action.args.size()));
        return false;
      }
      Substitution pinned;
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!is_literal_name(action.args[i])) {
          note(index, "argument " + action.args[i] + " is not an object literal");
          return false;
        }
        pinned[params[i]] = Term::literal(action.args[i]);
      }
      bool matched = false;
      for (const Substitution& match : match_precondition(t.precondition, current)) {
        bool agrees = true;
        for (const auto& [var, value] : pinned) {
          auto found = match.find(var);
          if (found == match.end() || !(found->second == value)) {
            agrees = false;
            break;
          }
        }
        if (!agrees) continue;
        matched = true;
        auto sub = eval_computation(t.computation, match);
        if (!sub) continue;
        TransitionStep step;
        step.source = current;
        step.transition = t.name;
        step.binding = *sub;
        step.destination = apply_transition(current, t, *sub);
        steps.push_back(step);
        if (walk(index + 1, steps.back().destination, steps)) return true;
        steps.pop_back();
      }
      if (!matched) note(index, "precondition of " + action.name + " does not match");
      else note(index, "no computation-consistent match for " + action.name + " replays");
      return false;
    }

    void note(std::size_t index, const std::string& reason) {
      if (index >= deepest) {
        deepest = index;
        failure = Divergence{index, reason};
      }
    }
  };

  Replayer replayer{m, rules, analysis, actions, {}, 0};
  std::vector<TransitionStep> steps;
  if (!replayer.walk(0, m.initial_state(), steps)) return replayer.failure;

  Plan plan;
  plan.steps = std::move(steps);
  plan.cost = plan.steps.size();
  if (auto err = validate_plan(m, plan))
    return Divergence{err->step, std::string("replayed plan fails validation: ") +
                                     to_string(err->cause)};
  if (replayed_out) *replayed_out = std::move(plan);
  return std::nullopt;
}

// Subprocess boundary for an external PDDL solver. The command template may
// reference {domain} and {problem}; stdout is parsed as sequential plan
// lines. Returns nullopt when the command cannot run.
inline std::optional<std::vector<PlanAction>> run_external_solver(
    const std::string& command_template, const std::string& domain_file,
    const std::string& problem_file) {
  std::string command = command_template;
  auto replace_all = [&command](const std::string& key, const std::string& value) {
    for (std::size_t at = command.find(key); at != std::string::npos; at = command.find(key))
      command.replace(at, key.size(), value);
  };
  replace_all("{domain}", domain_file);
  replace_all("{problem}", problem_file);
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) return std::nullopt;
  std::string output;
  std::array<char, 4096> buffer;
  std::size_t got;
  while ((got = fread(buffer.data(), 1, buffer.size(), pipe)) > 0)
    output.append(buffer.data(), got);
  int status = pclose(pipe);
  if (status != 0) return std::nullopt;
  return parse_plan_text(output);
}

}  // namespace kmarf
