#pragma once

#include <string>

#include "kmarf/model.hpp"

namespace kmarf {

// Canonical .kmf printing. Deterministic down to the byte: predicate sets in
// canonical order, computation/action in authored order, blocks sorted by
// name, two-space indentation, one blank line between blocks. This text is
// the interchange format the service stores and hashes.

inline std::string print_canonical(const State& s) {
  std::string out = "state " + s.name + " {\n";
  for (const Predicate& p : s.predicates) out += "  " + p.to_text() + ".\n";
  out += "}\n";
  return out;
}

inline std::string print_canonical(const TransitionSpec& t) {
  std::string out = "transition " + t.name + " {\n";
  out += "  pre {\n";
  for (const Predicate& p : t.precondition) out += "    " + p.to_text() + ".\n";
  out += "  }\n";
  if (!t.computation.empty()) {
    out += "  compute {\n";
    for (const FunctionCall& c : t.computation) out += "    " + c.to_text() + ".\n";
    out += "  }\n";
  }
  out += "  action {\n";
  for (const ActionItem& a : t.action) out += "    " + a.to_text() + ".\n";
  out += "  }\n";
  out += "}\n";
  return out;
}

inline std::string print_canonical(const TransformationRules& r) {
  std::string out = "rules {\n";
  if (!r.type_predicates.empty()) {
    out += "  types {\n";
    for (const std::string& f : r.type_predicates) out += "    " + f + ".\n";
    out += "  }\n";
  }
  if (!r.fluent_predicates.empty()) {
    out += "  fluents {\n";
    for (const auto& [functor, arity] : r.fluent_predicates)
      out += "    " + functor + "/" + std::to_string(arity) + ".\n";
    out += "  }\n";
  }
  if (!r.wrappers.empty()) {
    out += "  wrappers {\n";
    for (const auto& [functor, suffix] : r.wrappers) out += "    " + functor + " -> " + suffix + ".\n";
    out += "  }\n";
  }
  if (r.allow_existential_goal) out += "  allow_existential_goal.\n";
  out += "}\n";
  return out;
}

inline std::string print_canonical(const Model& m) {
  std::string out;
  auto paragraph = [&out](const std::string& block) {
    if (!out.empty()) out += '\n';
    out += block;
  };
  for (const auto& [name, state] : m.states) paragraph(print_canonical(state));
  for (const auto& [name, transition] : m.transitions) paragraph(print_canonical(transition));
  if (m.initial || m.goal) {
    std::string directives;
    if (m.initial) directives += "initial " + *m.initial + ".\n";
    if (m.goal) directives += "goal " + *m.goal + ".\n";
    paragraph(directives);
  }
  if (m.rules) paragraph(print_canonical(*m.rules));
  return out;
}

}  // namespace kmarf
