#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kmarf/digest.hpp"
#include "kmarf/model.hpp"
#include "kmarf/unify.hpp"

namespace kmarf {

// A construct with no PDDL counterpart. The compiler never approximates:
// anything outside the mapping table below is reported, naming the
// transition (or state) and the offending construct.
struct MappingError : std::runtime_error {
  std::string where;      // transition or state name, may be empty
  std::string construct;  // offending predicate/call text
  MappingError(std::string where_, std::string construct_, const std::string& message)
      : std::runtime_error(message + (where_.empty() ? "" : " in " + where_) +
                           (construct_.empty() ? "" : ": " + construct_)),
        where(std::move(where_)),
        construct(std::move(construct_)) {}
};

struct PddlArtifact {
  enum class Kind { Domain, Problem };
  Kind kind = Kind::Domain;
  std::string text;
  std::string hash;  // sha256 of text
  std::string uri;   // /artifacts/<hash>

  static PddlArtifact make(Kind kind, std::string text) {
    PddlArtifact a;
    a.kind = kind;
    a.text = std::move(text);
    a.hash = sha256_hex(a.text);
    a.uri = "/artifacts/" + a.hash;
    return a;
  }
};

namespace pddl {

// --- name mangling -----------------------------------------------------------
// kmf identifiers pass through unchanged. Type names strip the is_ prefix.
// Fluent names append the wrapper's declared suffix (waiting + min->minutes
// becomes waiting_minutes). Parameter variables are lowercased with a ?
// sigil. Any resulting collision is a hard error, never silently resolved.

inline std::string type_name(const std::string& functor) {
  if (functor.rfind("is_", 0) == 0 && functor.size() > 3) return functor.substr(3);
  return functor;
}

inline std::string param_name(const std::string& variable) {
  std::string out = "?";
  for (char c : variable) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// PDDL numbers are decimals; exact rationals with non-terminating decimal
// expansions cannot be emitted.
inline std::optional<std::string> pddl_number(const Rational& r) {
  if (r.is_integer()) return std::to_string(r.num());
  std::int64_t den = r.den();
  int twos = 0, fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return std::nullopt;
  int digits = std::max(twos, fives);
  __int128 scaled = r.num();
  for (int i = 0; i < digits; ++i) scaled *= 10;
  scaled /= r.den();
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string raw;
  while (scaled > 0) {
    raw += static_cast<char>('0' + static_cast<int>(scaled % 10));
    scaled /= 10;
  }
  while (static_cast<int>(raw.size()) <= digits) raw += '0';
  std::reverse(raw.begin(), raw.end());
  raw.insert(raw.size() - static_cast<std::size_t>(digits), ".");
  return (negative ? "-" : "") + raw;
}

// --- model analysis ----------------------------------------------------------

struct FluentInfo {
  std::string functor;
  std::size_t arity = 2;
  std::optional<std::string> wrapper;  // consistent wrapper functor, if any
  std::string pddl_name;
  bool guarded = false;  // some action deletes or adds it outside an update pair
};

struct Analysis {
  std::map<std::string, FluentInfo> fluents;        // kmf functor -> info
  std::map<std::string, std::string> types;         // type functor -> pddl type
  std::map<std::string, std::size_t> predicates;    // plain + guard functor -> arity
  bool typing = false;

  bool is_type(const std::string& f) const { return types.count(f) != 0; }
  bool is_fluent(const std::string& f) const { return fluents.count(f) != 0; }
};

namespace detail {

// Unwraps (and checks) the last argument of a fluent occurrence.
inline Term fluent_value(const Predicate& p, const FluentInfo& info,
                         const TransformationRules& rules, const std::string& where) {
  if (p.args.size() != info.arity)
    throw MappingError(where, p.to_text(), "fluent arity mismatch");
  const Term& last = p.args.back();
  if (info.wrapper) {
    if (last.kind() != TermKind::Compound || last.name() != *info.wrapper ||
        last.args().size() != 1)
      throw MappingError(where, p.to_text(), "fluent value must be wrapped in " + *info.wrapper);
    return last.args()[0];
  }
  if (last.kind() == TermKind::Compound && rules.wrappers.count(last.name()))
    throw MappingError(where, p.to_text(), "inconsistent wrapper use on fluent " + p.functor);
  return last;
}

// Detects the wrapper convention for one fluent across the whole model and
// checks it is used consistently.
inline void detect_wrapper(FluentInfo& info, const Predicate& p,
                           const TransformationRules& rules, bool& first,
                           const std::string& where) {
  if (p.args.size() != info.arity)
    throw MappingError(where, p.to_text(), "fluent arity mismatch");
  const Term& last = p.args.back();
  std::optional<std::string> wrapper;
  if (last.kind() == TermKind::Compound && rules.wrappers.count(last.name()) &&
      last.args().size() == 1)
    wrapper = last.name();
  if (first) {
    info.wrapper = wrapper;
    first = false;
  } else if (info.wrapper != wrapper) {
    throw MappingError(where, p.to_text(), "inconsistent wrapper use on fluent " + p.functor);
  }
}

}  // namespace detail

inline Analysis analyze(const Model& m, const TransformationRules& rules) {
  Analysis a;
  a.typing = !rules.type_predicates.empty();

  for (const std::string& f : rules.type_predicates) {
    std::string t = type_name(f);
    for (const auto& [other, existing] : a.types)
      if (existing == t)
        throw MappingError("", f, "type name collision between " + other + " and " + f);
    a.types[f] = t;
  }

  for (const auto& [functor, arity] : rules.fluent_predicates) {
    FluentInfo info;
    info.functor = functor;
    info.arity = arity;
    a.fluents[functor] = info;
  }

  // First sweep: wrapper conventions and plain predicate arities.
  auto visit = [&a, &rules](const Predicate& p, const std::string& where, auto&& on_fluent) {
    if (a.is_type(p.functor)) {
      if (p.args.size() != 1)
        throw MappingError(where, p.to_text(), "type predicate must be unary");
      return;
    }
    if (a.is_fluent(p.functor)) {
      on_fluent(a.fluents.at(p.functor), p, where);
      return;
    }
    auto [it, inserted] = a.predicates.emplace(p.functor, p.args.size());
    if (!inserted && it->second != p.args.size())
      throw MappingError(where, p.to_text(), "predicate used with inconsistent arity");
    (void)rules;
  };
  std::map<std::string, bool> first_use;
  for (const auto& kv : a.fluents) first_use[kv.first] = true;
  auto on_fluent = [&first_use, &rules](FluentInfo& info, const Predicate& p,
                                        const std::string& where) {
    detail::detect_wrapper(info, p, rules, first_use.at(info.functor), where);
  };
  for (const auto& [name, s] : m.states)
    for (const Predicate& p : s.predicates) visit(p, "state " + name, on_fluent);
  for (const auto& [name, t] : m.transitions) {
    for (const Predicate& p : t.precondition) visit(p, "transition " + name, on_fluent);
    for (const ActionItem& item : t.action) visit(item.pred, "transition " + name, on_fluent);
  }

  for (auto& [f, info] : a.fluents)
    info.pddl_name = info.wrapper ? f + "_" + rules.wrappers.at(*info.wrapper) : f;

  // Guardedness: a fluent some action deletes or adds outside a delete/add
  // update pair needs a presence predicate next to its value function.
  for (const auto& [name, t] : m.transitions) {
    std::map<std::string, std::pair<int, int>> group;  // functor+keys -> (deletes, adds)
    for (const ActionItem& item : t.action) {
      if (!a.is_fluent(item.pred.functor)) continue;
      std::string key = item.pred.functor;
      for (std::size_t i = 0; i + 1 < item.pred.args.size(); ++i)
        key += "|" + item.pred.args[i].to_text();
      auto& counts = group[key];
      (item.op == ActionOp::Delete ? counts.first : counts.second) += 1;
    }
    for (const auto& [key, counts] : group) {
      std::string functor = key.substr(0, key.find('|'));
      if (!(counts.first == 1 && counts.second == 1)) a.fluents.at(functor).guarded = true;
    }
  }

  // Collision checks across emitted names.
  for (const auto& [f, info] : a.fluents) {
    if (a.predicates.count(info.pddl_name))
      throw MappingError("", info.pddl_name, "fluent name collides with a predicate");
    if (info.guarded) {
      if (info.pddl_name == info.functor)
        throw MappingError("", info.functor,
                           "guarded fluent needs a wrapper to separate value and guard names");
      a.predicates.emplace(info.functor, info.arity - 1);  // guard predicate
    }
    for (const auto& [other, other_info] : a.fluents)
      if (other != f && other_info.pddl_name == info.pddl_name)
        throw MappingError("", info.pddl_name, "fluent name collision");
  }
  return a;
}

// --- per-transition compilation ----------------------------------------------

struct FluentRef {
  std::string text;  // rendered (fluent key...) expression
};

struct ActionCompilation {
  std::vector<std::string> parameters;              // kmf variable names, in order
  std::map<std::string, std::string> param_types;   // kmf variable -> pddl type
  std::vector<std::string> preconditions;           // rendered conjuncts
  std::vector<std::string> effects;                 // rendered conjuncts
};

namespace detail {

struct TransitionContext {
  const TransitionSpec& t;
  const Analysis& a;
  const TransformationRules& rules;
  std::string where;
  std::map<std::string, FluentRef> fluent_vars;     // value variable -> fluent expr
  std::map<std::string, std::vector<Term>> fluent_keys;  // value variable -> key terms
  std::map<std::string, std::string> fluent_of_var;  // value variable -> functor
  std::vector<std::string> params;
  std::set<std::string> param_set;
  std::map<std::string, std::string> param_types;
};

inline std::string render_object(const Term& term, TransitionContext& ctx) {
  if (term.kind() == TermKind::Literal) return term.name();
  if (term.kind() == TermKind::Variable) {
    if (ctx.fluent_vars.count(term.name()))
      throw MappingError(ctx.where, term.to_text(),
                         "fluent value variable used in an object position");
    if (!ctx.param_set.count(term.name())) {
      ctx.param_set.insert(term.name());
      ctx.params.push_back(term.name());
    }
    return param_name(term.name());
  }
  throw MappingError(ctx.where, term.to_text(), "argument has no PDDL object counterpart");
}

inline std::string render_fluent_ref(const Predicate& p, const FluentInfo& info,
                                     TransitionContext& ctx) {
  std::string out = "(" + info.pddl_name;
  for (std::size_t i = 0; i + 1 < p.args.size(); ++i) out += " " + render_object(p.args[i], ctx);
  out += ")";
  return out;
}

// Numeric operand in a comparison or update expression: a number literal or
// a fluent-bound variable.
inline std::string render_operand(const Term& term, TransitionContext& ctx) {
  if (term.kind() == TermKind::Number) {
    auto text = pddl_number(term.value());
    if (!text)
      throw MappingError(ctx.where, term.to_text(), "rational has no finite decimal expansion");
    return *text;
  }
  if (term.kind() == TermKind::Variable) {
    auto it = ctx.fluent_vars.find(term.name());
    if (it != ctx.fluent_vars.end()) return it->second.text;
    throw MappingError(ctx.where, term.to_text(),
                       "numeric operand is neither a number nor a fluent value");
  }
  throw MappingError(ctx.where, term.to_text(), "numeric operand has no PDDL counterpart");
}

}  // namespace detail

inline ActionCompilation compile_action(const TransitionSpec& t, const Analysis& a,
                                        const TransformationRules& rules) {
  detail::TransitionContext ctx{t, a, rules, "transition " + t.name, {}, {}, {}, {}, {}, {}};
  ActionCompilation out;
  std::vector<std::string> numeric_preconditions;
  std::vector<std::string> atom_preconditions;

  // Precondition sweep in canonical order: typing, fluent bindings, atoms.
  for (const Predicate& p : t.precondition) {
    if (a.is_type(p.functor)) {
      const Term& arg = p.args[0];
      if (arg.kind() != TermKind::Variable)
        throw MappingError(ctx.where, p.to_text(),
                           "ground type atom cannot be checked in PDDL");
      std::string var = arg.name();
      if (!ctx.param_set.count(var)) {
        ctx.param_set.insert(var);
        ctx.params.push_back(var);
      }
      auto [it, inserted] = ctx.param_types.emplace(var, a.types.at(p.functor));
      if (!inserted && it->second != a.types.at(p.functor))
        throw MappingError(ctx.where, p.to_text(), "parameter has two distinct types");
      continue;
    }
    if (a.is_fluent(p.functor)) {
      const FluentInfo& info = a.fluents.at(p.functor);
      Term value = detail::fluent_value(p, info, rules, ctx.where);
      if (info.guarded) {
        std::string guard = "(" + p.functor;
        for (std::size_t i = 0; i + 1 < p.args.size(); ++i)
          guard += " " + detail::render_object(p.args[i], ctx);
        guard += ")";
        atom_preconditions.push_back(guard);
      }
      std::string ref = detail::render_fluent_ref(p, info, ctx);
      if (value.kind() == TermKind::Variable) {
        if (ctx.fluent_vars.count(value.name()) || ctx.param_set.count(value.name()))
          throw MappingError(ctx.where, p.to_text(),
                             "fluent value variable is bound more than once");
        ctx.fluent_vars[value.name()] = FluentRef{ref};
        std::vector<Term> keys(p.args.begin(), p.args.end() - 1);
        ctx.fluent_keys[value.name()] = keys;
        ctx.fluent_of_var[value.name()] = p.functor;
      } else if (value.kind() == TermKind::Number) {
        auto text = pddl_number(value.value());
        if (!text)
          throw MappingError(ctx.where, p.to_text(), "rational has no finite decimal expansion");
        numeric_preconditions.push_back("(= " + ref + " " + *text + ")");
      } else {
        throw MappingError(ctx.where, p.to_text(), "fluent value has no PDDL counterpart");
      }
      continue;
    }
    std::string atom = "(" + p.functor;
    for (const Term& arg : p.args) atom += " " + detail::render_object(arg, ctx);
    atom += ")";
    atom_preconditions.push_back(atom);
  }

  // Computation sweep: comparisons become numeric preconditions, value calls
  // must each link exactly one fluent update recognized below.
  struct PendingCall {
    const FunctionCall* call;
    bool consumed = false;
  };
  std::map<std::string, PendingCall> value_calls;  // result variable -> call
  for (const FunctionCall& call : t.computation) {
    static const std::map<std::string, std::string> comparisons{
        {"less_than", "<"},   {"less_or_equal", "<="},    {"greater_than", ">"},
        {"greater_or_equal", ">="}, {"equal", "="}};
    auto cmp = comparisons.find(call.name);
    if (cmp != comparisons.end()) {
      if (call.args.size() != 2)
        throw MappingError(ctx.where, call.to_text(), "comparison arity mismatch");
      numeric_preconditions.push_back("(" + cmp->second + " " +
                                      detail::render_operand(call.args[0], ctx) + " " +
                                      detail::render_operand(call.args[1], ctx) + ")");
      continue;
    }
    static const std::set<std::string> linkable{"add", "subtract", "multiply", "divide"};
    if (linkable.count(call.name) && call.args.size() == 3 &&
        call.args.back().kind() == TermKind::Variable) {
      if (!value_calls.emplace(call.args.back().name(), PendingCall{&call, false}).second)
        throw MappingError(ctx.where, call.to_text(), "result variable bound twice");
      continue;
    }
    throw MappingError(ctx.where, call.to_text(), "computation has no PDDL counterpart");
  }

  // Action sweep. Fluent items are grouped per (functor, keys) and matched
  // against the update-pair table; plain items are net-folded in order.
  struct FluentGroup {
    std::vector<const ActionItem*> deletes;
    std::vector<const ActionItem*> adds;
    std::size_t first_index = 0;
  };
  std::map<std::string, FluentGroup> groups;
  std::vector<std::string> group_order;
  std::vector<std::pair<std::string, std::size_t>> plain_order;  // pattern, first index
  std::map<std::string, ActionOp> plain_net;

  for (std::size_t index = 0; index < t.action.size(); ++index) {
    const ActionItem& item = t.action[index];
    const Predicate& p = item.pred;
    if (a.is_type(p.functor))
      throw MappingError(ctx.where, item.to_text(), "actions may not change type predicates");
    if (a.is_fluent(p.functor)) {
      std::string key = p.functor;
      for (std::size_t i = 0; i + 1 < p.args.size(); ++i) key += "|" + p.args[i].to_text();
      auto [it, inserted] = groups.emplace(key, FluentGroup{});
      if (inserted) {
        it->second.first_index = index;
        group_order.push_back(key);
      }
      (item.op == ActionOp::Delete ? it->second.deletes : it->second.adds).push_back(&item);
      continue;
    }
    std::string atom = "(" + p.functor;
    for (const Term& arg : p.args) atom += " " + detail::render_object(arg, ctx);
    atom += ")";
    if (!plain_net.count(atom)) plain_order.push_back({atom, index});
    plain_net[atom] = item.op;
  }

  // Interleave fluent-group effects and plain effects by first occurrence.
  struct Emitted {
    std::size_t index;
    std::vector<std::string> texts;
  };
  std::vector<Emitted> emitted;

  for (const std::string& key : group_order) {
    const FluentGroup& g = groups.at(key);
    const ActionItem* sample = !g.deletes.empty() ? g.deletes.front() : g.adds.front();
    const Predicate& p = sample->pred;
    const FluentInfo& info = a.fluents.at(p.functor);
    std::string ref = detail::render_fluent_ref(p, info, ctx);
    std::string guard_atom = "(" + p.functor;
    for (std::size_t i = 0; i + 1 < p.args.size(); ++i)
      guard_atom += " " + detail::render_object(p.args[i], ctx);
    guard_atom += ")";

    auto prebound_value_var = [&](const Term& value) -> bool {
      return value.kind() == TermKind::Variable && ctx.fluent_vars.count(value.name()) &&
             ctx.fluent_of_var.at(value.name()) == p.functor &&
             ctx.fluent_vars.at(value.name()).text == ref;
    };

    Emitted e;
    e.index = g.first_index;
    if (g.deletes.size() == 1 && g.adds.size() == 1) {
      Term old_value = detail::fluent_value(g.deletes[0]->pred, info, rules, ctx.where);
      Term new_value = detail::fluent_value(g.adds[0]->pred, info, rules, ctx.where);
      if (!prebound_value_var(old_value))
        throw MappingError(ctx.where, g.deletes[0]->to_text(),
                           "fluent update must delete the precondition-bound value");
      if (new_value.kind() == TermKind::Number) {
        auto text = pddl_number(new_value.value());
        if (!text)
          throw MappingError(ctx.where, g.adds[0]->to_text(),
                             "rational has no finite decimal expansion");
        e.texts.push_back("(assign " + ref + " " + *text + ")");
      } else if (new_value.kind() == TermKind::Variable) {
        auto linked = value_calls.find(new_value.name());
        if (linked == value_calls.end())
          throw MappingError(ctx.where, g.adds[0]->to_text(),
                             "fluent update value is not produced by a computation");
        const FunctionCall& call = *linked->second.call;
        linked->second.consumed = true;
        const Term& lhs = call.args[0];
        const Term& rhs = call.args[1];
        bool lhs_is_old = lhs.kind() == TermKind::Variable && lhs.name() == old_value.name();
        bool rhs_is_old = rhs.kind() == TermKind::Variable && rhs.name() == old_value.name();
        if (call.name == "subtract" && lhs_is_old) {
          e.texts.push_back("(decrease " + ref + " " + detail::render_operand(rhs, ctx) + ")");
        } else if (call.name == "add" && (lhs_is_old || rhs_is_old)) {
          const Term& delta = lhs_is_old ? rhs : lhs;
          e.texts.push_back("(increase " + ref + " " + detail::render_operand(delta, ctx) + ")");
        } else if (call.name == "multiply" && (lhs_is_old || rhs_is_old)) {
          const Term& factor = lhs_is_old ? rhs : lhs;
          e.texts.push_back("(assign " + ref + " (* " + ref + " " +
                            detail::render_operand(factor, ctx) + "))");
        } else if (call.name == "divide" && lhs_is_old) {
          e.texts.push_back("(assign " + ref + " (/ " + ref + " " +
                            detail::render_operand(rhs, ctx) + "))");
        } else {
          throw MappingError(ctx.where, call.to_text(),
                             "linking computation has no increase/decrease/assign counterpart");
        }
      } else {
        throw MappingError(ctx.where, g.adds[0]->to_text(), "fluent update value not mappable");
      }
    } else if (g.deletes.size() == 1 && g.adds.empty()) {
      Term old_value = detail::fluent_value(g.deletes[0]->pred, info, rules, ctx.where);
      if (!prebound_value_var(old_value))
        throw MappingError(ctx.where, g.deletes[0]->to_text(),
                           "fluent delete must name the precondition-bound value");
      e.texts.push_back("(not " + guard_atom + ")");
    } else if (g.adds.size() == 1 && g.deletes.empty()) {
      Term new_value = detail::fluent_value(g.adds[0]->pred, info, rules, ctx.where);
      if (new_value.kind() != TermKind::Number)
        throw MappingError(ctx.where, g.adds[0]->to_text(),
                           "fluent introduction needs a literal number value");
      auto text = pddl_number(new_value.value());
      if (!text)
        throw MappingError(ctx.where, g.adds[0]->to_text(),
                           "rational has no finite decimal expansion");
      e.texts.push_back(guard_atom);
      e.texts.push_back("(assign " + ref + " " + *text + ")");
    } else {
      throw MappingError(ctx.where, sample->to_text(),
                         "unsupported fluent add/delete pattern");
    }
    emitted.push_back(std::move(e));
  }

  for (const auto& [atom, index] : plain_order) {
    Emitted e;
    e.index = index;
    e.texts.push_back(plain_net.at(atom) == ActionOp::Add ? atom : "(not " + atom + ")");
    emitted.push_back(std::move(e));
  }
  std::sort(emitted.begin(), emitted.end(),
            [](const Emitted& x, const Emitted& y) { return x.index < y.index; });

  // Every value call must have been consumed by exactly one fluent update.
  for (const auto& [var, pending] : value_calls)
    if (!pending.consumed)
      throw MappingError(ctx.where, pending.call->to_text(),
                         "computation result feeds no fluent update");

  out.parameters = ctx.params;
  for (const std::string& var : ctx.params) {
    auto it = ctx.param_types.find(var);
    out.param_types[var] = it == ctx.param_types.end() ? "object" : it->second;
  }
  // Parameter name collisions after lowercasing are hard errors.
  std::set<std::string> seen_names;
  for (const std::string& var : ctx.params)
    if (!seen_names.insert(param_name(var)).second)
      throw MappingError(ctx.where, var, "parameter name collision after mangling");

  out.preconditions = atom_preconditions;
  out.preconditions.insert(out.preconditions.end(), numeric_preconditions.begin(),
                           numeric_preconditions.end());
  for (const Emitted& e : emitted)
    out.effects.insert(out.effects.end(), e.texts.begin(), e.texts.end());
  return out;
}

}  // namespace pddl

// Ordered PDDL parameter variables (kmf names) of one transition; the
// being-compiled order used by both compile_domain and the plan back-mapper.
inline std::vector<std::string> action_parameters(const TransitionSpec& t, const Model& m,
                                                  const TransformationRules& rules) {
  pddl::Analysis a = pddl::analyze(m, rules);
  return pddl::compile_action(t, a, rules).parameters;
}

// --- domain ------------------------------------------------------------------

inline PddlArtifact compile_domain(const Model& m, const TransformationRules& rules,
                                   const std::string& name) {
  pddl::Analysis a = pddl::analyze(m, rules);

  std::vector<std::pair<std::string, pddl::ActionCompilation>> actions;
  for (const auto& [tname, t] : m.transitions)
    actions.emplace_back(tname, pddl::compile_action(t, a, rules));

  std::string out = "(define (domain " + name + ")\n";
  out += "  (:requirements :strips";
  if (a.typing) out += " :typing";
  bool any_fluent = !a.fluents.empty();
  if (any_fluent) out += " :numeric-fluents";
  out += ")\n";

  if (a.typing) {
    out += "  (:types";
    std::set<std::string> names;
    for (const auto& [f, t] : a.types) names.insert(t);
    for (const std::string& t : names) out += " " + t;
    out += ")\n";
  }

  if (!a.predicates.empty()) {
    out += "  (:predicates\n";
    for (const auto& [functor, arity] : a.predicates) {
      out += "    (" + functor;
      for (std::size_t i = 0; i < arity; ++i) out += " ?x" + std::to_string(i);
      out += ")\n";
    }
    out += "  )\n";
  }

  if (any_fluent) {
    std::set<std::pair<std::string, std::size_t>> functions;
    for (const auto& [f, info] : a.fluents) functions.insert({info.pddl_name, info.arity - 1});
    out += "  (:functions\n";
    for (const auto& [fname, keys] : functions) {
      out += "    (" + fname;
      for (std::size_t i = 0; i < keys; ++i) out += " ?x" + std::to_string(i);
      out += ")\n";
    }
    out += "  )\n";
  }

  for (const auto& [tname, action] : actions) {
    out += "  (:action " + tname + "\n";
    out += "    :parameters (";
    for (std::size_t i = 0; i < action.parameters.size(); ++i) {
      if (i) out += " ";
      out += pddl::param_name(action.parameters[i]);
      if (a.typing) out += " - " + action.param_types.at(action.parameters[i]);
    }
    out += ")\n";
    out += "    :precondition (and";
    for (const std::string& c : action.preconditions) out += " " + c;
    out += ")\n";
    out += "    :effect (and";
    for (const std::string& e : action.effects) out += " " + e;
    out += ")\n";
    out += "  )\n";
  }
  out += ")\n";
  return PddlArtifact::make(PddlArtifact::Kind::Domain, std::move(out));
}

// --- problem -----------------------------------------------------------------

inline PddlArtifact compile_problem(const Model& m, const TransformationRules& rules,
                                    const std::string& name) {
  if (!m.has_endpoints())
    throw std::logic_error("compile_problem requires initial and goal designations");
  pddl::Analysis a = pddl::analyze(m, rules);
  const State& initial = m.initial_state();
  const State& goal = m.goal_state();

  // Objects and their types come from the initial state's type facts.
  std::map<std::string, std::set<std::string>> literal_types;
  auto note_literal = [&literal_types](const Term& term) {
    if (term.kind() == TermKind::Literal) literal_types.emplace(term.name(), std::set<std::string>{});
  };
  for (const State* s : {&initial, &goal}) {
    for (const Predicate& p : s->predicates) {
      if (a.is_type(p.functor)) {
        note_literal(p.args[0]);
        continue;
      }
      if (a.is_fluent(p.functor)) {
        for (std::size_t i = 0; i + 1 < p.args.size(); ++i) note_literal(p.args[i]);
        continue;
      }
      for (const Term& arg : p.args) note_literal(arg);
    }
  }
  for (const Predicate& p : initial.predicates) {
    if (!a.is_type(p.functor)) continue;
    const Term& arg = p.args[0];
    if (arg.kind() != TermKind::Literal)
      throw MappingError("state " + initial.name, p.to_text(), "type fact must name a literal");
    literal_types[arg.name()].insert(a.types.at(p.functor));
  }

  std::string out = "(define (problem " + name + "_problem)\n";
  out += "  (:domain " + name + ")\n";

  out += "  (:objects\n";
  if (a.typing) {
    std::map<std::string, std::vector<std::string>> by_type;
    for (const auto& [literal, types] : literal_types) {
      if (types.empty())
        throw MappingError("state " + initial.name, literal,
                           "object has no type predicate");
      if (types.size() > 1)
        throw MappingError("state " + initial.name, literal, "object has two distinct types");
      by_type[*types.begin()].push_back(literal);
    }
    for (const auto& [type, names] : by_type) {
      out += "   ";
      for (const std::string& n : names) out += " " + n;
      out += " - " + type + "\n";
    }
  } else {
    out += "   ";
    for (const auto& [literal, types] : literal_types) out += " " + literal;
    out += "\n";
  }
  out += "  )\n";

  auto render_ground_fluent = [&a, &rules](const Predicate& p, const std::string& where,
                                           std::vector<std::string>& lines, bool with_guard) {
    const pddl::FluentInfo& info = a.fluents.at(p.functor);
    Term value = pddl::detail::fluent_value(p, info, rules, where);
    if (value.kind() != TermKind::Number)
      throw MappingError(where, p.to_text(), "ground fluent needs a number value");
    auto text = pddl::pddl_number(value.value());
    if (!text)
      throw MappingError(where, p.to_text(), "rational has no finite decimal expansion");
    std::string ref = "(" + info.pddl_name;
    std::string guard = "(" + p.functor;
    for (std::size_t i = 0; i + 1 < p.args.size(); ++i) {
      if (p.args[i].kind() != TermKind::Literal)
        throw MappingError(where, p.to_text(), "ground fluent key must be a literal");
      ref += " " + p.args[i].name();
      guard += " " + p.args[i].name();
    }
    ref += ")";
    guard += ")";
    if (with_guard && info.guarded) lines.push_back(guard);
    lines.push_back("(= " + ref + " " + *text + ")");
  };

  out += "  (:init\n";
  for (const Predicate& p : initial.predicates) {
    std::string where = "state " + initial.name;
    if (a.is_type(p.functor)) continue;
    if (a.is_fluent(p.functor)) {
      std::vector<std::string> lines;
      render_ground_fluent(p, where, lines, true);
      for (const std::string& line : lines) out += "    " + line + "\n";
      continue;
    }
    std::string atom = "(" + p.functor;
    for (const Term& arg : p.args) {
      if (arg.kind() != TermKind::Literal)
        throw MappingError(where, p.to_text(), "init atom argument must be a literal");
      atom += " " + arg.name();
    }
    atom += ")";
    out += "    " + atom + "\n";
  }
  out += "  )\n";

  // Goal. Variables require the existential toggle; typed from the goal's
  // own type atoms.
  std::set<std::string> goal_vars;
  for (const Predicate& p : goal.predicates) p.collect_variables(goal_vars);
  std::vector<std::string> conjuncts;
  std::map<std::string, std::string> goal_var_types;
  for (const Predicate& p : goal.predicates) {
    std::string where = "state " + goal.name;
    if (a.is_type(p.functor)) {
      const Term& arg = p.args[0];
      if (arg.kind() == TermKind::Variable) {
        auto [it, inserted] = goal_var_types.emplace(arg.name(), a.types.at(p.functor));
        if (!inserted && it->second != a.types.at(p.functor))
          throw MappingError(where, p.to_text(), "goal variable has two distinct types");
        continue;
      }
      throw MappingError(where, p.to_text(), "ground type atom cannot be checked in PDDL");
    }
    if (a.is_fluent(p.functor)) {
      std::vector<std::string> lines;
      render_ground_fluent(p, where, lines, false);
      for (const std::string& line : lines) conjuncts.push_back(line);
      continue;
    }
    std::string atom = "(" + p.functor;
    for (const Term& arg : p.args) {
      if (arg.kind() == TermKind::Literal) {
        atom += " " + arg.name();
      } else if (arg.kind() == TermKind::Variable) {
        if (!rules.allow_existential_goal)
          throw MappingError(where, p.to_text(),
                             "goal variables need allow_existential_goal");
        atom += " " + pddl::param_name(arg.name());
      } else {
        throw MappingError(where, p.to_text(), "goal argument has no PDDL counterpart");
      }
    }
    atom += ")";
    conjuncts.push_back(atom);
  }
  std::string inner;
  if (conjuncts.size() == 1 && goal_vars.empty()) {
    inner = conjuncts[0];
  } else {
    inner = "(and";
    for (const std::string& c : conjuncts) inner += " " + c;
    inner += ")";
  }
  if (!goal_vars.empty()) {
    if (!rules.allow_existential_goal)
      throw MappingError("state " + goal.name, "", "goal variables need allow_existential_goal");
    std::string quantified = "(exists (";
    bool first = true;
    for (const std::string& v : goal_vars) {
      if (!first) quantified += " ";
      first = false;
      quantified += pddl::param_name(v);
      if (a.typing) {
        auto it = goal_var_types.find(v);
        quantified += " - " + (it == goal_var_types.end() ? std::string("object") : it->second);
      }
    }
    quantified += ") " + inner + ")";
    inner = quantified;
  }
  out += "  (:goal " + inner + ")\n";
  out += ")\n";
  return PddlArtifact::make(PddlArtifact::Kind::Problem, std::move(out));
}

}  // namespace kmarf
