#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "kmarf/term.hpp"
#include "kmarf/unify.hpp"

namespace kmarf {

// Hard evaluation error: unknown function, wrong arity, non-ground argument.
// Distinct from a failing call, which is a normal outcome.
struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FunctionKind { Test, Value };

struct FunctionSignature {
  std::string name;
  std::size_t arity;
  FunctionKind kind;
};

// The built-in function library. Tests succeed or fail on ground arguments;
// value functions compute their last argument from the preceding ones.
// A value call whose inputs fall outside the function's tuple set (divide by
// zero, non-numeric argument, result outside the 64-bit rational range)
// fails; it does not error.
inline const std::map<std::pair<std::string, std::size_t>, FunctionSignature>&
builtin_signatures() {
  static const std::map<std::pair<std::string, std::size_t>, FunctionSignature> table = [] {
    std::map<std::pair<std::string, std::size_t>, FunctionSignature> t;
    auto put = [&t](const char* name, std::size_t arity, FunctionKind kind) {
      t[{name, arity}] = FunctionSignature{name, arity, kind};
    };
    put("less_than", 2, FunctionKind::Test);
    put("less_or_equal", 2, FunctionKind::Test);
    put("greater_than", 2, FunctionKind::Test);
    put("greater_or_equal", 2, FunctionKind::Test);
    put("equal", 2, FunctionKind::Test);
    put("not_equal", 2, FunctionKind::Test);
    put("add", 3, FunctionKind::Value);
    put("subtract", 3, FunctionKind::Value);
    put("multiply", 3, FunctionKind::Value);
    put("divide", 3, FunctionKind::Value);
    put("min", 3, FunctionKind::Value);
    put("max", 3, FunctionKind::Value);
    put("abs", 2, FunctionKind::Value);
    return t;
  }();
  return table;
}

inline const FunctionSignature* find_builtin(const std::string& name, std::size_t arity) {
  auto it = builtin_signatures().find({name, arity});
  return it == builtin_signatures().end() ? nullptr : &it->second;
}

namespace detail {

inline const Rational* as_number(const Term& t) {
  return t.kind() == TermKind::Number ? &t.value() : nullptr;
}

inline std::optional<bool> eval_test(const std::string& name, const Term& a, const Term& b) {
  if (name == "equal") return a == b;
  if (name == "not_equal") return a != b;
  const Rational* x = as_number(a);
  const Rational* y = as_number(b);
  if (!x || !y) return std::nullopt;  // outside the numeric domain
  int c = Rational::compare(*x, *y);
  if (name == "less_than") return c < 0;
  if (name == "less_or_equal") return c <= 0;
  if (name == "greater_than") return c > 0;
  if (name == "greater_or_equal") return c >= 0;
  return std::nullopt;
}

inline std::optional<Rational> eval_value(const std::string& name, const std::vector<Term>& in) {
  const Rational* x = as_number(in[0]);
  if (!x) return std::nullopt;
  if (name == "abs") return x->abs();
  const Rational* y = as_number(in[1]);
  if (!y) return std::nullopt;
  try {
    if (name == "add") return *x + *y;
    if (name == "subtract") return *x - *y;
    if (name == "multiply") return *x * *y;
    if (name == "divide") {
      if (y->num() == 0) return std::nullopt;  // undefined tuple
      return *x / *y;
    }
    if (name == "min") return *x < *y ? *x : *y;
    if (name == "max") return *x < *y ? *y : *x;
  } catch (const Rational::Overflow&) {
    return std::nullopt;  // result not representable: no tuple
  }
  return std::nullopt;
}

}  // namespace detail

// Evaluate one call under `sub`. Success extends the substitution (value
// functions bind their result variable); failure returns nullopt.
inline std::optional<Substitution> eval_call(const FunctionCall& call, Substitution sub) {
  const FunctionSignature* sig = find_builtin(call.name, call.args.size());
  if (!sig)
    throw EvalError("unknown function " + call.name + "/" + std::to_string(call.args.size()));

  std::vector<Term> args;
  args.reserve(call.args.size());
  for (const Term& a : call.args) args.push_back(substitute(sub, a));

  std::size_t inputs = sig->kind == FunctionKind::Value ? args.size() - 1 : args.size();
  for (std::size_t i = 0; i < inputs; ++i)
    if (!args[i].is_ground())
      throw EvalError("non-ground argument " + args[i].to_text() + " in call to " + call.name);

  if (sig->kind == FunctionKind::Test) {
    auto verdict = detail::eval_test(call.name, args[0], args[1]);
    if (verdict && *verdict) return sub;
    return std::nullopt;
  }

  std::vector<Term> in(args.begin(), args.end() - 1);
  auto result = detail::eval_value(call.name, in);
  if (!result) return std::nullopt;
  const Term& slot = args.back();
  if (slot.kind() == TermKind::Variable) {
    sub[slot.name()] = Term::number(*result);
    return sub;
  }
  if (!slot.is_ground())
    throw EvalError("non-ground result argument " + slot.to_text() + " in call to " + call.name);
  // Ground result slot: the call degenerates to a membership test.
  if (slot.kind() == TermKind::Number && slot.value() == *result) return sub;
  return std::nullopt;
}

}  // namespace kmarf
