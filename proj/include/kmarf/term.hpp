#pragma once

#include <cctype>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kmarf/rational.hpp"

namespace kmarf {

inline bool is_literal_name(std::string_view s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

inline bool is_variable_name(std::string_view s) {
  if (s.empty() || !(s[0] >= 'A' && s[0] <= 'Z')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

enum class TermKind { Number, Literal, Variable, Compound };

// One argument value: a number, a lowercase-leading literal, an
// uppercase-leading variable, or a compound term functor(args...) with
// arity >= 1. Immutable after construction.
class Term {
 public:
  static Term number(Rational value) {
    Term t;
    t.kind_ = TermKind::Number;
    t.value_ = value;
    return t;
  }
  static Term literal(std::string name) {
    if (!is_literal_name(name)) throw std::invalid_argument("bad literal name: " + name);
    Term t;
    t.kind_ = TermKind::Literal;
    t.name_ = std::move(name);
    return t;
  }
  static Term variable(std::string name) {
    if (!is_variable_name(name)) throw std::invalid_argument("bad variable name: " + name);
    Term t;
    t.kind_ = TermKind::Variable;
    t.name_ = std::move(name);
    return t;
  }
  static Term compound(std::string functor, std::vector<Term> args) {
    if (!is_literal_name(functor)) throw std::invalid_argument("bad functor: " + functor);
    if (args.empty()) throw std::invalid_argument("compound term needs arity >= 1");
    Term t;
    t.kind_ = TermKind::Compound;
    t.name_ = std::move(functor);
    t.args_ = std::move(args);
    return t;
  }

  TermKind kind() const { return kind_; }
  const Rational& value() const { return value_; }
  const std::string& name() const { return name_; }
  const std::vector<Term>& args() const { return args_; }

  bool is_ground() const {
    if (kind_ == TermKind::Variable) return false;
    for (const Term& a : args_)
      if (!a.is_ground()) return false;
    return true;
  }

  void collect_variables(std::set<std::string>& out) const {
    if (kind_ == TermKind::Variable) out.insert(name_);
    for (const Term& a : args_) a.collect_variables(out);
  }

  std::string to_text() const {
    switch (kind_) {
      case TermKind::Number:
        return value_.to_text();
      case TermKind::Literal:
      case TermKind::Variable:
        return name_;
      case TermKind::Compound: {
        std::string out = name_;
        out += '(';
        for (std::size_t i = 0; i < args_.size(); ++i) {
          if (i) out += ", ";
          out += args_[i].to_text();
        }
        out += ')';
        return out;
      }
    }
    return {};
  }

  // Canonical total order: Number < Literal < Variable < Compound, then by
  // value / name / (functor, arity, args lexicographically).
  static int compare(const Term& a, const Term& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_ ? -1 : 1;
    switch (a.kind_) {
      case TermKind::Number:
        return Rational::compare(a.value_, b.value_);
      case TermKind::Literal:
      case TermKind::Variable:
        return a.name_.compare(b.name_);
      case TermKind::Compound: {
        if (int c = a.name_.compare(b.name_)) return c < 0 ? -1 : 1;
        if (a.args_.size() != b.args_.size()) return a.args_.size() < b.args_.size() ? -1 : 1;
        for (std::size_t i = 0; i < a.args_.size(); ++i)
          if (int c = compare(a.args_[i], b.args_[i])) return c;
        return 0;
      }
    }
    return 0;
  }

  friend bool operator==(const Term& a, const Term& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Term& a, const Term& b) { return compare(a, b) != 0; }
  friend bool operator<(const Term& a, const Term& b) { return compare(a, b) < 0; }

 private:
  TermKind kind_ = TermKind::Literal;
  Rational value_;
  std::string name_;
  std::vector<Term> args_;
};

// Predicate: functor with ordered arguments; arity 0 is an atomic fact.
struct Predicate {
  std::string functor;
  std::vector<Term> args;

  Predicate() = default;
  Predicate(std::string f, std::vector<Term> a = {}) : functor(std::move(f)), args(std::move(a)) {
    if (!is_literal_name(functor)) throw std::invalid_argument("bad predicate functor: " + functor);
  }

  std::size_t arity() const { return args.size(); }

  bool is_ground() const {
    for (const Term& a : args)
      if (!a.is_ground()) return false;
    return true;
  }

  void collect_variables(std::set<std::string>& out) const {
    for (const Term& a : args) a.collect_variables(out);
  }

  std::string to_text() const {
    if (args.empty()) return functor;
    std::string out = functor;
    out += '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) out += ", ";
      out += args[i].to_text();
    }
    out += ')';
    return out;
  }

  static int compare(const Predicate& a, const Predicate& b) {
    if (int c = a.functor.compare(b.functor)) return c < 0 ? -1 : 1;
    if (a.args.size() != b.args.size()) return a.args.size() < b.args.size() ? -1 : 1;
    for (std::size_t i = 0; i < a.args.size(); ++i)
      if (int c = Term::compare(a.args[i], b.args[i])) return c;
    return 0;
  }

  friend bool operator==(const Predicate& a, const Predicate& b) { return compare(a, b) == 0; }
  friend bool operator!=(const Predicate& a, const Predicate& b) { return compare(a, b) != 0; }
  friend bool operator<(const Predicate& a, const Predicate& b) { return compare(a, b) < 0; }
};

}  // namespace kmarf
