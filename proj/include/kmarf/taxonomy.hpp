#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "kmarf/lexer.hpp"
#include "kmarf/model.hpp"

namespace kmarf {

// Concept taxonomy: an is-a DAG rooted at a single top concept, plus
// per-argument concept annotations for predicate functors.
//
//   taxonomy {
//     concept Entity.
//     concept System is_a Entity.
//     concept Passenger is_a TransportableEntity, Human.
//     annotate at(TransportableEntity, POI).
//   }
struct Taxonomy {
  std::map<std::string, std::set<std::string>> parents;       // concept -> parents
  std::map<std::string, std::vector<std::string>> annotations;  // functor -> concept/arg
  std::string root;

  bool declared(const std::string& concept_name) const { return parents.count(concept_name) != 0; }

  // Reflexive-transitive is-a reachability.
  bool is_subconcept(const std::string& child, const std::string& ancestor) const {
    if (child == ancestor) return true;
    auto it = parents.find(child);
    if (it == parents.end()) return false;
    for (const std::string& p : it->second)
      if (is_subconcept(p, ancestor)) return true;
    return false;
  }
};

inline Taxonomy parse_taxonomy(std::string_view text) {
  Lexer lex(text);
  auto expect = [&lex](TokenKind kind, const std::string& message) {
    if (lex.peek().kind != kind) lex.fail(message);
    return lex.next();
  };
  Token kw = expect(TokenKind::Ident, "expected 'taxonomy'");
  if (kw.text != "taxonomy") throw ParseError(kw.line, kw.column, "expected 'taxonomy'");
  expect(TokenKind::LBrace, "expected '{'");

  Taxonomy tax;
  std::vector<std::pair<Token, std::string>> parent_refs;  // for late declaration checks
  while (lex.peek().kind != TokenKind::RBrace) {
    Token item = expect(TokenKind::Ident, "expected 'concept' or 'annotate'");
    if (item.text == "concept") {
      Token name = expect(TokenKind::Var, "expected concept name (capitalized)");
      if (tax.parents.count(name.text))
        throw ParseError(name.line, name.column, "duplicate concept " + name.text);
      std::set<std::string>& ps = tax.parents[name.text];
      if (lex.peek().kind == TokenKind::Ident && lex.peek().text == "is_a") {
        lex.next();
        while (true) {
          Token parent = expect(TokenKind::Var, "expected parent concept");
          ps.insert(parent.text);
          parent_refs.push_back({parent, parent.text});
          if (lex.peek().kind != TokenKind::Comma) break;
          lex.next();
        }
      }
      expect(TokenKind::Dot, "expected '.'");
    } else if (item.text == "annotate") {
      Token functor = expect(TokenKind::Ident, "expected predicate functor");
      if (tax.annotations.count(functor.text))
        throw ParseError(functor.line, functor.column, "duplicate annotation for " + functor.text);
      expect(TokenKind::LParen, "expected '('");
      std::vector<std::string> concepts;
      while (true) {
        Token c = expect(TokenKind::Var, "expected concept name");
        concepts.push_back(c.text);
        parent_refs.push_back({c, c.text});
        if (lex.peek().kind != TokenKind::Comma) break;
        lex.next();
      }
      expect(TokenKind::RParen, "expected ')'");
      expect(TokenKind::Dot, "expected '.'");
      tax.annotations[functor.text] = std::move(concepts);
    } else {
      throw ParseError(item.line, item.column, "expected 'concept' or 'annotate'");
    }
  }
  lex.next();  // '}'

  for (const auto& [tok, name] : parent_refs)
    if (!tax.parents.count(name))
      throw ParseError(tok.line, tok.column, "undeclared concept " + name);

  // Exactly one root; every concept reaches it; no cycles.
  std::vector<std::string> roots;
  for (const auto& [name, ps] : tax.parents)
    if (ps.empty()) roots.push_back(name);
  if (roots.size() != 1)
    throw ParseError(kw.line, kw.column,
                     "taxonomy must have exactly one root concept, found " +
                         std::to_string(roots.size()));
  tax.root = roots[0];

  // Cycle check: DFS with colors.
  std::map<std::string, int> color;  // 0 white, 1 grey, 2 black
  struct Dfs {
    const Taxonomy& tax;
    std::map<std::string, int>& color;
    const Token& at;
    void walk(const std::string& node) {
      color[node] = 1;
      for (const std::string& p : tax.parents.at(node)) {
        int c = color[p];
        if (c == 1) throw ParseError(at.line, at.column, "is_a cycle through " + p);
        if (c == 0) walk(p);
      }
      color[node] = 2;
    }
  };
  Dfs dfs{tax, color, kw};
  for (const auto& [name, ps] : tax.parents)
    if (color[name] == 0) dfs.walk(name);

  for (const auto& [name, ps] : tax.parents) {
    (void)ps;
    if (!tax.is_subconcept(name, tax.root))
      throw ParseError(kw.line, kw.column, "concept " + name + " does not reach the root");
  }
  return tax;
}

// --- model validation ----------------------------------------------------

struct Violation {
  std::string where;     // "state s0" / "transition board"
  std::string predicate;
  std::size_t argument = 0;  // 1-based
  std::string found;     // literal name or its concepts
  std::string required;
};

struct TaxonomyReport {
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
  bool ok() const { return violations.empty(); }
};

// Checks every annotated predicate use: each literal argument must carry a
// concept (via a unary annotated fact like is_bus(b25)) compatible with the
// annotation. Numbers, compounds and variables are not concept-bearing and
// are skipped. Unannotated functors warn, they never fail.
inline TaxonomyReport validate_against_taxonomy(const Model& m, const Taxonomy& tax) {
  TaxonomyReport report;

  // Literal concepts per state, from unary annotated facts.
  auto concepts_in = [&tax](const State& s) {
    std::map<std::string, std::set<std::string>> out;
    for (const Predicate& p : s.predicates) {
      if (p.args.size() != 1 || p.args[0].kind() != TermKind::Literal) continue;
      auto ann = tax.annotations.find(p.functor);
      if (ann == tax.annotations.end() || ann->second.size() != 1) continue;
      out[p.args[0].name()].insert(ann->second[0]);
    }
    return out;
  };

  std::set<std::string> warned;
  auto warn_once = [&report, &warned](const std::string& message) {
    if (warned.insert(message).second) report.warnings.push_back(message);
  };

  auto check_predicate = [&](const Predicate& p, const std::string& where,
                             const std::map<std::string, std::set<std::string>>& concepts) {
    auto ann = tax.annotations.find(p.functor);
    if (ann == tax.annotations.end()) {
      warn_once("no annotation for predicate functor '" + p.functor + "'");
      return;
    }
    if (ann->second.size() != p.args.size()) {
      report.violations.push_back(Violation{where, p.to_text(), 0, p.functor,
                                            "annotation arity " +
                                                std::to_string(ann->second.size())});
      return;
    }
    // One violation per predicate use, anchored at the first bad argument.
    for (std::size_t i = 0; i < p.args.size(); ++i) {
      const Term& arg = p.args[i];
      if (arg.kind() != TermKind::Literal) continue;
      const std::string& required = ann->second[i];
      if (required == tax.root) continue;
      auto found = concepts.find(arg.name());
      if (found == concepts.end() || found->second.empty()) {
        warn_once("literal '" + arg.name() + "' has no declared concept (wanted " + required +
                  " at " + p.to_text() + ")");
        continue;
      }
      bool compatible = false;
      for (const std::string& c : found->second)
        if (tax.is_subconcept(c, required)) {
          compatible = true;
          break;
        }
      if (!compatible) {
        std::string have;
        for (const std::string& c : found->second) have += (have.empty() ? "" : "|") + c;
        report.violations.push_back(Violation{where, p.to_text(), i + 1, have, required});
        return;
      }
    }
  };

  for (const auto& [name, s] : m.states) {
    auto concepts = concepts_in(s);
    for (const Predicate& p : s.predicates) check_predicate(p, "state " + name, concepts);
  }

  // Transitions: variables carry no concepts; ground literals are checked
  // against concepts derivable from any state.
  std::map<std::string, std::set<std::string>> global;
  for (const auto& [name, s] : m.states)
    for (const auto& [literal, cs] : concepts_in(s)) global[literal].insert(cs.begin(), cs.end());
  for (const auto& [name, t] : m.transitions) {
    for (const Predicate& p : t.precondition) check_predicate(p, "transition " + name, global);
    for (const ActionItem& item : t.action)
      check_predicate(item.pred, "transition " + name, global);
  }
  return report;
}

}  // namespace kmarf
