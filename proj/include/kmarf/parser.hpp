#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kmarf/lexer.hpp"
#include "kmarf/model.hpp"

namespace kmarf {

// A parsed .kmf document: any mix of state blocks, transition blocks, a
// rules block and initial/goal designations. A Model is assembled from one
// or more documents (the service stores states, transitions and rules as
// separate documents under one model name).
//
// Grammar (EBNF in docs/grammar.md):
//
//   document   = { state | transition | rules | "initial" ident "." | "goal" ident "." } ;
//   state      = "state" ident "{" { predicate "." } "}" ;
//   transition = "transition" ident "{" pre [ compute ] action "}" ;
//   pre        = "pre" "{" { predicate "." } "}" ;
//   compute    = "compute" "{" { call "." } "}" ;
//   action     = "action" "{" { ("add" | "delete") "(" predicate ")" "." } "}" ;
//   predicate  = ident [ "(" term { "," term } ")" ] ;
//   call       = ident "(" term { "," term } ")" ;
//   term       = number [ "/" number ] | variable | ident [ "(" term { "," term } ")" ] ;
//   rules      = "rules" "{" [ types ] [ fluents ] [ wrappers ] [ "allow_existential_goal" "." ] "}" ;
struct Document {
  std::vector<State> states;
  std::vector<TransitionSpec> transitions;
  std::optional<std::string> initial;
  std::optional<std::string> goal;
  std::optional<TransformationRules> rules;
  std::map<std::string, std::pair<int, int>> state_locations;  // name -> line/col, for late checks
};

namespace detail {

class KmfParser {
 public:
  explicit KmfParser(std::string_view text) : lex_(text) {}

  Document parse() {
    Document doc;
    while (lex_.peek().kind != TokenKind::End) {
      Token tok = expect(TokenKind::Ident, "expected 'state', 'transition', 'rules', 'initial' or 'goal'");
      if (tok.text == "state") {
        parse_state(doc, tok);
      } else if (tok.text == "transition") {
        parse_transition(doc, tok);
      } else if (tok.text == "rules") {
        if (doc.rules) fail(tok, "duplicate rules block");
        doc.rules = parse_rules();
      } else if (tok.text == "initial" || tok.text == "goal") {
        Token name = expect(TokenKind::Ident, "expected state name");
        expect(TokenKind::Dot, "expected '.'");
        auto& slot = tok.text == "initial" ? doc.initial : doc.goal;
        if (slot) fail(tok, "duplicate " + tok.text + " designation");
        slot = name.text;
      } else {
        fail(tok, "unknown top-level keyword '" + tok.text + "'");
      }
    }
    return doc;
  }

 private:
  void parse_state(Document& doc, const Token& kw) {
    Token name = expect(TokenKind::Ident, "expected state name");
    for (const State& s : doc.states)
      if (s.name == name.text) fail(name, "duplicate state name '" + name.text + "'");
    expect(TokenKind::LBrace, "expected '{'");
    State state;
    state.name = name.text;
    while (lex_.peek().kind != TokenKind::RBrace) {
      state.predicates.insert(parse_predicate());
      expect(TokenKind::Dot, "expected '.' after predicate");
    }
    lex_.next();  // '}'
    doc.state_locations[state.name] = {kw.line, kw.column};
    doc.states.push_back(std::move(state));
  }

  void parse_transition(Document& doc, const Token&) {
    Token name = expect(TokenKind::Ident, "expected transition name");
    for (const TransitionSpec& t : doc.transitions)
      if (t.name == name.text) fail(name, "duplicate transition name '" + name.text + "'");
    expect(TokenKind::LBrace, "expected '{'");
    TransitionSpec spec;
    spec.name = name.text;

    Token pre = expect(TokenKind::Ident, "expected 'pre'");
    if (pre.text != "pre") fail(pre, "expected 'pre' block");
    expect(TokenKind::LBrace, "expected '{'");
    while (lex_.peek().kind != TokenKind::RBrace) {
      spec.precondition.insert(parse_predicate());
      expect(TokenKind::Dot, "expected '.' after predicate");
    }
    lex_.next();

    Token section = expect(TokenKind::Ident, "expected 'compute' or 'action'");
    if (section.text == "compute") {
      expect(TokenKind::LBrace, "expected '{'");
      while (lex_.peek().kind != TokenKind::RBrace) {
        Token fn = expect(TokenKind::Ident, "expected function name");
        expect(TokenKind::LParen, "expected '('");
        FunctionCall call;
        call.name = fn.text;
        call.args = parse_term_list();
        expect(TokenKind::RParen, "expected ')'");
        expect(TokenKind::Dot, "expected '.' after function call");
        spec.computation.push_back(std::move(call));
      }
      lex_.next();
      section = expect(TokenKind::Ident, "expected 'action'");
    }
    if (section.text != "action") fail(section, "expected 'action' block");
    expect(TokenKind::LBrace, "expected '{'");
    while (lex_.peek().kind != TokenKind::RBrace) {
      Token op = expect(TokenKind::Ident, "expected 'add' or 'delete'");
      if (op.text != "add" && op.text != "delete")
        fail(op, "illegal action functor '" + op.text + "' (must be add or delete)");
      expect(TokenKind::LParen, "expected '('");
      ActionItem item;
      item.op = op.text == "add" ? ActionOp::Add : ActionOp::Delete;
      item.pred = parse_predicate();
      expect(TokenKind::RParen, "expected ')' (add/delete take exactly one predicate)");
      expect(TokenKind::Dot, "expected '.' after action predicate");
      spec.action.push_back(std::move(item));
    }
    lex_.next();
    expect(TokenKind::RBrace, "expected '}' closing transition");

    check_action_variables(spec, name);
    doc.transitions.push_back(std::move(spec));
  }

  // Static check: every variable used in the action must come from the
  // precondition or stand in the result slot of some computation call.
  void check_action_variables(const TransitionSpec& spec, const Token& at) {
    std::set<std::string> bound = spec.precondition_variables();
    for (const FunctionCall& call : spec.computation)
      if (!call.args.empty() && call.args.back().kind() == TermKind::Variable)
        bound.insert(call.args.back().name());
    std::set<std::string> used;
    for (const ActionItem& item : spec.action) item.pred.collect_variables(used);
    for (const std::string& v : used)
      if (!bound.count(v))
        fail(at, "unbound action variable '" + v + "' in transition '" + spec.name + "'");
  }

  TransformationRules parse_rules() {
    expect(TokenKind::LBrace, "expected '{'");
    TransformationRules rules;
    while (lex_.peek().kind != TokenKind::RBrace) {
      Token section = expect(TokenKind::Ident, "expected rules section");
      if (section.text == "types") {
        expect(TokenKind::LBrace, "expected '{'");
        while (lex_.peek().kind != TokenKind::RBrace) {
          Token f = expect(TokenKind::Ident, "expected predicate functor");
          expect(TokenKind::Dot, "expected '.'");
          rules.type_predicates.insert(f.text);
        }
        lex_.next();
      } else if (section.text == "fluents") {
        expect(TokenKind::LBrace, "expected '{'");
        while (lex_.peek().kind != TokenKind::RBrace) {
          Token f = expect(TokenKind::Ident, "expected predicate functor");
          expect(TokenKind::Slash, "expected '/<arity>'");
          Token a = expect(TokenKind::Number, "expected arity");
          if (!a.value.is_integer() || a.value.num() < 1)
            fail(a, "fluent arity must be a positive integer");
          expect(TokenKind::Dot, "expected '.'");
          rules.fluent_predicates[f.text] = static_cast<std::size_t>(a.value.num());
        }
        lex_.next();
      } else if (section.text == "wrappers") {
        expect(TokenKind::LBrace, "expected '{'");
        while (lex_.peek().kind != TokenKind::RBrace) {
          Token f = expect(TokenKind::Ident, "expected wrapper functor");
          std::string suffix = f.text;
          if (lex_.peek().kind == TokenKind::Arrow) {
            lex_.next();
            suffix = expect(TokenKind::Ident, "expected mangling suffix").text;
          }
          expect(TokenKind::Dot, "expected '.'");
          rules.wrappers[f.text] = suffix;
        }
        lex_.next();
      } else if (section.text == "allow_existential_goal") {
        expect(TokenKind::Dot, "expected '.'");
        rules.allow_existential_goal = true;
      } else {
        fail(section, "unknown rules section '" + section.text + "'");
      }
    }
    Token close = lex_.next();
    for (const auto& [functor, arity] : rules.fluent_predicates) {
      (void)arity;
      if (rules.type_predicates.count(functor) || rules.wrappers.count(functor))
        fail(close, "functor '" + functor + "' declared in more than one rules section");
    }
    for (const std::string& functor : rules.type_predicates)
      if (rules.wrappers.count(functor))
        fail(close, "functor '" + functor + "' declared in more than one rules section");
    return rules;
  }

  Predicate parse_predicate() {
    Token f = expect(TokenKind::Ident, "expected predicate functor");
    Predicate p;
    p.functor = f.text;
    if (lex_.peek().kind == TokenKind::LParen) {
      lex_.next();
      p.args = parse_term_list();
      expect(TokenKind::RParen, "expected ')'");
    }
    return p;
  }

  std::vector<Term> parse_term_list() {
    std::vector<Term> args;
    args.push_back(parse_term());
    while (lex_.peek().kind == TokenKind::Comma) {
      lex_.next();
      args.push_back(parse_term());
    }
    return args;
  }

  Term parse_term() {
    Token tok = lex_.next();
    switch (tok.kind) {
      case TokenKind::Number: {
        if (lex_.peek().kind == TokenKind::Slash) {
          lex_.next();
          Token den = expect(TokenKind::Number, "expected denominator");
          if (!tok.value.is_integer() || !den.value.is_integer() || den.value.num() <= 0)
            fail(den, "fraction must be integer/positive-integer");
          return Term::number(Rational(tok.value.num(), den.value.num()));
        }
        return Term::number(tok.value);
      }
      case TokenKind::Var:
        return Term::variable(tok.text);
      case TokenKind::Ident: {
        if (lex_.peek().kind == TokenKind::LParen) {
          lex_.next();
          std::vector<Term> args = parse_term_list();
          expect(TokenKind::RParen, "expected ')'");
          return Term::compound(tok.text, std::move(args));
        }
        return Term::literal(tok.text);
      }
      default:
        fail(tok, "expected a term");
    }
  }

  Token expect(TokenKind kind, const std::string& message) {
    if (lex_.peek().kind != kind) lex_.fail(message);
    return lex_.next();
  }

  [[noreturn]] static void fail(const Token& at, const std::string& message) {
    throw ParseError(at.line, at.column, message);
  }

  Lexer lex_;
};

}  // namespace detail

inline Document parse_document(std::string_view text) { return detail::KmfParser(text).parse(); }

// Merge documents into a Model and run the cross-document checks: name
// clashes, initial/goal resolution and groundedness of every state except
// the designated goal.
inline Model assemble_model(const std::vector<Document>& docs) {
  Model m;
  std::map<std::string, std::pair<int, int>> state_locations;
  for (const Document& doc : docs) {
    for (const State& s : doc.states) {
      if (!m.states.emplace(s.name, s).second)
        throw ParseError(1, 1, "duplicate state name '" + s.name + "'");
      auto loc = doc.state_locations.find(s.name);
      state_locations[s.name] = loc == doc.state_locations.end() ? std::pair<int, int>{1, 1} : loc->second;
    }
    for (const TransitionSpec& t : doc.transitions)
      if (!m.transitions.emplace(t.name, t).second)
        throw ParseError(1, 1, "duplicate transition name '" + t.name + "'");
    if (doc.initial) {
      if (m.initial) throw ParseError(1, 1, "duplicate initial designation");
      m.initial = doc.initial;
    }
    if (doc.goal) {
      if (m.goal) throw ParseError(1, 1, "duplicate goal designation");
      m.goal = doc.goal;
    }
    if (doc.rules) {
      if (m.rules) throw ParseError(1, 1, "duplicate rules block");
      m.rules = doc.rules;
    }
  }
  if (m.initial && !m.states.count(*m.initial))
    throw ParseError(1, 1, "initial state '" + *m.initial + "' is not defined");
  if (m.goal && !m.states.count(*m.goal))
    throw ParseError(1, 1, "goal state '" + *m.goal + "' is not defined");
  for (const auto& [name, state] : m.states) {
    if (m.goal && name == *m.goal) continue;  // goal may carry variables
    if (!state.is_ground()) {
      auto loc = state_locations[name];
      throw ParseError(loc.first, loc.second, "state '" + name + "' contains variables");
    }
  }
  return m;
}

inline Model parse_model(std::string_view text) { return assemble_model({parse_document(text)}); }

}  // namespace kmarf
