#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace kmarf {

// Structural checker for the PDDL dialect this project emits and consumes:
// PDDL 2.1 restricted to :strips, :typing and :numeric-fluents (plus
// existential goals). Used as the grammar oracle in tests and by the
// cross-validation harness before replaying external plans.

namespace sexpr {

struct Node {
  bool is_atom = true;
  std::string text;          // atoms only
  std::vector<Node> kids;    // lists only
  int line = 1;

  bool is_list() const { return !is_atom; }
  bool head_is(std::string_view word) const {
    return is_list() && !kids.empty() && kids[0].is_atom && kids[0].text == word;
  }
};

struct ParseOutcome {
  std::vector<Node> nodes;
  std::optional<std::string> error;
};

inline ParseOutcome parse(std::string_view text) {
  ParseOutcome out;
  std::vector<Node*> stack;
  int line = 1;
  std::size_t i = 0;
  auto add = [&out, &stack](Node node) -> Node* {
    if (stack.empty()) {
      out.nodes.push_back(std::move(node));
      return &out.nodes.back();
    }
    stack.back()->kids.push_back(std::move(node));
    return &stack.back()->kids.back();
  };
  while (i < text.size()) {
    char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == ';') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '(') {
      Node node;
      node.is_atom = false;
      node.line = line;
      stack.push_back(add(std::move(node)));
      ++i;
    } else if (c == ')') {
      if (stack.empty()) {
        out.error = "line " + std::to_string(line) + ": unbalanced ')'";
        return out;
      }
      stack.pop_back();
      ++i;
    } else {
      Node node;
      node.line = line;
      std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
             text[i] != '(' && text[i] != ')' && text[i] != ';')
        ++i;
      node.text = std::string(text.substr(start, i - start));
      for (char& ch : node.text) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      add(std::move(node));
    }
  }
  if (!stack.empty()) out.error = "unbalanced '(' at end of input";
  return out;
}

inline bool is_number(const std::string& s) {
  std::size_t i = s.size() && (s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  bool dot = false;
  for (; i < s.size(); ++i) {
    if (s[i] == '.') {
      if (dot) return false;
      dot = true;
    } else if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace sexpr

struct DomainInfo {
  std::string name;
  std::set<std::string> types;
  std::map<std::string, std::size_t> predicates;  // name -> arity
  std::map<std::string, std::size_t> functions;   // name -> arity
  std::set<std::string> actions;
};

struct PddlCheck {
  std::vector<std::string> diagnostics;
  DomainInfo domain;  // filled by check_pddl_domain
  bool ok() const { return diagnostics.empty(); }
};

namespace pddl_check_detail {

using sexpr::Node;

struct Checker {
  std::vector<std::string>& out;

  void fail(const Node& at, const std::string& message) {
    out.push_back("line " + std::to_string(at.line) + ": " + message);
  }

  static bool is_name(const std::string& s) {
    if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
    return true;
  }
  static bool is_variable(const std::string& s) { return s.size() > 1 && s[0] == '?'; }

  // typed list: x y z - type x2 - type2 ... (or untyped). Returns names.
  std::vector<std::string> typed_list(const Node& list, std::size_t from,
                                      const std::set<std::string>& known_types, bool typing,
                                      bool want_variables) {
    std::vector<std::string> names;
    std::vector<std::string> pending;
    for (std::size_t i = from; i < list.kids.size(); ++i) {
      const Node& item = list.kids[i];
      if (!item.is_atom) {
        fail(item, "expected a name in typed list");
        return names;
      }
      if (item.text == "-") {
        if (++i >= list.kids.size() || !list.kids[i].is_atom) {
          fail(item, "dangling '-' in typed list");
          return names;
        }
        const std::string& type = list.kids[i].text;
        if (typing && type != "object" && !known_types.count(type))
          fail(list.kids[i], "unknown type " + type);
        if (!typing) fail(list.kids[i], "typed list in untyped domain");
        pending.clear();
        continue;
      }
      bool var = is_variable(item.text);
      if (want_variables != var)
        fail(item, want_variables ? "expected ?variable" : "unexpected ?variable");
      names.push_back(item.text);
      pending.push_back(item.text);
    }
    return names;
  }

  void check_atom(const Node& node, const DomainInfo& d, const std::set<std::string>& scope,
                  bool ground) {
    if (!node.is_list() || node.kids.empty() || !node.kids[0].is_atom) {
      fail(node, "malformed atom");
      return;
    }
    const std::string& name = node.kids[0].text;
    auto it = d.predicates.find(name);
    if (it == d.predicates.end()) {
      fail(node, "undeclared predicate " + name);
      return;
    }
    if (node.kids.size() - 1 != it->second)
      fail(node, "predicate " + name + " used with arity " +
                     std::to_string(node.kids.size() - 1) + ", declared " +
                     std::to_string(it->second));
    for (std::size_t i = 1; i < node.kids.size(); ++i) {
      const Node& arg = node.kids[i];
      if (!arg.is_atom) {
        fail(arg, "atom argument must be a name or variable");
        continue;
      }
      if (is_variable(arg.text)) {
        if (ground)
          fail(arg, "variable in ground context");
        else if (!scope.count(arg.text))
          fail(arg, "unbound variable " + arg.text);
      } else if (!is_name(arg.text)) {
        fail(arg, "bad object name " + arg.text);
      }
    }
  }

  void check_fexp(const Node& node, const DomainInfo& d, const std::set<std::string>& scope,
                  bool ground) {
    if (node.is_atom) {
      if (!sexpr::is_number(node.text)) fail(node, "expected a number, got " + node.text);
      return;
    }
    if (node.kids.empty() || !node.kids[0].is_atom) {
      fail(node, "malformed numeric expression");
      return;
    }
    const std::string& head = node.kids[0].text;
    if (head == "+" || head == "-" || head == "*" || head == "/") {
      if (node.kids.size() != 3) fail(node, "arithmetic needs two operands");
      for (std::size_t i = 1; i < node.kids.size(); ++i)
        check_fexp(node.kids[i], d, scope, ground);
      return;
    }
    auto it = d.functions.find(head);
    if (it == d.functions.end()) {
      fail(node, "undeclared function " + head);
      return;
    }
    if (node.kids.size() - 1 != it->second)
      fail(node, "function " + head + " used with arity " + std::to_string(node.kids.size() - 1));
    for (std::size_t i = 1; i < node.kids.size(); ++i) {
      const Node& arg = node.kids[i];
      if (!arg.is_atom) {
        fail(arg, "function argument must be a name or variable");
      } else if (is_variable(arg.text)) {
        if (ground)
          fail(arg, "variable in ground context");
        else if (!scope.count(arg.text))
          fail(arg, "unbound variable " + arg.text);
      }
    }
  }

  void check_gd(const Node& node, const DomainInfo& d, std::set<std::string> scope, bool ground) {
    static const std::set<std::string> comparisons{"<", "<=", "=", ">=", ">"};
    if (node.is_atom) {
      fail(node, "goal description must be a list");
      return;
    }
    if (node.head_is("and")) {
      for (std::size_t i = 1; i < node.kids.size(); ++i) check_gd(node.kids[i], d, scope, ground);
      return;
    }
    if (node.head_is("exists")) {
      if (node.kids.size() != 3 || !node.kids[1].is_list()) {
        fail(node, "exists needs a variable list and a body");
        return;
      }
      for (const std::string& v : typed_list(node.kids[1], 0, d.types, true, true))
        scope.insert(v);
      check_gd(node.kids[2], d, scope, false);
      return;
    }
    if (!node.kids.empty() && node.kids[0].is_atom && comparisons.count(node.kids[0].text)) {
      if (node.kids.size() != 3) {
        fail(node, "comparison needs two operands");
        return;
      }
      check_fexp(node.kids[1], d, scope, ground);
      check_fexp(node.kids[2], d, scope, ground);
      return;
    }
    check_atom(node, d, scope, ground);
  }

  void check_effect(const Node& node, const DomainInfo& d, const std::set<std::string>& scope) {
    if (node.head_is("and")) {
      for (std::size_t i = 1; i < node.kids.size(); ++i) check_effect(node.kids[i], d, scope);
      return;
    }
    if (node.head_is("not")) {
      if (node.kids.size() != 2)
        fail(node, "not takes one atom");
      else
        check_atom(node.kids[1], d, scope, false);
      return;
    }
    if (node.head_is("increase") || node.head_is("decrease") || node.head_is("assign")) {
      if (node.kids.size() != 3) {
        fail(node, node.kids[0].text + " needs a function head and an expression");
        return;
      }
      const Node& head = node.kids[1];
      if (!head.is_list() || head.kids.empty() || !head.kids[0].is_atom ||
          !d.functions.count(head.kids[0].text)) {
        fail(head, "update target is not a declared function");
      } else {
        check_fexp(head, d, scope, false);
      }
      check_fexp(node.kids[2], d, scope, false);
      return;
    }
    check_atom(node, d, scope, false);
  }
};

}  // namespace pddl_check_detail

inline PddlCheck check_pddl_domain(std::string_view text) {
  PddlCheck result;
  pddl_check_detail::Checker chk{result.diagnostics};
  sexpr::ParseOutcome parsed = sexpr::parse(text);
  if (parsed.error) {
    result.diagnostics.push_back(*parsed.error);
    return result;
  }
  if (parsed.nodes.size() != 1 || !parsed.nodes[0].head_is("define")) {
    result.diagnostics.push_back("expected a single (define ...) form");
    return result;
  }
  const sexpr::Node& define = parsed.nodes[0];
  if (define.kids.size() < 2 || !define.kids[1].head_is("domain") ||
      define.kids[1].kids.size() != 2 || !define.kids[1].kids[1].is_atom) {
    result.diagnostics.push_back("expected (domain <name>)");
    return result;
  }
  DomainInfo& d = result.domain;
  d.name = define.kids[1].kids[1].text;

  static const std::set<std::string> known_requirements{":strips", ":typing", ":numeric-fluents",
                                                        ":fluents", ":equality",
                                                        ":existential-preconditions"};
  bool typing = false;
  for (std::size_t i = 2; i < define.kids.size(); ++i) {
    const sexpr::Node& section = define.kids[i];
    if (!section.is_list() || section.kids.empty() || !section.kids[0].is_atom) {
      chk.fail(section, "malformed domain section");
      continue;
    }
    const std::string& kind = section.kids[0].text;
    if (kind == ":requirements") {
      for (std::size_t j = 1; j < section.kids.size(); ++j)
        if (!section.kids[j].is_atom || !known_requirements.count(section.kids[j].text))
          chk.fail(section.kids[j], "unsupported requirement");
      for (std::size_t j = 1; j < section.kids.size(); ++j)
        if (section.kids[j].is_atom && section.kids[j].text == ":typing") typing = true;
    } else if (kind == ":types") {
      for (std::size_t j = 1; j < section.kids.size(); ++j) {
        if (!section.kids[j].is_atom || !pddl_check_detail::Checker::is_name(section.kids[j].text))
          chk.fail(section.kids[j], "bad type name");
        else
          d.types.insert(section.kids[j].text);
      }
    } else if (kind == ":predicates") {
      for (std::size_t j = 1; j < section.kids.size(); ++j) {
        const sexpr::Node& decl = section.kids[j];
        if (!decl.is_list() || decl.kids.empty() || !decl.kids[0].is_atom) {
          chk.fail(decl, "malformed predicate declaration");
          continue;
        }
        chk.typed_list(decl, 1, d.types, typing, true);
        if (!d.predicates.emplace(decl.kids[0].text, decl.kids.size() - 1).second)
          chk.fail(decl, "duplicate predicate " + decl.kids[0].text);
      }
    } else if (kind == ":functions") {
      for (std::size_t j = 1; j < section.kids.size(); ++j) {
        const sexpr::Node& decl = section.kids[j];
        if (!decl.is_list() || decl.kids.empty() || !decl.kids[0].is_atom) {
          chk.fail(decl, "malformed function declaration");
          continue;
        }
        chk.typed_list(decl, 1, d.types, typing, true);
        if (!d.functions.emplace(decl.kids[0].text, decl.kids.size() - 1).second)
          chk.fail(decl, "duplicate function " + decl.kids[0].text);
      }
    } else if (kind == ":action") {
      // validated in the second pass below, once declarations are complete
    } else {
      chk.fail(section, "unsupported domain section " + kind);
    }
  }

  for (std::size_t i = 2; i < define.kids.size(); ++i) {
    const sexpr::Node& section = define.kids[i];
    if (!section.head_is(":action")) continue;
    if (section.kids.size() < 2 || !section.kids[1].is_atom) {
      chk.fail(section, "action needs a name");
      continue;
    }
    const std::string& name = section.kids[1].text;
    if (!d.actions.insert(name).second) chk.fail(section, "duplicate action " + name);
    std::set<std::string> scope;
    bool saw_params = false, saw_pre = false, saw_effect = false;
    for (std::size_t j = 2; j + 1 < section.kids.size(); j += 2) {
      const sexpr::Node& key = section.kids[j];
      const sexpr::Node& value = section.kids[j + 1];
      if (!key.is_atom) {
        chk.fail(key, "expected :parameters/:precondition/:effect");
        continue;
      }
      if (key.text == ":parameters") {
        saw_params = true;
        if (!value.is_list()) {
          chk.fail(value, ":parameters needs a list");
          continue;
        }
        for (const std::string& v : chk.typed_list(value, 0, d.types, typing, true)) {
          if (!scope.insert(v).second) chk.fail(value, "duplicate parameter " + v);
        }
      } else if (key.text == ":precondition") {
        saw_pre = true;
        chk.check_gd(value, d, scope, false);
      } else if (key.text == ":effect") {
        saw_effect = true;
        chk.check_effect(value, d, scope);
      } else {
        chk.fail(key, "unsupported action section " + key.text);
      }
    }
    if (!saw_params || !saw_pre || !saw_effect)
      chk.fail(section, "action " + name + " is missing a required section");
  }
  return result;
}

inline PddlCheck check_pddl_problem(std::string_view text, const DomainInfo* domain = nullptr) {
  PddlCheck result;
  pddl_check_detail::Checker chk{result.diagnostics};
  sexpr::ParseOutcome parsed = sexpr::parse(text);
  if (parsed.error) {
    result.diagnostics.push_back(*parsed.error);
    return result;
  }
  if (parsed.nodes.size() != 1 || !parsed.nodes[0].head_is("define")) {
    result.diagnostics.push_back("expected a single (define ...) form");
    return result;
  }
  const sexpr::Node& define = parsed.nodes[0];
  if (define.kids.size() < 2 || !define.kids[1].head_is("problem") ||
      define.kids[1].kids.size() != 2) {
    result.diagnostics.push_back("expected (problem <name>)");
    return result;
  }

  DomainInfo local;
  // Without a domain to cross-check, collect declarations permissively so
  // arity misuse within the problem itself is still caught.
  const bool strict = domain != nullptr;
  DomainInfo d = strict ? *domain : local;
  std::set<std::string> objects;

  const sexpr::Node* init = nullptr;
  const sexpr::Node* goal = nullptr;
  for (std::size_t i = 2; i < define.kids.size(); ++i) {
    const sexpr::Node& section = define.kids[i];
    if (!section.is_list() || section.kids.empty() || !section.kids[0].is_atom) {
      chk.fail(section, "malformed problem section");
      continue;
    }
    const std::string& kind = section.kids[0].text;
    if (kind == ":domain") {
      if (section.kids.size() != 2 || !section.kids[1].is_atom)
        chk.fail(section, "malformed :domain");
      else if (strict && section.kids[1].text != d.name)
        chk.fail(section, "problem references domain " + section.kids[1].text + ", expected " +
                              d.name);
    } else if (kind == ":objects") {
      for (const std::string& o :
           chk.typed_list(section, 1, d.types, strict ? !d.types.empty() : true, false))
        objects.insert(o);
    } else if (kind == ":init") {
      init = &section;
    } else if (kind == ":goal") {
      if (section.kids.size() != 2)
        chk.fail(section, ":goal takes one goal description");
      else
        goal = &section.kids[1];
    } else {
      chk.fail(section, "unsupported problem section " + kind);
    }
  }

  if (init) {
    for (std::size_t i = 1; i < init->kids.size(); ++i) {
      const sexpr::Node& el = init->kids[i];
      if (el.head_is("=")) {
        if (el.kids.size() != 3) {
          chk.fail(el, "init assignment needs a head and a value");
          continue;
        }
        if (strict) chk.check_fexp(el.kids[1], d, {}, true);
        if (!el.kids[2].is_atom || !sexpr::is_number(el.kids[2].text))
          chk.fail(el.kids[2], "init assignment value must be a number");
      } else if (strict) {
        chk.check_atom(el, d, {}, true);
      } else if (!el.is_list() || el.kids.empty() || !el.kids[0].is_atom) {
        chk.fail(el, "malformed init atom");
      }
    }
  } else {
    result.diagnostics.push_back("missing :init section");
  }

  if (goal) {
    if (strict) chk.check_gd(*goal, d, {}, true);
  } else {
    result.diagnostics.push_back("missing :goal section");
  }
  return result;
}

}  // namespace kmarf
