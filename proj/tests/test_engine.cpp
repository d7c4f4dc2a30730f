#include <doctest.h>

#include "generators.hpp"
#include "kmarf/engine.hpp"
#include "kmarf/parser.hpp"
#include "oracle.hpp"

using namespace kmarf;

namespace {

const char* kBoardModel =
    "state state_2 {\n"
    "  is_bus(b25). is_bus_stop(bs1). is_passenger(p1).\n"
    "  at(b25, bs1). at(p1, bs1).\n"
    "  capacity(b25, 23). waiting(p1, min(2)).\n"
    "}\n"
    "transition board {\n"
    "  pre {\n"
    "    is_bus(B). is_bus_stop(S). is_passenger(P).\n"
    "    at(B, S). at(P, S). capacity(B, C). waiting(P, min(T)).\n"
    "  }\n"
    "  compute { less_than(T, 20). greater_than(C, 0). subtract(C, 1, C2). }\n"
    "  action {\n"
    "    delete(waiting(P, min(T))).\n"
    "    delete(at(P, S)).\n"
    "    add(at(P, B)).\n"
    "    delete(capacity(B, C)).\n"
    "    add(capacity(B, C2)).\n"
    "  }\n"
    "}\n";

FunctionCall call(const std::string& text) {
  Model m = parse_model("transition t { pre { } compute { " + text + ". } action { } }");
  return m.transitions.at("t").computation.at(0);
}

State state_of(const std::string& body) {
  return parse_model("state s { " + body + " }").states.at("s");
}

}  // namespace

TEST_CASE("eval: passing test call leaves the substitution unchanged") {
  auto got = eval_computation({call("less_than(2, 20)")}, {});
  REQUIRE(got.has_value());
  CHECK(got->empty());
}

TEST_CASE("eval: value call binds the result variable") {
  auto got = eval_computation({call("subtract(23, 1, C2)")}, {});
  REQUIRE(got.has_value());
  CHECK(got->at("C2") == Term::number(22));
}

TEST_CASE("eval: failing test fails the computation") {
  CHECK_FALSE(eval_computation({call("greater_than(0, 5)")}, {}).has_value());
}

TEST_CASE("eval: divide by zero fails") {
  CHECK_FALSE(eval_computation({call("divide(1, 0, X)")}, {}).has_value());
}

TEST_CASE("eval: unknown function is a hard error, not a failure") {
  CHECK_THROWS_AS(eval_computation({call("frobnicate(1, 2)")}, {}), EvalError);
  CHECK_THROWS_AS(eval_computation({call("subtract(1, 2)")}, {}), EvalError);  // wrong arity
}

TEST_CASE("eval: non-ground input argument is a hard error") {
  CHECK_THROWS_AS(eval_computation({call("less_than(X, 20)")}, {}), EvalError);
  CHECK_THROWS_AS(eval_computation({call("add(X, 1, Y)")}, {}), EvalError);
}

TEST_CASE("eval: results feed subsequent calls and ground slots act as checks") {
  auto got = eval_computation({call("add(1, 2, X)"), call("multiply(X, 10, Y)")}, {});
  REQUIRE(got.has_value());
  CHECK(got->at("Y") == Term::number(30));
  CHECK(eval_computation({call("add(1, 2, 3)")}, {}).has_value());
  CHECK_FALSE(eval_computation({call("add(1, 2, 4)")}, {}).has_value());
}

TEST_CASE("eval: non-numeric arguments are outside every tuple set") {
  CHECK_FALSE(eval_computation({call("less_than(a, 2)")}, {}).has_value());
  CHECK_FALSE(eval_computation({call("add(a, 2, X)")}, {}).has_value());
  // equal/not_equal are structural over all ground terms
  CHECK(eval_computation({call("equal(a, a)")}, {}).has_value());
  CHECK(eval_computation({call("not_equal(a, b)")}, {}).has_value());
  CHECK(eval_computation({call("equal(min(2), min(2))")}, {}).has_value());
}

TEST_CASE("eval: exact rational comparison across integer and fraction") {
  CHECK(eval_computation({call("equal(1/2, 0.5)")}, {}).has_value());
  CHECK(eval_computation({call("less_than(1/3, 0.34)")}, {}).has_value());
  CHECK_FALSE(eval_computation({call("less_than(1/3, 1/3)")}, {}).has_value());
}

TEST_CASE("figure-2 board transition produces the documented destination") {
  Model m = parse_model(kBoardModel);
  const State& src = m.states.at("state_2");
  const TransitionSpec& board = m.transitions.at("board");

  std::vector<TransitionStep> steps = successors(src, m.transitions);
  REQUIRE(steps.size() == 1);
  const TransitionStep& step = steps[0];
  CHECK(step.transition == "board");
  CHECK(step.binding.at("C2") == Term::number(22));

  State expected = state_of(
      "is_bus(b25). is_bus_stop(bs1). is_passenger(p1). at(b25, bs1). at(p1, b25). "
      "capacity(b25, 22).");
  CHECK(step.destination == expected);

  // the same destination via apply_transition directly
  MatchSet ms = match_precondition(board.precondition, src);
  REQUIRE(ms.size() == 1);
  auto sub = eval_computation(board.computation, ms[0]);
  REQUIRE(sub.has_value());
  CHECK(apply_transition(src, board, *sub) == expected);
}

TEST_CASE("figure-2 computation gates: waiting >= 20 and capacity 0") {
  Model m = parse_model(kBoardModel);
  State long_wait = m.states.at("state_2");
  long_wait.predicates.erase(Predicate("waiting", {Term::literal("p1"),
                                                   Term::compound("min", {Term::number(2)})}));
  long_wait.predicates.insert(Predicate("waiting", {Term::literal("p1"),
                                                    Term::compound("min", {Term::number(20)})}));
  CHECK(successors(long_wait, m.transitions).empty());

  State no_capacity = m.states.at("state_2");
  no_capacity.predicates.erase(Predicate("capacity", {Term::literal("b25"), Term::number(23)}));
  no_capacity.predicates.insert(Predicate("capacity", {Term::literal("b25"), Term::number(0)}));
  CHECK(successors(no_capacity, m.transitions).empty());
}

TEST_CASE("apply: add of present predicate and delete of absent predicate are no-ops") {
  Model m = parse_model(
      "transition t1 { pre { } action { add(p(a)). } }"
      "transition t2 { pre { } action { delete(q(b)). } }");
  State s = state_of("p(a). r.");
  CHECK(apply_transition(s, m.transitions.at("t1"), {}) == s);
  CHECK(apply_transition(s, m.transitions.at("t2"), {}) == s);
}

TEST_CASE("apply: action list order is an ordered fold") {
  Model m = parse_model(
      "transition del_then_add { pre { } action { delete(p(a)). add(p(a)). } }"
      "transition add_then_del { pre { } action { add(p(a)). delete(p(a)). } }");
  State s = state_of("p(a).");
  State with = state_of("p(a).");
  State without = state_of("");
  CHECK(apply_transition(s, m.transitions.at("del_then_add"), {}) == with);
  CHECK(apply_transition(s, m.transitions.at("add_then_del"), {}) == without);
  CHECK(apply_transition(without, m.transitions.at("del_then_add"), {}) == with);
}

TEST_CASE("apply: non-ground action after substitution is a hard error") {
  Model m = parse_model("transition t { pre { p(X). } action { add(q(X)). } }");
  CHECK_THROWS_AS(apply_transition(state_of("p(a)."), m.transitions.at("t"), {}), EvalError);
}

TEST_CASE("successors: one step per waiting passenger") {
  Model m = parse_model(
      "state s {\n"
      "  is_bus(b1). at(b1, bs1). capacity(b1, 2).\n"
      "  is_passenger(p1). at(p1, bs1). waiting(p1, min(2)).\n"
      "  is_passenger(p2). at(p2, bs1). waiting(p2, min(3)).\n"
      "}\n"
      "transition board {\n"
      "  pre { is_bus(B). is_passenger(P). at(B, S). at(P, S). capacity(B, C). "
      "waiting(P, min(T)). }\n"
      "  compute { less_than(T, 20). greater_than(C, 0). subtract(C, 1, C2). }\n"
      "  action { delete(waiting(P, min(T))). delete(at(P, S)). add(at(P, B)). "
      "delete(capacity(B, C)). add(capacity(B, C2)). }\n"
      "}\n");
  auto steps = successors(m.states.at("s"), m.transitions);
  REQUIRE(steps.size() == 2);
  CHECK(steps[0].binding.at("P") == Term::literal("p1"));
  CHECK(steps[1].binding.at("P") == Term::literal("p2"));
}

TEST_CASE("successors: empty when nothing matches") {
  Model m = parse_model(
      "state s { q(b). }\n"
      "transition t { pre { p(X). } action { delete(p(X)). } }");
  CHECK(successors(m.states.at("s"), m.transitions).empty());
}

TEST_CASE("successors: computation filters remove all matches at capacity 0") {
  Model m = parse_model(
      "state s { cap(v, 0). p(a). }\n"
      "transition t { pre { cap(V, C). p(P). } compute { greater_than(C, 0). } "
      "action { delete(p(P)). } }");
  CHECK(successors(m.states.at("s"), m.transitions).empty());
  auto want = oracle::enumerate_successors(m.states.at("s"), m.transitions);
  CHECK(want.empty());
}

TEST_CASE("successors agree with the brute-force oracle on random models") {
  std::size_t with_steps = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    gen::Rng rng(seed);
    State s = gen::random_state(rng, "s");
    std::map<std::string, TransitionSpec> ts;
    TransitionSpec a = gen::random_matching_transition(rng, s, "ta");
    TransitionSpec b = gen::random_transition(rng, "tb");
    ts.emplace(a.name, a);
    ts.emplace(b.name, b);

    std::vector<TransitionStep> got = successors(s, ts);
    std::set<oracle::Successor> got_set;
    for (const TransitionStep& step : got) {
      got_set.insert(oracle::Successor{step.transition, oracle::binding_text(step.binding),
                                       oracle::state_texts(step.destination)});
    }
    REQUIRE(got_set.size() == got.size());  // no duplicate steps
    std::set<oracle::Successor> want = oracle::enumerate_successors(s, ts);
    REQUIRE(got_set == want);
    if (!got.empty()) ++with_steps;
  }
  CHECK(with_steps > 100);
}

TEST_CASE("purity: evaluating computations never mutates states") {
  Model m = parse_model(kBoardModel);
  State before = m.states.at("state_2");
  std::string snapshot = canonical_state_text(before);
  (void)successors(before, m.transitions);
  CHECK(canonical_state_text(before) == snapshot);
  CHECK(canonical_state_text(m.states.at("state_2")) == snapshot);
}

TEST_CASE("frame property on random models") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    gen::Rng rng(seed);
    State s = gen::random_state(rng, "s");
    TransitionSpec t = gen::random_matching_transition(rng, s, "t");
    std::map<std::string, TransitionSpec> ts{{t.name, t}};
    for (const TransitionStep& step : successors(s, ts)) {
      std::set<Predicate> named;
      for (const ActionItem& item : t.action) named.insert(substitute(step.binding, item.pred));
      for (const Predicate& p : s.predicates)
        if (!named.count(p)) CHECK(step.destination.contains(p));
      // add-post / delete-post under the ordered fold: last op wins
      std::map<Predicate, ActionOp> last;
      for (const ActionItem& item : t.action) last[substitute(step.binding, item.pred)] = item.op;
      for (const auto& [pred, op] : last) {
        if (op == ActionOp::Add) CHECK(step.destination.contains(pred));
        if (op == ActionOp::Delete) CHECK_FALSE(step.destination.contains(pred));
      }
    }
  }
}

TEST_CASE("trace line format is bit-exact") {
  Model m = parse_model(
      "state s { p(a). }\n"
      "transition go { pre { p(X). } action { delete(p(X)). add(q(X)). } }");
  auto steps = successors(m.states.at("s"), m.transitions);
  REQUIRE(steps.size() == 1);
  std::string src_hash = to_hex16(fnv1a64("p(a)."));
  std::string dst_hash = to_hex16(fnv1a64("q(a)."));
  CHECK(state_hash(steps[0].source) == src_hash);
  CHECK(steps[0].trace_line() == src_hash + " --go{X=a}--> " + dst_hash);
}

TEST_CASE("semantic checks: unknown functions, shadowing, unbound reads") {
  Model m = parse_model(
      "transition t { pre { cap(V, C). } compute { nonsense(C, 1, D). } action { } }");
  auto issues = check_model_semantics(m);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("unknown function nonsense/3") != std::string::npos);

  Model shadow = parse_model(
      "transition t { pre { cap(V, C). } compute { add(C, 1, C). } action { } }");
  issues = check_model_semantics(shadow);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("shadows") != std::string::npos);

  Model unbound = parse_model(
      "transition t { pre { p(X). } compute { less_than(Y, 2). } action { } }");
  issues = check_model_semantics(unbound);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("unbound variable Y") != std::string::npos);

  Model lint = parse_model("state s { min(2). waiting(p1, min(2)). }");
  issues = check_model_semantics(lint);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].find("both a predicate and a compound term") != std::string::npos);

  Model clean = parse_model(kBoardModel);
  CHECK(check_model_semantics(clean).empty());
}
