#include <doctest.h>

#include <filesystem>

#include "kmarf/library.hpp"
#include "kmarf/parser.hpp"
#include "kmarf/pddl.hpp"
#include "kmarf/pddl_check.hpp"
#include "kmarf/pddl_plan.hpp"
#include "kmarf/planner.hpp"

using namespace kmarf;

namespace {

const std::filesystem::path kSourceDir = KMARF_SOURCE_DIR;

Model load_scenario(const std::string& file) {
  Model m = parse_model(read_file(kSourceDir / "scenarios" / file));
  merge_library(m, load_library(kSourceDir / "library"));
  return m;
}

TransformationRules transport_rules() {
  return *parse_model(read_file(kSourceDir / "scenarios" / "transport.rules")).rules;
}

const char* kBoardModel =
    "state state_1 {\n"
    "  is_bus(b25). is_bus_stop(bs1). is_passenger(p1).\n"
    "  at(b25, bs1). at(p1, bs1). capacity(b25, 23). waiting(p1, min(2)).\n"
    "}\n"
    "state goal_state { at(p1, b25). }\n"
    "initial state_1. goal goal_state.\n"
    "transition board {\n"
    "  pre { is_bus(B). is_bus_stop(S). is_passenger(P). at(B, S). at(P, S). "
    "capacity(B, C). waiting(P, min(T)). }\n"
    "  compute { less_than(T, 20). greater_than(C, 0). subtract(C, 1, C2). }\n"
    "  action { delete(waiting(P, min(T))). delete(at(P, S)). add(at(P, B)). "
    "delete(capacity(B, C)). add(capacity(B, C2)). }\n"
    "}\n"
    "rules {\n"
    "  types { is_bus. is_bus_stop. is_passenger. }\n"
    "  fluents { capacity/2. waiting/2. }\n"
    "  wrappers { min -> minutes. }\n"
    "}\n";

// Render a native plan as external sequential plan text, through the same
// parameter ordering the domain compiler uses.
std::string plan_as_pddl_text(const Model& m, const TransformationRules& rules, const Plan& plan) {
  std::string out;
  for (const TransitionStep& step : plan.steps) {
    out += "(" + step.transition;
    for (const std::string& var : action_parameters(m.transitions.at(step.transition), m, rules))
      out += " " + step.binding.at(var).to_text();
    out += ")\n";
  }
  return out;
}

}  // namespace

TEST_CASE("golden: bus and truck artifacts are byte-identical to the frozen files") {
  for (const std::string name : {"bus", "truck"}) {
    Model m = load_scenario(name + ".kmf");
    TransformationRules rules = transport_rules();
    PddlArtifact domain = compile_domain(m, rules, name);
    PddlArtifact problem = compile_problem(m, rules, name);
    CHECK(domain.text == read_file(kSourceDir / "tests" / "golden" / (name + ".domain.pddl")));
    CHECK(problem.text == read_file(kSourceDir / "tests" / "golden" / (name + ".problem.pddl")));
  }
}

TEST_CASE("grammar checker accepts the emitted artifacts and catches corruption") {
  Model m = load_scenario("bus.kmf");
  TransformationRules rules = transport_rules();
  PddlArtifact domain = compile_domain(m, rules, "bus");
  PddlArtifact problem = compile_problem(m, rules, "bus");

  PddlCheck dc = check_pddl_domain(domain.text);
  CHECK(dc.ok());
  PddlCheck pc = check_pddl_problem(problem.text, &dc.domain);
  CHECK(pc.ok());

  // drop a closing paren
  std::string broken = domain.text.substr(0, domain.text.size() - 2);
  CHECK_FALSE(check_pddl_domain(broken).ok());
  // undeclared predicate in init
  std::string bad_problem = problem.text;
  bad_problem.replace(bad_problem.find("(at bus1 poi1)"), 14, "(on bus1 poi1)");
  CHECK_FALSE(check_pddl_problem(bad_problem, &dc.domain).ok());
  // arity misuse
  std::string bad_arity = problem.text;
  bad_arity.replace(bad_arity.find("(at bus1 poi1)"), 14, "(at bus1 poi1 x)");
  CHECK_FALSE(check_pddl_problem(bad_arity, &dc.domain).ok());
  // wrong domain reference
  std::string bad_ref = problem.text;
  bad_ref.replace(bad_ref.find("(:domain bus)"), 13, "(:domain van)");
  CHECK_FALSE(check_pddl_problem(bad_ref, &dc.domain).ok());
}

TEST_CASE("board transition compiles to the documented numeric forms") {
  Model m = parse_model(kBoardModel);
  PddlArtifact domain = compile_domain(m, *m.rules, "fig2");
  CHECK(domain.text.find(":parameters (?b - bus ?s - bus_stop ?p - passenger)") !=
        std::string::npos);
  CHECK(domain.text.find("(< (waiting_minutes ?p) 20)") != std::string::npos);
  CHECK(domain.text.find("(> (capacity ?b) 0)") != std::string::npos);
  CHECK(domain.text.find("(decrease (capacity ?b) 1)") != std::string::npos);
  CHECK(domain.text.find("(not (waiting ?p))") != std::string::npos);
  CHECK(check_pddl_domain(domain.text).ok());

  PddlArtifact problem = compile_problem(m, *m.rules, "fig2");
  CHECK(problem.text.find("(= (capacity b25) 23)") != std::string::npos);
  CHECK(problem.text.find("(= (waiting_minutes p1) 2)") != std::string::npos);
  CHECK(problem.text.find("(waiting p1)") != std::string::npos);
  CHECK(problem.text.find("(:goal (at p1 b25))") != std::string::npos);
}

TEST_CASE("zero transitions still give a grammar-valid domain") {
  Model m = parse_model("state s { p(a). } state g { p(a). } initial s. goal g.");
  TransformationRules rules;  // no typing, no fluents
  PddlArtifact domain = compile_domain(m, rules, "empty");
  PddlCheck dc = check_pddl_domain(domain.text);
  CHECK(dc.ok());
  CHECK(domain.text.find(":action") == std::string::npos);
  PddlArtifact problem = compile_problem(m, rules, "empty");
  CHECK(check_pddl_problem(problem.text, &dc.domain).ok());
}

TEST_CASE("empty goal compiles to the trivial conjunction") {
  Model m = parse_model("state s { p(a). } state g { } initial s. goal g.");
  TransformationRules rules;
  PddlArtifact problem = compile_problem(m, rules, "m");
  CHECK(problem.text.find("(:goal (and))") != std::string::npos);
}

TEST_CASE("mapping errors name the transition and construct") {
  TransformationRules rules = transport_rules();

  SUBCASE("value function result feeding nothing") {
    Model m = parse_model(
        "transition t { pre { capacity(V, C). } compute { multiply(C, 2, D). } "
        "action { add(mark(V)). } }");
    try {
      compile_domain(m, rules, "m");
      FAIL("expected MappingError");
    } catch (const MappingError& e) {
      CHECK(e.where == "transition t");
      CHECK(e.construct == "multiply(C, 2, D)");
      CHECK(std::string(e.what()).find("feeds no fluent update") != std::string::npos);
    }
  }

  SUBCASE("not_equal has no comparison counterpart") {
    Model m = parse_model(
        "transition t { pre { capacity(V, C). } compute { not_equal(C, 3). } "
        "action { add(mark(V)). } }");
    CHECK_THROWS_AS(compile_domain(m, rules, "m"), MappingError);
  }

  SUBCASE("numeric argument in a plain predicate") {
    Model m = parse_model("transition t { pre { at(V, 3). } action { delete(at(V, 3)). } }");
    CHECK_THROWS_AS(compile_domain(m, rules, "m"), MappingError);
  }

  SUBCASE("ground type atom") {
    Model m = parse_model(
        "transition t { pre { is_poi(poi1). at(V, W). } action { delete(at(V, W)). } }");
    CHECK_THROWS_AS(compile_domain(m, rules, "m"), MappingError);
  }

  SUBCASE("inconsistent wrapper use") {
    Model m = parse_model(
        "state s { waiting(p1, min(2)). waiting(p2, 3). } state g { } initial s. goal g.");
    CHECK_THROWS_AS(compile_domain(m, rules, "m"), MappingError);
  }

  SUBCASE("guarded fluent without a wrapper collides with its own guard") {
    // capacity has no wrapper; deleting it outright would need a guard
    // predicate with the same name as the value function.
    Model m = parse_model(
        "transition t { pre { capacity(V, C). } action { delete(capacity(V, C)). } }");
    CHECK_THROWS_AS(compile_domain(m, rules, "m"), MappingError);
  }

  SUBCASE("object without a type predicate when typing is on") {
    Model m = parse_model("state s { at(ghost, poi9). } state g { } initial s. goal g.");
    CHECK_THROWS_AS(compile_problem(m, rules, "m"), MappingError);
  }

  SUBCASE("actions may not change type predicates") {
    Model m = parse_model(
        "transition t { pre { is_poi(N). } action { delete(is_poi(N)). } }");
    CHECK_THROWS_AS(compile_domain(m, rules, "m"), MappingError);
  }
}

TEST_CASE("goal variables require the existential toggle") {
  const char* base =
      "state s { is_poi(poi1). is_transport_agent(v1). at(v1, poi1). }\n"
      "state g { at(v1, P). is_poi(P). }\n"
      "initial s. goal g.\n";
  Model m = parse_model(base);
  TransformationRules rules = transport_rules();
  CHECK_THROWS_AS(compile_problem(m, rules, "m"), MappingError);
  rules.allow_existential_goal = true;
  PddlArtifact problem = compile_problem(m, rules, "m");
  CHECK(problem.text.find("(:goal (exists (?p - poi) (and (at v1 ?p))))") != std::string::npos);
  PddlArtifact domain = compile_domain(m, rules, "m");
  PddlCheck dc = check_pddl_domain(domain.text);
  CHECK(check_pddl_problem(problem.text, &dc.domain).ok());
}

TEST_CASE("artifacts are deterministic and content-addressed") {
  Model m = load_scenario("bus.kmf");
  TransformationRules rules = transport_rules();
  PddlArtifact a = compile_domain(m, rules, "bus");
  PddlArtifact b = compile_domain(m, rules, "bus");
  CHECK(a.text == b.text);
  CHECK(a.hash == b.hash);
  CHECK(a.uri == b.uri);
  CHECK(a.hash == sha256_hex(a.text));
  CHECK(a.uri == "/artifacts/" + a.hash);
  CHECK(a.hash.size() == 64);
}

TEST_CASE("fraction values emit as finite decimals or fail loudly") {
  CHECK(pddl::pddl_number(Rational(3, 2)) == std::string("1.5"));
  CHECK(pddl::pddl_number(Rational(-3, 4)) == std::string("-0.75"));
  CHECK(pddl::pddl_number(Rational(42)) == std::string("42"));
  CHECK(pddl::pddl_number(Rational(1, 40)) == std::string("0.025"));
  CHECK_FALSE(pddl::pddl_number(Rational(1, 3)).has_value());

  Model m = parse_model(
      "state s { is_transport_agent(v1). capacity(v1, 3/2). } state g { } initial s. goal g.");
  TransformationRules rules = transport_rules();
  PddlArtifact problem = compile_problem(m, rules, "m");
  CHECK(problem.text.find("(= (capacity v1) 1.5)") != std::string::npos);

  Model bad = parse_model(
      "state s { is_transport_agent(v1). capacity(v1, 1/3). } state g { } initial s. goal g.");
  CHECK_THROWS_AS(compile_problem(bad, rules, "m"), MappingError);
}

TEST_CASE("plan text parser tolerates solver decorations") {
  auto actions = parse_plan_text(
      "; plan found\n"
      "0.000: (PICKUP_AGENT p1 poi1 bus1) [1.000]\n"
      "\n"
      "1.000: (move_to_next_coordinate bus1 poi1 poi2) [1.000]\n"
      "(drop_agent p1 bus1 poi2)\n");
  REQUIRE(actions.size() == 3);
  CHECK(actions[0].name == "pickup_agent");
  CHECK(actions[0].args == std::vector<std::string>{"p1", "poi1", "bus1"});
  CHECK(actions[1].name == "move_to_next_coordinate");
  CHECK(actions[2].to_text() == "(drop_agent p1 bus1 poi2)");
}

TEST_CASE("cross_validate replays a faithful external plan") {
  Model m = load_scenario("bus.kmf");
  TransformationRules rules = transport_rules();
  Plan native = std::get<Plan>(find_plan(m));
  std::vector<PlanAction> external = parse_plan_text(plan_as_pddl_text(m, rules, native));
  REQUIRE(external.size() == native.cost);

  Plan replayed;
  auto divergence = cross_validate(m, rules, external, &replayed);
  CHECK_FALSE(divergence.has_value());
  CHECK(replayed.cost == native.cost);
}

TEST_CASE("cross_validate flags a plan with a deleted action") {
  Model m = load_scenario("bus.kmf");
  TransformationRules rules = transport_rules();
  Plan native = std::get<Plan>(find_plan(m));
  std::vector<PlanAction> external = parse_plan_text(plan_as_pddl_text(m, rules, native));
  external.erase(external.begin() + 1);  // drop the first move
  auto divergence = cross_validate(m, rules, external);
  REQUIRE(divergence.has_value());
  CHECK(divergence->index >= 1);
}

TEST_CASE("cross_validate accepts the empty plan when the initial state is the goal") {
  Model m = parse_model("state s { p(a). } state g { p(a). } initial s. goal g.");
  TransformationRules rules;
  CHECK_FALSE(cross_validate(m, rules, {}).has_value());
  Model far = parse_model("state s { p(a). } state g { q(b). } initial s. goal g.");
  auto divergence = cross_validate(far, rules, {});
  REQUIRE(divergence.has_value());
  CHECK(divergence->reason.find("goal") != std::string::npos);
}

TEST_CASE("external solver boundary: stub command and failing command") {
  auto got = run_external_solver("printf '(move_to_next_coordinate bus1 poi1 poi2)\\n' # {domain} {problem}",
                                 "d.pddl", "p.pddl");
  REQUIRE(got.has_value());
  REQUIRE(got->size() == 1);
  CHECK((*got)[0].name == "move_to_next_coordinate");
  CHECK_FALSE(run_external_solver("false", "d.pddl", "p.pddl").has_value());
}
