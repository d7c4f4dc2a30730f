// kmarf — knowledge models, planning, PDDL generation and the batch API.
//
// Exit codes: 0 success, 1 domain failure (no plan, failed run, taxonomy
// violations, unmappable model), 2 usage or parse errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "kmarf/engine.hpp"
#include "kmarf/library.hpp"
#include "kmarf/parser.hpp"
#include "kmarf/pddl.hpp"
#include "kmarf/pddl_check.hpp"
#include "kmarf/pddl_plan.hpp"
#include "kmarf/planner.hpp"
#include "kmarf/printer.hpp"
#include "kmarf/runtime.hpp"
#include "kmarf/service.hpp"
#include "kmarf/store.hpp"
#include "kmarf/taxonomy.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomainFailure = 1;
constexpr int kExitUsage = 2;

struct CommonInputs {
  std::vector<std::string> files;
  std::string rules_file;
  std::string library_dir;
};

void add_common(CLI::App* cmd, CommonInputs& in, bool rules_flag = true) {
  cmd->add_option("files", in.files, "input .kmf documents (merged)")
      ->required()
      ->check(CLI::ExistingFile);
  if (rules_flag)
    cmd->add_option("--rules", in.rules_file, "extra document with a rules block")
        ->check(CLI::ExistingFile);
  cmd->add_option("--library", in.library_dir, "transition library directory to merge")
      ->check(CLI::ExistingDirectory);
}

kmarf::Model load_inputs(const CommonInputs& in) {
  std::vector<kmarf::Document> docs;
  for (const std::string& file : in.files)
    docs.push_back(kmarf::parse_document(kmarf::read_file(file)));
  if (!in.rules_file.empty())
    docs.push_back(kmarf::parse_document(kmarf::read_file(in.rules_file)));
  kmarf::Model m = kmarf::assemble_model(docs);
  if (!in.library_dir.empty()) kmarf::merge_library(m, kmarf::load_library(in.library_dir));
  return m;
}

void write_or_print(const std::string& out_file, const std::string& text) {
  if (out_file.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + out_file);
}

// Perturbation script for `exec`:
//
//   script {
//     step.
//     perturb { add { at(bus1, poi1). } delete { at(bus1, poi2). } }
//     finish.
//   }
struct ScriptEvent {
  enum class Kind { Step, Perturb, Finish } kind = Kind::Step;
  std::vector<kmarf::Predicate> add;
  std::vector<kmarf::Predicate> del;
};

std::vector<ScriptEvent> parse_script(const std::string& text) {
  using namespace kmarf;
  Lexer lex(text);
  auto expect = [&lex](TokenKind kind, const std::string& message) {
    if (lex.peek().kind != kind) lex.fail(message);
    return lex.next();
  };
  auto expect_word = [&](const std::string& word) {
    Token t = expect(TokenKind::Ident, "expected '" + word + "'");
    if (t.text != word) throw ParseError(t.line, t.column, "expected '" + word + "'");
    return t;
  };
  auto parse_predicates = [&]() {
    expect(TokenKind::LBrace, "expected '{'");
    std::vector<Predicate> preds;
    while (true) {
      if (lex.peek().kind == TokenKind::End) lex.fail("unterminated block");
      if (lex.peek().kind == TokenKind::RBrace) {
        lex.next();
        break;
      }
      // predicate '.'
      Token f = expect(TokenKind::Ident, "expected predicate");
      std::string pred_text = f.text;
      if (lex.peek().kind == TokenKind::LParen) {
        int parens = 0;
        do {
          Token t = lex.next();
          pred_text += t.text;
          if (t.kind == TokenKind::LParen) ++parens;
          if (t.kind == TokenKind::RParen) --parens;
          if (t.kind == TokenKind::Comma) pred_text += " ";
        } while (parens > 0);
      }
      expect(TokenKind::Dot, "expected '.'");
      Model m = parse_model("state x { " + pred_text + ". }");
      const State& s = m.states.at("x");
      preds.push_back(*s.predicates.begin());
    }
    return preds;
  };

  expect_word("script");
  expect(TokenKind::LBrace, "expected '{'");
  std::vector<ScriptEvent> events;
  while (lex.peek().kind != TokenKind::RBrace) {
    Token t = expect(TokenKind::Ident, "expected 'step', 'perturb' or 'finish'");
    if (t.text == "step") {
      expect(TokenKind::Dot, "expected '.'");
      events.push_back(ScriptEvent{ScriptEvent::Kind::Step, {}, {}});
    } else if (t.text == "finish") {
      expect(TokenKind::Dot, "expected '.'");
      events.push_back(ScriptEvent{ScriptEvent::Kind::Finish, {}, {}});
    } else if (t.text == "perturb") {
      expect(TokenKind::LBrace, "expected '{'");
      ScriptEvent event;
      event.kind = ScriptEvent::Kind::Perturb;
      while (lex.peek().kind != TokenKind::RBrace) {
        Token section = expect(TokenKind::Ident, "expected 'add' or 'delete'");
        if (section.text == "add")
          event.add = parse_predicates();
        else if (section.text == "delete")
          event.del = parse_predicates();
        else
          throw ParseError(section.line, section.column, "expected 'add' or 'delete'");
      }
      lex.next();
      events.push_back(std::move(event));
    } else {
      throw ParseError(t.line, t.column, "unknown script directive '" + t.text + "'");
    }
  }
  return events;
}

int cmd_parse(const CommonInputs& in, bool canonical) {
  kmarf::Model m = load_inputs(in);
  std::vector<std::string> notes = kmarf::check_model_semantics(m);
  if (canonical) {
    std::cout << kmarf::print_canonical(m);
  } else {
    std::cout << "ok: " << m.states.size() << " states, " << m.transitions.size()
              << " transitions\n";
  }
  for (const std::string& note : notes) std::cerr << "warning: " << note << "\n";
  return kExitOk;
}

int cmd_validate(const CommonInputs& in, const std::string& taxonomy_file) {
  kmarf::Model m = load_inputs(in);
  kmarf::Taxonomy tax = kmarf::parse_taxonomy(kmarf::read_file(taxonomy_file));
  kmarf::TaxonomyReport report = kmarf::validate_against_taxonomy(m, tax);
  for (const std::string& warning : report.warnings) std::cerr << "warning: " << warning << "\n";
  for (const kmarf::Violation& v : report.violations)
    std::cout << "violation: " << v.where << ": " << v.predicate << " (argument "
              << v.argument << " must be " << v.required << ", found " << v.found << ")\n";
  if (!report.violations.empty()) return kExitDomainFailure;
  std::cout << "ok: no violations\n";
  return kExitOk;
}

int cmd_plan(const CommonInputs& in, std::size_t bound, const std::string& out_file, bool trace) {
  kmarf::Model m = load_inputs(in);
  kmarf::PlanResult result = kmarf::find_plan(m, bound);
  if (trace && std::holds_alternative<kmarf::Plan>(result)) {
    std::string lines;
    for (const kmarf::TransitionStep& step : std::get<kmarf::Plan>(result).steps)
      lines += step.trace_line() + "\n";
    write_or_print(out_file, lines);
  } else {
    write_or_print(out_file, kmarf::to_json(result).dump(2) + "\n");
  }
  return std::holds_alternative<kmarf::Plan>(result) ? kExitOk : kExitDomainFailure;
}

int cmd_gen_pddl(const CommonInputs& in, std::string name, const std::string& out_dir,
                 const std::string& solve_cmd) {
  kmarf::Model m = load_inputs(in);
  if (!m.rules)
    throw CLI::ValidationError("gen-pddl", "no rules block in the inputs (use --rules)");
  if (name.empty()) name = std::filesystem::path(in.files.front()).stem().string();

  kmarf::PddlArtifact domain = kmarf::compile_domain(m, *m.rules, name);
  kmarf::PddlArtifact problem = kmarf::compile_problem(m, *m.rules, name);

  std::filesystem::path dir = out_dir.empty() ? "." : out_dir;
  std::filesystem::create_directories(dir);
  std::filesystem::path domain_file = dir / (name + ".domain.pddl");
  std::filesystem::path problem_file = dir / (name + ".problem.pddl");
  write_or_print(domain_file.string(), domain.text);
  write_or_print(problem_file.string(), problem.text);

  nlohmann::json doc{{"domain_uri", domain.uri},
                     {"problem_uri", problem.uri},
                     {"domain_hash", domain.hash},
                     {"problem_hash", problem.hash},
                     {"domain_file", domain_file.string()},
                     {"problem_file", problem_file.string()}};

  if (!solve_cmd.empty()) {
    auto actions =
        kmarf::run_external_solver(solve_cmd, domain_file.string(), problem_file.string());
    if (!actions) {
      doc["solver"] = "error";
      std::cout << doc.dump(2) << "\n";
      std::cerr << "external solver failed to run\n";
      return kExitDomainFailure;
    }
    kmarf::Plan replayed;
    auto divergence = kmarf::cross_validate(m, *m.rules, *actions, &replayed);
    if (divergence) {
      doc["solver"] = "divergence";
      doc["divergence"] = {{"index", divergence->index}, {"reason", divergence->reason}};
      std::cout << doc.dump(2) << "\n";
      return kExitDomainFailure;
    }
    doc["solver"] = "ok";
    doc["solver_plan_length"] = replayed.cost;
  }
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_exec(const CommonInputs& in, const std::string& script_file, std::size_t bound,
             const std::string& expertise_file, const std::string& out_file) {
  kmarf::Model m = load_inputs(in);
  std::vector<ScriptEvent> script = parse_script(kmarf::read_file(script_file));

  kmarf::ExpertiseTable table =
      expertise_file.empty()
          ? kmarf::default_expertise_table()
          : kmarf::ExpertiseTable::from_json(
                nlohmann::json::parse(kmarf::read_file(expertise_file)));
  kmarf::SolverInvocation planner =
      kmarf::dispatch(kmarf::Query{kmarf::QueryKind::ReachGoal, "", {}}, table);
  std::size_t effective_bound = bound ? bound : planner.config.value("bound", kmarf::kDefaultPlanBound);

  kmarf::RunState run = kmarf::start_run("run", std::move(m), effective_bound);
  auto drive = [&run](const ScriptEvent& event) {
    switch (event.kind) {
      case ScriptEvent::Kind::Step:
        kmarf::execute(run);
        if (run.status == kmarf::RunStatus::Replanning) kmarf::replan(run);
        break;
      case ScriptEvent::Kind::Perturb:
        kmarf::perturb(run, event.add, event.del);
        break;
      case ScriptEvent::Kind::Finish:
        kmarf::run_to_completion(run);
        break;
    }
  };
  for (const ScriptEvent& event : script) {
    if (run.status == kmarf::RunStatus::Done || run.status == kmarf::RunStatus::Failed) break;
    drive(event);
  }

  std::string log;
  for (const nlohmann::json& event : run.events) log += event.dump() + "\n";
  log += kmarf::run_summary(run).dump() + "\n";
  write_or_print(out_file, log);
  return run.status == kmarf::RunStatus::Done ? kExitOk : kExitDomainFailure;
}

int cmd_metrics(const CommonInputs& in) {
  kmarf::Model m = load_inputs(in);
  kmarf::TransitionLibrary lib = kmarf::load_library(in.library_dir);
  kmarf::EntityCount count = kmarf::count_entities(m, lib);
  nlohmann::json doc{{"total", count.total},
                     {"reused", count.reused},
                     {"index", kmarf::reusability_index(m, lib)}};
  std::cout << doc.dump(2) << "\n";
  return kExitOk;
}

int cmd_serve(const std::string& store_dir, const std::string& listen) {
  kmarf::KnowledgeBaseStore store(store_dir);
  kmarf::Service service(store);
  auto [host, port] = kmarf::listen_address(listen);
  std::cerr << "kmarf service on " << host << ":" << port << ", store at " << store_dir << "\n";
  if (!service.server().listen(host, port)) {
    std::cerr << "cannot listen on " << host << ":" << port << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knowledge-model planning and PDDL generation"};
  app.require_subcommand(1);

  CommonInputs parse_in, validate_in, plan_in, pddl_in, exec_in, metrics_in;

  auto* parse_cmd = app.add_subcommand("parse", "parse documents and run static checks");
  bool canonical = false;
  add_common(parse_cmd, parse_in);
  parse_cmd->add_flag("--canonical", canonical, "print the canonical form");

  auto* validate_cmd = app.add_subcommand("validate", "validate a model against a taxonomy");
  std::string taxonomy_file;
  add_common(validate_cmd, validate_in);
  validate_cmd->add_option("--taxonomy", taxonomy_file, ".tax file")
      ->required()
      ->check(CLI::ExistingFile);

  auto* plan_cmd = app.add_subcommand("plan", "search for a plan from initial to goal");
  std::size_t plan_bound = kmarf::kDefaultPlanBound;
  std::string plan_out;
  bool plan_trace = false;
  add_common(plan_cmd, plan_in);
  plan_cmd->add_option("--bound", plan_bound, "max expanded states");
  plan_cmd->add_option("--out", plan_out, "write the plan document here");
  plan_cmd->add_flag("--trace", plan_trace, "print hash trace lines instead of JSON");

  auto* pddl_cmd = app.add_subcommand("gen-pddl", "compile domain and problem PDDL files");
  std::string pddl_name, pddl_out, solve_cmd;
  add_common(pddl_cmd, pddl_in);
  pddl_cmd->add_option("--name", pddl_name, "domain name (default: first input stem)");
  pddl_cmd->add_option("--out", pddl_out, "output directory (default .)");
  pddl_cmd->add_option("--solve-cmd", solve_cmd,
                       "external solver command; {domain}/{problem} are substituted; the plan is "
                       "cross-validated");

  auto* exec_cmd = app.add_subcommand("exec", "execute a plan with scripted perturbations");
  std::string script_file, expertise_file, exec_out;
  std::size_t exec_bound = 0;
  add_common(exec_cmd, exec_in);
  exec_cmd->add_option("--script", script_file, "perturbation script")
      ->required()
      ->check(CLI::ExistingFile);
  exec_cmd->add_option("--bound", exec_bound, "max expanded states per (re)plan");
  exec_cmd->add_option("--expertise", expertise_file, "expertise table JSON")
      ->check(CLI::ExistingFile);
  exec_cmd->add_option("--out", exec_out, "write the event log here");

  auto* metrics_cmd = app.add_subcommand("metrics", "reusability index against a library");
  add_common(metrics_cmd, metrics_in, false);
  metrics_cmd->get_option("--library")->required();

  auto* serve_cmd = app.add_subcommand("serve", "HTTP artifact API");
  std::string store_dir = "kmarf_store", listen;
  serve_cmd->add_option("--store", store_dir, "store directory");
  serve_cmd->add_option("--listen", listen, "host:port (default $KMARF_LISTEN or 127.0.0.1:8080)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;  // --help exits 0
  }

  try {
    if (parse_cmd->parsed()) return cmd_parse(parse_in, canonical);
    if (validate_cmd->parsed()) return cmd_validate(validate_in, taxonomy_file);
    if (plan_cmd->parsed()) return cmd_plan(plan_in, plan_bound, plan_out, plan_trace);
    if (pddl_cmd->parsed()) return cmd_gen_pddl(pddl_in, pddl_name, pddl_out, solve_cmd);
    if (exec_cmd->parsed())
      return cmd_exec(exec_in, script_file, exec_bound, expertise_file, exec_out);
    if (metrics_cmd->parsed()) return cmd_metrics(metrics_in);
    if (serve_cmd->parsed()) return cmd_serve(store_dir, listen);
  } catch (const kmarf::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const kmarf::MappingError& e) {
    std::cerr << "mapping error: " << e.what() << "\n";
    return kExitDomainFailure;
  } catch (const kmarf::LibraryError& e) {
    std::cerr << "library error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const kmarf::RuntimeApiError& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return kExitDomainFailure;
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
