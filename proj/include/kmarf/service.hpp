#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "kmarf/pddl.hpp"
#include "kmarf/pddl_check.hpp"
#include "kmarf/runtime.hpp"
#include "kmarf/store.hpp"

namespace kmarf {

// REST front end over the knowledge base store and the run registry.
//
//   PUT  /models/{name}/states       .kmf text -> 201/200, 422 on bad input
//   PUT  /models/{name}/transitions
//   PUT  /models/{name}/rules
//   POST /models/{name}/pddl         -> {"domain_uri","problem_uri", ...}
//   POST /models/{name}/plan         -> plan or failure document
//   GET  /artifacts/{hash}           -> stored bytes, bit-exact
//   POST /runs                       {"model": name, "bound"?} -> {"run_id"}
//   POST /runs/{id}/step             execute (auto-replans on mismatch)
//   POST /runs/{id}/perturb          {"add": [pred...], "delete": [pred...]}
//   GET  /runs/{id}                  run summary + event log
//
// Formats are documented byte-exactly in docs/api.md.
class Service {
 public:
  explicit Service(KnowledgeBaseStore& store) : store_(store) { wire(); }

  httplib::Server& server() { return server_; }

  // Parse predicates from a JSON array of .kmf predicate texts.
  static std::vector<Predicate> parse_predicate_list(const nlohmann::json& doc) {
    std::string block = "state x { ";
    for (const auto& item : doc) block += item.get<std::string>() + ". ";
    block += "}";
    Model m = parse_model(block);
    const State& s = m.states.at("x");
    return std::vector<Predicate>(s.predicates.begin(), s.predicates.end());
  }

 private:
  void wire() {
    server_.Put(R"(/models/([A-Za-z0-9_-]+)/(states|transitions|rules))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  put_document(req, res);
                });
    server_.Post(R"(/models/([A-Za-z0-9_-]+)/pddl)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   generate_pddl(req, res);
                 });
    server_.Post(R"(/models/([A-Za-z0-9_-]+)/plan)",
                 [this](const httplib::Request& req, httplib::Response& res) { plan(req, res); });
    server_.Get(R"(/artifacts/([0-9a-f]{64}))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  std::lock_guard<std::mutex> lock(mutex_);
                  auto bytes = store_.artifact(req.matches[1]);
                  if (!bytes) return error(res, 404, "unknown artifact");
                  res.set_content(*bytes, "text/plain");
                });
    server_.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
      create_run(req, res);
    });
    server_.Post(R"(/runs/([A-Za-z0-9_-]+)/step)",
                 [this](const httplib::Request& req, httplib::Response& res) { step(req, res); });
    server_.Post(R"(/runs/([A-Za-z0-9_-]+)/perturb)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   perturb_run(req, res);
                 });
    server_.Get(R"(/runs/([A-Za-z0-9_-]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  std::lock_guard<std::mutex> lock(mutex_);
                  auto it = runs_.find(req.matches[1]);
                  if (it == runs_.end()) return error(res, 404, "unknown run");
                  reply(res, 200, describe(it->second));
                });
  }

  static void error(httplib::Response& res, int status, const std::string& message,
                    const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json doc = extra;
    doc["error"] = message;
    res.status = status;
    res.set_content(doc.dump(2) + "\n", "application/json");
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& doc) {
    res.status = status;
    res.set_content(doc.dump(2) + "\n", "application/json");
  }

  void put_document(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string model = req.matches[1];
    const std::string kind_name = req.matches[2];
    DocKind kind = kind_name == "states" ? DocKind::States
                   : kind_name == "transitions" ? DocKind::Transitions
                                                : DocKind::Rules;
    try {
      KnowledgeBaseStore::PutResult result = store_.put_document(model, kind, req.body);
      reply(res, result.created ? 201 : 200,
            {{"model", model}, {"document", kind_name}, {"changed", result.changed}});
    } catch (const ParseError& e) {
      error(res, 422, e.what(), {{"line", e.line}, {"column", e.column}});
    }
  }

  void generate_pddl(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string name = req.matches[1];
    if (!store_.model_exists(name)) return error(res, 404, "unknown model " + name);
    try {
      Model m = store_.assemble(name, {DocKind::States, DocKind::Transitions, DocKind::Rules});
      if (!m.has_endpoints())
        throw IncompleteModel("model " + name + " has no initial/goal designations");
      PddlArtifact domain = compile_domain(m, *m.rules, name);
      PddlArtifact problem = compile_problem(m, *m.rules, name);
      store_.put_artifact(domain.text);
      store_.put_artifact(problem.text);
      reply(res, 200, {{"domain_uri", domain.uri},
                       {"problem_uri", problem.uri},
                       {"domain_hash", domain.hash},
                       {"problem_hash", problem.hash}});
    } catch (const IncompleteModel& e) {
      error(res, 409, e.what());
    } catch (const ParseError& e) {
      error(res, 422, e.what());
    } catch (const MappingError& e) {
      error(res, 422, e.what(), {{"where", e.where}, {"construct", e.construct}});
    }
  }

  void plan(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string name = req.matches[1];
    if (!store_.model_exists(name)) return error(res, 404, "unknown model " + name);
    try {
      Model m = store_.assemble(name, {DocKind::States, DocKind::Transitions});
      if (!m.has_endpoints())
        throw IncompleteModel("model " + name + " has no initial/goal designations");
      std::size_t bound = kDefaultPlanBound;
      if (!req.body.empty()) {
        nlohmann::json body = nlohmann::json::parse(req.body);
        bound = body.value("bound", bound);
      }
      reply(res, 200, to_json(find_plan(m, bound)));
    } catch (const IncompleteModel& e) {
      error(res, 409, e.what());
    } catch (const ParseError& e) {
      error(res, 422, e.what());
    } catch (const nlohmann::json::exception& e) {
      error(res, 422, std::string("bad request body: ") + e.what());
    }
  }

  void create_run(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mutex_);
    try {
      nlohmann::json body = nlohmann::json::parse(req.body);
      const std::string model = body.at("model").get<std::string>();
      if (!store_.model_exists(model)) return error(res, 404, "unknown model " + model);
      Model m = store_.assemble(model, {DocKind::States, DocKind::Transitions});
      std::size_t bound = body.value("bound", kDefaultPlanBound);
      std::string id = "r" + std::to_string(++run_counter_);
      RunState run = start_run(id, std::move(m), bound);
      auto [it, inserted] = runs_.emplace(id, std::move(run));
      (void)inserted;
      nlohmann::json doc = describe(it->second);
      doc["run_id"] = id;
      reply(res, 201, doc);
    } catch (const IncompleteModel& e) {
      error(res, 409, e.what());
    } catch (const RuntimeApiError& e) {
      error(res, 409, e.what());
    } catch (const ParseError& e) {
      error(res, 422, e.what());
    } catch (const nlohmann::json::exception& e) {
      error(res, 422, std::string("bad request body: ") + e.what());
    }
  }

  void step(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = runs_.find(req.matches[1]);
    if (it == runs_.end()) return error(res, 404, "unknown run");
    RunState& run = it->second;
    try {
      std::size_t before = run.events.size();
      execute(run);
      if (run.status == RunStatus::Replanning) replan(run);
      nlohmann::json doc = describe(run);
      nlohmann::json fresh = nlohmann::json::array();
      for (std::size_t i = before; i < run.events.size(); ++i) fresh.push_back(run.events[i]);
      doc["events"] = fresh;
      reply(res, 200, doc);
    } catch (const RuntimeApiError& e) {
      error(res, 409, e.what());
    }
  }

  void perturb_run(const httplib::Request& req, httplib::Response& res) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = runs_.find(req.matches[1]);
    if (it == runs_.end()) return error(res, 404, "unknown run");
    try {
      nlohmann::json body = nlohmann::json::parse(req.body);
      std::vector<Predicate> add =
          parse_predicate_list(body.value("add", nlohmann::json::array()));
      std::vector<Predicate> del =
          parse_predicate_list(body.value("delete", nlohmann::json::array()));
      perturb(it->second, add, del);
      reply(res, 200, describe(it->second));
    } catch (const RuntimeApiError& e) {
      error(res, 409, e.what());
    } catch (const ParseError& e) {
      error(res, 422, e.what());
    } catch (const nlohmann::json::exception& e) {
      error(res, 422, std::string("bad request body: ") + e.what());
    }
  }

  static nlohmann::json describe(const RunState& run) {
    nlohmann::json doc = run_summary(run);
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : run.events) events.push_back(e);
    doc["events"] = events;
    return doc;
  }

  KnowledgeBaseStore& store_;
  httplib::Server server_;
  std::mutex mutex_;
  std::map<std::string, RunState> runs_;
  std::size_t run_counter_ = 0;
};

// Listen address: "host:port", defaulting to the KMARF_LISTEN environment
// variable, then 127.0.0.1:8080.
inline std::pair<std::string, int> listen_address(const std::string& override_value = "") {
  std::string value = override_value;
  if (value.empty()) {
    const char* env = std::getenv("KMARF_LISTEN");
    value = env ? env : "127.0.0.1:8080";
  }
  std::size_t colon = value.rfind(':');
  if (colon == std::string::npos) return {value, 8080};
  return {value.substr(0, colon), std::stoi(value.substr(colon + 1))};
}

}  // namespace kmarf
