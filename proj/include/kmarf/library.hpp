#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kmarf/digest.hpp"
#include "kmarf/model.hpp"
#include "kmarf/parser.hpp"

namespace kmarf {

struct LibraryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LibraryEntry {
  std::string name;
  std::string file;
  std::string provenance;
  std::string sha256;
  TransitionSpec spec;
};

// The reusable transition library: parsed entries plus the annotated
// predicate vocabulary, both listed in manifest.json. Checksums are verified
// at load.
struct TransitionLibrary {
  std::vector<LibraryEntry> entries;
  std::set<std::string> vocabulary;

  const LibraryEntry* find(const std::string& name) const {
    for (const LibraryEntry& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

inline TransitionLibrary load_library(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw LibraryError("bad library manifest: " + std::string(e.what()));
  }
  TransitionLibrary lib;
  for (const auto& item : manifest.at("entries")) {
    LibraryEntry entry;
    entry.name = item.at("name").get<std::string>();
    entry.file = item.at("file").get<std::string>();
    entry.provenance = item.value("provenance", "");
    entry.sha256 = item.at("sha256").get<std::string>();
    std::string text = read_file(dir / entry.file);
    if (sha256_hex(text) != entry.sha256)
      throw LibraryError("checksum mismatch for library entry " + entry.name);
    Document doc = parse_document(text);
    if (doc.transitions.size() != 1 || doc.transitions[0].name != entry.name)
      throw LibraryError("library file " + entry.file + " must define exactly transition " +
                         entry.name);
    entry.spec = doc.transitions[0];
    lib.entries.push_back(std::move(entry));
  }
  for (const auto& f : manifest.at("vocabulary")) lib.vocabulary.insert(f.get<std::string>());
  // The vocabulary must cover every functor the entries use.
  for (const LibraryEntry& e : lib.entries) {
    std::set<std::string> used;
    for (const Predicate& p : e.spec.precondition) used.insert(p.functor);
    for (const ActionItem& a : e.spec.action) used.insert(a.pred.functor);
    for (const std::string& f : used)
      if (!lib.vocabulary.count(f))
        throw LibraryError("library vocabulary is missing functor " + f);
  }
  return lib;
}

// Merge library transitions into a model. A scenario transition with the
// same name must be structurally identical to the library entry.
inline void merge_library(Model& m, const TransitionLibrary& lib) {
  for (const LibraryEntry& e : lib.entries) {
    auto it = m.transitions.find(e.name);
    if (it == m.transitions.end()) {
      m.transitions.emplace(e.name, e.spec);
    } else if (!(it->second == e.spec)) {
      throw LibraryError("transition " + e.name + " conflicts with the library entry");
    }
  }
}

// --- reusability index -------------------------------------------------------
//
// Entity counting convention (one entity each):
//   - named state
//   - named transition
//   - distinct predicate functor used anywhere in the model
//   - route vertex: distinct term appearing as an argument of a route/2 fact
//   - route edge: distinct route/2 fact
// An entity is reused iff it is structurally identical to a library entry:
// transitions must match a library entry of the same name exactly; functors
// are reused iff they are in the library vocabulary. States, vertices and
// edges are scenario-specific and never reused.

struct EntityCount {
  std::size_t total = 0;
  std::size_t reused = 0;
};

inline EntityCount count_entities(const Model& m, const TransitionLibrary& lib) {
  EntityCount count;
  count.total += m.states.size();

  for (const auto& [name, t] : m.transitions) {
    ++count.total;
    const LibraryEntry* entry = lib.find(name);
    if (entry && entry->spec == t) ++count.reused;
  }

  std::set<std::string> functors;
  std::set<Term> vertices;
  std::set<Predicate> edges;
  // Route declarations are the ground route/2 facts in states; route
  // patterns inside transitions only contribute the functor.
  for (const auto& [name, s] : m.states) {
    for (const Predicate& p : s.predicates) {
      functors.insert(p.functor);
      if (p.functor == "route" && p.args.size() == 2) {
        edges.insert(p);
        vertices.insert(p.args[0]);
        vertices.insert(p.args[1]);
      }
    }
  }
  for (const auto& [name, t] : m.transitions) {
    for (const Predicate& p : t.precondition) functors.insert(p.functor);
    for (const ActionItem& a : t.action) functors.insert(a.pred.functor);
  }
  for (const std::string& f : functors) {
    ++count.total;
    if (lib.vocabulary.count(f)) ++count.reused;
  }
  count.total += vertices.size();
  count.total += edges.size();
  return count;
}

// Reused entities over total entities, in [0, 1]. Undefined on an empty
// scenario.
inline double reusability_index(const Model& m, const TransitionLibrary& lib) {
  EntityCount count = count_entities(m, lib);
  if (count.total == 0) throw std::domain_error("reusability index undefined: no entities");
  return static_cast<double>(count.reused) / static_cast<double>(count.total);
}

}  // namespace kmarf
