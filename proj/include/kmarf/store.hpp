#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kmarf/digest.hpp"
#include "kmarf/library.hpp"
#include "kmarf/parser.hpp"

namespace kmarf {

// A model operation was requested before all required documents were
// uploaded.
struct IncompleteModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DocKind { States, Transitions, Rules };

inline const char* doc_file_name(DocKind kind) {
  switch (kind) {
    case DocKind::States: return "states.kmf";
    case DocKind::Transitions: return "transitions.kmf";
    case DocKind::Rules: return "rules.kmf";
  }
  return "?";
}

// Directory-backed knowledge base: per-model documents (states, transitions,
// rules as .kmf text) plus a content-addressed artifact store. Artifacts are
// immutable; documents are named mutable references. Every stored document
// parses — uploads are validated before they land on disk.
class KnowledgeBaseStore {
 public:
  explicit KnowledgeBaseStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_ / "models");
    std::filesystem::create_directories(dir_ / "artifacts");
  }

  const std::filesystem::path& dir() const { return dir_; }

  struct PutResult {
    bool created = false;  // no previous revision existed
    bool changed = false;  // bytes differ from the previous revision
  };

  // Validates, then stores. The document must contain only blocks of its
  // kind (states documents may also carry initial/goal designations).
  PutResult put_document(const std::string& model, DocKind kind, const std::string& text) {
    validate_document(kind, text);
    std::filesystem::path file = dir_ / "models" / model / doc_file_name(kind);
    PutResult result;
    std::optional<std::string> previous = read_optional(file);
    result.created = !previous.has_value();
    result.changed = !previous || *previous != text;
    if (result.changed) {
      std::filesystem::create_directories(file.parent_path());
      write_file(file, text);
    }
    return result;
  }

  std::optional<std::string> document(const std::string& model, DocKind kind) const {
    return read_optional(dir_ / "models" / model / doc_file_name(kind));
  }

  bool model_exists(const std::string& model) const {
    return std::filesystem::is_directory(dir_ / "models" / model);
  }

  std::vector<std::string> models() const {
    std::vector<std::string> out;
    for (const auto& entry : std::filesystem::directory_iterator(dir_ / "models"))
      if (entry.is_directory()) out.push_back(entry.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
  }

  // Merge the stored documents into a Model. `need` lists the document kinds
  // the requested operation cannot do without.
  Model assemble(const std::string& model, const std::vector<DocKind>& need) const {
    if (!model_exists(model)) throw IncompleteModel("unknown model " + model);
    std::vector<Document> docs;
    for (DocKind kind : {DocKind::States, DocKind::Transitions, DocKind::Rules}) {
      auto text = document(model, kind);
      if (text) {
        docs.push_back(parse_document(*text));
        continue;
      }
      for (DocKind wanted : need)
        if (wanted == kind)
          throw IncompleteModel("model " + model + " has no " +
                                std::string(doc_file_name(kind)) + " document");
    }
    return assemble_model(docs);
  }

  // Content-addressed artifacts. Storing the same bytes twice is a no-op;
  // a stored hash can never be overwritten.
  std::string put_artifact(const std::string& bytes) {
    std::string hash = sha256_hex(bytes);
    std::filesystem::path file = dir_ / "artifacts" / hash;
    if (!std::filesystem::exists(file)) write_file(file, bytes);
    return hash;
  }

  std::optional<std::string> artifact(const std::string& hash) const {
    if (hash.find('/') != std::string::npos || hash.find("..") != std::string::npos)
      return std::nullopt;
    return read_optional(dir_ / "artifacts" / hash);
  }

 private:
  static void validate_document(DocKind kind, const std::string& text) {
    Document doc = parse_document(text);
    auto reject = [](bool bad, const char* what) {
      if (bad) throw ParseError(1, 1, std::string("document may not contain ") + what);
    };
    switch (kind) {
      case DocKind::States:
        reject(!doc.transitions.empty(), "transitions");
        reject(doc.rules.has_value(), "a rules block");
        break;
      case DocKind::Transitions:
        reject(!doc.states.empty(), "states");
        reject(doc.initial || doc.goal, "initial/goal designations");
        reject(doc.rules.has_value(), "a rules block");
        break;
      case DocKind::Rules:
        reject(!doc.states.empty(), "states");
        reject(!doc.transitions.empty(), "transitions");
        reject(doc.initial || doc.goal, "initial/goal designations");
        reject(!doc.rules.has_value(), "anything but a rules block");
        break;
    }
  }

  static std::optional<std::string> read_optional(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  }

  static void write_file(const std::filesystem::path& file, const std::string& bytes) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("cannot write " + file.string());
  }

  std::filesystem::path dir_;
};

}  // namespace kmarf
