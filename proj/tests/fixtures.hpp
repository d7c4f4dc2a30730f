// Shared test fixtures: bundled scenario loading and the one-passenger
// mini scenario.
#pragma once

#include <filesystem>
#include <string>

#include "kmarf/library.hpp"
#include "kmarf/parser.hpp"

namespace fixtures {

inline const std::filesystem::path kSourceDir = KMARF_SOURCE_DIR;

inline kmarf::Model load_scenario(const std::string& file) {
  kmarf::Model m = kmarf::parse_model(kmarf::read_file(kSourceDir / "scenarios" / file));
  kmarf::merge_library(m, kmarf::load_library(kSourceDir / "library"));
  return m;
}

inline kmarf::TransformationRules transport_rules() {
  return *kmarf::parse_model(kmarf::read_file(kSourceDir / "scenarios" / "transport.rules")).rules;
}

inline kmarf::Model mini_scenario() {
  kmarf::Model m = kmarf::parse_model(
      "state s0 {\n"
      "  is_transport_agent(bus1). is_poi(poi1). is_poi(poi2). route(poi1, poi2).\n"
      "  at(bus1, poi1). capacity(bus1, 1).\n"
      "  is_transportable(p1). at(p1, poi1). waiting(p1, min(2)).\n"
      "}\n"
      "state g { at(p1, poi2). }\n"
      "initial s0. goal g.\n");
  kmarf::merge_library(m, kmarf::load_library(kSourceDir / "library"));
  return m;
}

}  // namespace fixtures
