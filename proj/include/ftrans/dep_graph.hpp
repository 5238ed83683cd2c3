#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ftrans/fortran_units.hpp"

namespace ftrans {

// Nodes are canonical unit names (unique across a codebase). An edge
// (from, to) means `from` depends on `to`.
struct DependencyGraph {
  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, std::string> edges;  // -> reference kind
  std::map<std::string, std::string> unit_ids;                      // name -> "path::name"
  std::map<std::string, std::set<std::string>> external;            // unresolved names

  void add_node(const std::string& name);
  // Self-edges are dropped. Both endpoints must already be nodes.
  void add_edge(const std::string& from, const std::string& to, const std::string& kind = "call");

  std::vector<std::string> dependencies(const std::string& name) const;
  std::size_t out_degree(const std::string& name) const;
};

struct TranslationOrder {
  // Dependencies first. Members of each group are sorted by name.
  std::vector<std::vector<std::string>> groups;

  // Index of the group holding `name`, or -1.
  int group_of(const std::string& name) const;
};

// Throws DuplicateUnitName when two units share a canonical name.
DependencyGraph build_graph(const std::vector<fortran::SourceUnit>& units);

// Strongly connected components (Tarjan), each sorted, in no particular order.
std::vector<std::vector<std::string>> strongly_connected_components(const DependencyGraph& g);

// Kahn's algorithm over the SCC condensation; ready groups are released in
// ascending order of their smallest member name.
TranslationOrder order_for_translation(const DependencyGraph& g);

std::string to_dot(const DependencyGraph& g);

// {"nodes": [{name, id}], "edges": [{from, to, kind}], "external": {...}}
nlohmann::json graph_json(const DependencyGraph& g);
DependencyGraph graph_from_json(const nlohmann::json& j);

// One group per line; multi-member groups are written as "{a, b}".
std::string format_order(const TranslationOrder& order);

}  // namespace ftrans
