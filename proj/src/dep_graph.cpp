#include "ftrans/dep_graph.hpp"

#include <algorithm>
#include <queue>

#include "ftrans/error.hpp"

namespace ftrans {

void DependencyGraph::add_node(const std::string& name) { nodes.insert(name); }

void DependencyGraph::add_edge(const std::string& from, const std::string& to,
                               const std::string& kind) {
  if (from == to) return;
  if (!nodes.count(from) || !nodes.count(to)) {
    throw ContractViolation("edge endpoint is not a node: " + from + " -> " + to);
  }
  edges.emplace(std::make_pair(from, to), kind);
}

std::vector<std::string> DependencyGraph::dependencies(const std::string& name) const {
  std::vector<std::string> out;
  for (auto it = edges.lower_bound({name, std::string()});
       it != edges.end() && it->first.first == name; ++it) {
    out.push_back(it->first.second);
  }
  return out;
}

std::size_t DependencyGraph::out_degree(const std::string& name) const {
  return dependencies(name).size();
}

int TranslationOrder::group_of(const std::string& name) const {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (std::binary_search(groups[i].begin(), groups[i].end(), name)) return static_cast<int>(i);
  }
  return -1;
}

DependencyGraph build_graph(const std::vector<fortran::SourceUnit>& units) {
  DependencyGraph g;
  std::map<std::string, const fortran::SourceUnit*> by_name;
  for (const auto& u : units) {
    auto [it, fresh] = by_name.emplace(u.name, &u);
    if (!fresh) {
      auto where = [](const fortran::SourceUnit& x) {
        return x.file + ":" + std::to_string(x.lines.start);
      };
      throw DuplicateUnitName(u.name, where(*it->second), where(u));
    }
    g.add_node(u.name);
    g.unit_ids[u.name] = u.id;
  }
  for (const auto& u : units) {
    for (const auto& r : u.references) {
      auto it = by_name.find(r);
      if (it == by_name.end()) {
        g.external[u.name].insert(r);
      } else {
        g.add_edge(u.name, r, std::string(fortran::reference_kind(it->second->kind)));
      }
    }
  }
  return g;
}

std::vector<std::vector<std::string>> strongly_connected_components(const DependencyGraph& g) {
  std::vector<std::string> names(g.nodes.begin(), g.nodes.end());
  std::map<std::string, int> index_of;
  for (std::size_t i = 0; i < names.size(); ++i) index_of[names[i]] = static_cast<int>(i);
  std::vector<std::vector<int>> adj(names.size());
  for (const auto& [e, kind] : g.edges) adj[index_of[e.first]].push_back(index_of[e.second]);

  const int n = static_cast<int>(names.size());
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack;
  std::vector<std::vector<std::string>> out;
  int counter = 0;

  // Iterative Tarjan: frames of (node, next child position).
  std::vector<std::pair<int, std::size_t>> call;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      auto& [v, pos] = call.back();
      if (pos < adj[v].size()) {
        int w = adj[v][pos++];
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<std::string> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(names[w]);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
      int finished = v;
      call.pop_back();
      if (!call.empty()) {
        int parent = call.back().first;
        low[parent] = std::min(low[parent], low[finished]);
      }
    }
  }
  return out;
}

TranslationOrder order_for_translation(const DependencyGraph& g) {
  auto comps = strongly_connected_components(g);
  std::map<std::string, std::size_t> comp_of;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    for (const auto& m : comps[i]) comp_of[m] = i;
  }
  // dependents[c] = groups that depend on c; indegree counts distinct dependencies
  std::vector<std::set<std::size_t>> dependents(comps.size());
  std::vector<std::set<std::size_t>> deps(comps.size());
  for (const auto& [e, kind] : g.edges) {
    std::size_t from = comp_of[e.first], to = comp_of[e.second];
    if (from == to) continue;
    deps[from].insert(to);
    dependents[to].insert(from);
  }
  std::vector<std::size_t> indegree(comps.size());
  using Key = std::pair<std::string, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<Key>> ready;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    indegree[i] = deps[i].size();
    if (indegree[i] == 0) ready.push({comps[i].front(), i});
  }
  TranslationOrder order;
  while (!ready.empty()) {
    std::size_t c = ready.top().second;
    ready.pop();
    order.groups.push_back(comps[c]);
    for (std::size_t d : dependents[c]) {
      if (--indegree[d] == 0) ready.push({comps[d].front(), d});
    }
  }
  return order;
}

namespace {

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string to_dot(const DependencyGraph& g) {
  std::string out = "digraph deps {\n";
  for (const auto& n : g.nodes) out += "  " + quoted(n) + ";\n";
  for (const auto& [e, kind] : g.edges) {
    out += "  " + quoted(e.first) + " -> " + quoted(e.second) + ";\n";
  }
  return out + "}\n";
}

nlohmann::json graph_json(const DependencyGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    auto it = g.unit_ids.find(n);
    nodes.push_back({{"name", n}, {"id", it == g.unit_ids.end() ? n : it->second}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [e, kind] : g.edges) {
    edges.push_back({{"from", e.first}, {"to", e.second}, {"kind", kind}});
  }
  nlohmann::json external = nlohmann::json::object();
  for (const auto& [n, names] : g.external) external[n] = names;
  return {{"nodes", nodes}, {"edges", edges}, {"external", external}};
}

DependencyGraph graph_from_json(const nlohmann::json& j) {
  DependencyGraph g;
  for (const auto& n : j.at("nodes")) {
    g.add_node(n.at("name"));
    g.unit_ids[n.at("name")] = n.at("id");
  }
  for (const auto& e : j.at("edges")) g.add_edge(e.at("from"), e.at("to"), e.at("kind"));
  if (j.contains("external")) {
    for (const auto& [n, names] : j.at("external").items()) {
      g.external[n] = names.get<std::set<std::string>>();
    }
  }
  return g;
}

std::string format_order(const TranslationOrder& order) {
  std::string out;
  for (const auto& group : order.groups) {
    if (group.size() == 1) {
      out += group.front();
    } else {
      out += "{";
      for (std::size_t i = 0; i < group.size(); ++i) {
        if (i) out += ", ";
        out += group[i];
      }
      out += "}";
    }
    out += "\n";
  }
  return out;
}

}  // namespace ftrans
