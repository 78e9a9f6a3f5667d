#include "rgl/amr_graph.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace rgl {

bool AmrGraph::has_var(const std::string& var) const {
  return find_node(var) != nullptr;
}

const Node* AmrGraph::find_node(const std::string& var) const {
  for (const auto& n : nodes)
    if (n.var == var) return &n;
  return nullptr;
}

const std::string* AmrGraph::meta(const std::string& key) const {
  for (const auto& [k, v] : metadata)
    if (k == key) return &v;
  return nullptr;
}

int AmrGraph::in_degree(const std::string& var) const {
  int d = 0;
  for (const auto& e : edges)
    if (e.dst == var) ++d;
  return d;
}

void AmrGraph::validate() const {
  if (nodes.empty()) throw GraphError("graph has no nodes");
  if (root.empty()) throw GraphError("graph has no root");
  if (!has_var(root)) throw GraphError("root variable not among nodes: " + root);

  std::set<std::string> vars;
  for (const auto& n : nodes) {
    if (!vars.insert(n.var).second)
      throw GraphError("duplicate node variable: " + n.var);
  }
  for (const auto& e : edges) {
    if (!vars.count(e.src)) throw GraphError("edge source unknown: " + e.src);
    if (!vars.count(e.dst)) throw GraphError("edge target unknown: " + e.dst);
  }
  for (const auto& a : attributes) {
    if (!vars.count(a.src))
      throw GraphError("attribute source unknown: " + a.src);
  }

  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (const auto& e : edges) {
    if (!seen.insert({e.src, e.role, e.dst}).second)
      throw GraphError("duplicate edge: " + e.src + " :" + e.role + " " + e.dst);
  }

  // connectivity from root, edges usable in either direction
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  std::set<std::string> reached;
  std::vector<std::string> stack{root};
  while (!stack.empty()) {
    std::string v = stack.back();
    stack.pop_back();
    if (!reached.insert(v).second) continue;
    for (const auto& u : adj[v])
      if (!reached.count(u)) stack.push_back(u);
  }
  if (reached.size() != vars.size())
    throw GraphError("graph not connected from root");

  // acyclicity over canonical edge direction (iterative coloring)
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& e : edges) out[e.src].push_back(e.dst);
  std::map<std::string, int> color;  // 0 new, 1 open, 2 done
  for (const auto& n : nodes) {
    if (color[n.var] != 0) continue;
    std::vector<std::pair<std::string, std::size_t>> st{{n.var, 0}};
    color[n.var] = 1;
    while (!st.empty()) {
      auto& [v, idx] = st.back();
      auto& succ = out[v];
      if (idx < succ.size()) {
        const std::string& u = succ[idx++];
        if (color[u] == 1) throw GraphError("cycle through: " + u);
        if (color[u] == 0) {
          color[u] = 1;
          st.push_back({u, 0});
        }
      } else {
        color[v] = 2;
        st.pop_back();
      }
    }
  }
}

bool AmrGraph::is_valid() const {
  try {
    validate();
    return true;
  } catch (const GraphError&) {
    return false;
  }
}

std::vector<std::string> TripleSet::variables() const {
  std::set<std::string> vars;
  for (const auto& t : triples) {
    vars.insert(t.a);
    if (t.kind == TripleKind::Relation) vars.insert(t.b);
  }
  return {vars.begin(), vars.end()};
}

TripleSet to_triples(const AmrGraph& g) {
  TripleSet ts;
  ts.triples.reserve(g.nodes.size() + g.edges.size() + g.attributes.size() + 1);
  for (const auto& n : g.nodes)
    ts.triples.push_back({TripleKind::Instance, n.var, "instance", n.concept_name});
  for (const auto& e : g.edges)
    ts.triples.push_back({TripleKind::Relation, e.src, e.role, e.dst});
  for (const auto& a : g.attributes)
    ts.triples.push_back({TripleKind::Attribute, a.src, a.role, a.value});
  ts.triples.push_back({TripleKind::Attribute, g.root, "TOP", "top"});
  return ts;
}

}  // namespace rgl
