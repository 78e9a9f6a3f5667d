#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rgl {

// A concept node. `var` is the penman variable, `concept_name` the concept
// it instantiates ("concept" itself is a C++20 keyword).
struct Node {
  std::string var;
  std::string concept_name;
};

// Role edge in canonical (non-inverted) direction. `seq` is the position of
// the relation in annotation order; linearization visits children by it.
struct Edge {
  std::string src;
  std::string role;
  std::string dst;
  int seq = 0;
};

// Constant-valued relation (numbers, quoted strings, "-", ...).
struct Attribute {
  std::string src;
  std::string role;
  std::string value;
  int seq = 0;
};

// Ordered "# ::key value" metadata lines attached to a block.
using Metadata = std::vector<std::pair<std::string, std::string>>;

struct GraphError : std::runtime_error {
  explicit GraphError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rooted, labeled, possibly reentrant directed graph. Edges are stored in
// canonical direction (inverse "-of" roles are normalized away at parse
// time); acyclicity and connectivity are over that canonical edge set.
// Instances are immutable by convention once built and validated.
class AmrGraph {
 public:
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<Attribute> attributes;
  std::string root;
  Metadata metadata;

  bool has_var(const std::string& var) const;
  const Node* find_node(const std::string& var) const;
  const std::string* meta(const std::string& key) const;

  // Number of canonical edges pointing at `var`.
  int in_degree(const std::string& var) const;

  // Checks every structural invariant; throws GraphError naming the first
  // violated one. Valid graphs: exactly one root present in nodes, all edge
  // endpoints and attribute sources known, connected from the root ignoring
  // edge direction, no duplicate (src, role, dst), acyclic canonically.
  void validate() const;

  bool is_valid() const;
};

enum class TripleKind { Instance, Relation, Attribute };

struct Triple {
  TripleKind kind;
  std::string a;     // variable (all kinds)
  std::string role;  // "instance" for Instance triples
  std::string b;     // variable for Relation, constant otherwise

  bool operator==(const Triple&) const = default;
};

struct TripleSet {
  std::vector<Triple> triples;

  std::size_t size() const { return triples.size(); }
  std::vector<std::string> variables() const;  // sorted, unique
};

// Smatch view of a graph: one Instance triple per node, one Relation per
// canonical edge, one Attribute per attribute, plus (root, TOP, "top").
TripleSet to_triples(const AmrGraph& g);

}  // namespace rgl
