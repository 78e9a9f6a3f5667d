#include <doctest.h>

#include "rgl/amr_graph.hpp"
#include "rgl/penman.hpp"
#include "rgl/smatch.hpp"

using namespace rgl;

TEST_CASE("parse minimal graph") {
  AmrGraph g = parse_penman("(d / dog)");
  CHECK(g.nodes.size() == 1);
  CHECK(g.nodes[0].var == "d");
  CHECK(g.nodes[0].concept_name == "dog");
  CHECK(g.edges.empty());
  CHECK(g.root == "d");
  g.validate();
}

TEST_CASE("parse reentrancy") {
  AmrGraph g = parse_penman(
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
  CHECK(g.nodes.size() == 3);
  CHECK(g.edges.size() == 3);
  bool found = false;
  for (const auto& e : g.edges)
    if (e.src == "g" && e.role == "ARG0" && e.dst == "b") found = true;
  CHECK(found);
  CHECK(g.in_degree("b") == 2);
  g.validate();
}

TEST_CASE("parse errors carry kind and offset") {
  CHECK_THROWS_AS(parse_penman("(d / "), PenmanError);
  try {
    parse_penman("(d / ");
  } catch (const PenmanError& e) {
    CHECK(e.kind == PenmanErrorKind::UnbalancedParens);
  }
  try {
    parse_penman("(d / dog :mod )");
  } catch (const PenmanError& e) {
    CHECK(e.kind == PenmanErrorKind::DanglingRole);
    CHECK(e.offset == 9);  // byte of the ':'
  }
  try {
    parse_penman("(d / dog :mod (d / cat))");
  } catch (const PenmanError& e) {
    CHECK(e.kind == PenmanErrorKind::DuplicateVariableDefinition);
  }
  try {
    parse_penman("   \n  ");
  } catch (const PenmanError& e) {
    CHECK(e.kind == PenmanErrorKind::EmptyInput);
  }
  try {
    parse_penman("(d / dog) stray");
  } catch (const PenmanError& e) {
    CHECK(e.kind == PenmanErrorKind::TrailingContent);
  }
}

TEST_CASE("cyclic canonical direction is rejected") {
  CHECK_THROWS_AS(parse_penman("(a / x :r1 (b / y :r2 a))"), PenmanError);
  try {
    parse_penman("(a / x :r1 (b / y :r2 a))");
  } catch (const PenmanError& e) {
    CHECK(e.kind == PenmanErrorKind::CyclicGraph);
  }
  // the inverse-role spelling of the same relation is fine
  AmrGraph g = parse_penman("(a / x :r1 (b / y :r2-of a))");
  CHECK(g.edges.size() == 2);
  g.validate();
}

TEST_CASE("inverse roles normalize to canonical direction") {
  AmrGraph g = parse_penman("(a / dog :ARG0-of (b / bark-01))");
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].src == "b");
  CHECK(g.edges[0].role == "ARG0");
  CHECK(g.edges[0].dst == "a");
  CHECK(g.root == "a");
}

TEST_CASE("serialize minimal and deterministic") {
  AmrGraph g = parse_penman("(d / dog)");
  CHECK(serialize_penman(g) == "(d / dog)");
  AmrGraph w = parse_penman(
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
  std::string s1 = serialize_penman(w);
  std::string s2 = serialize_penman(w);
  CHECK(s1 == s2);
}

TEST_CASE("round trip is smatch identical") {
  const char* texts[] = {
      "(d / dog)",
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
      "(a / dog :ARG0-of (b / bark-01) :quant 3)",
      "(p / person :name (n / name :op1 \"New York\") :polarity -)",
  };
  for (const char* text : texts) {
    AmrGraph g = parse_penman(text);
    AmrGraph h = parse_penman(serialize_penman(g));
    CHECK(smatch(h, g).f1 == doctest::Approx(1.0));
  }
}

TEST_CASE("to_triples counts") {
  AmrGraph d = parse_penman("(d / dog)");
  TripleSet td = to_triples(d);
  CHECK(td.size() == 2);  // instance + TOP

  AmrGraph w = parse_penman(
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
  TripleSet tw = to_triples(w);
  CHECK(tw.size() == 7);  // 3 instances + 3 relations + TOP

  // |triples| = nodes + edges + attributes + 1
  AmrGraph a = parse_penman("(a / dog :ARG0-of (b / bark-01) :quant 3)");
  TripleSet ta = to_triples(a);
  CHECK(ta.size() == a.nodes.size() + a.edges.size() + a.attributes.size() + 1);
}

TEST_CASE("inverse-role input yields the same triples as canonical") {
  TripleSet t1 = to_triples(parse_penman("(a / dog :ARG0-of (b / bark-01))"));
  // the canonical-direction graph built by hand
  AmrGraph manual;
  manual.nodes = {{"a", "dog"}, {"b", "bark-01"}};
  manual.edges = {{"b", "ARG0", "a", 0}};
  manual.root = "a";
  TripleSet t2 = to_triples(manual);
  REQUIRE(t1.size() == t2.size());
  for (const auto& t : t2.triples) {
    bool found = false;
    for (const auto& u : t1.triples) found |= t == u;
    CHECK(found);
  }
}

TEST_CASE("metadata preserved as side map") {
  AmrGraph g = parse_penman("# ::id x1\n# ::snt the dog\n(d / dog)");
  REQUIRE(g.meta("id") != nullptr);
  CHECK(*g.meta("id") == "x1");
  REQUIRE(g.meta("snt") != nullptr);
  CHECK(*g.meta("snt") == "the dog");
}

TEST_CASE("validate rejects broken graphs") {
  AmrGraph g;
  g.root = "a";
  CHECK_THROWS_AS(g.validate(), GraphError);

  g.nodes = {{"a", "x"}, {"b", "y"}};
  g.root = "a";
  CHECK_THROWS_AS(g.validate(), GraphError);  // b disconnected

  g.edges = {{"a", "r", "b", 0}, {"a", "r", "b", 1}};
  CHECK_THROWS_AS(g.validate(), GraphError);  // duplicate edge
}
