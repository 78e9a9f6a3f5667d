#include <doctest.h>

#include <algorithm>
#include <map>

#include "rgl/corpus.hpp"
#include "rgl/linearize.hpp"
#include "rgl/penman.hpp"
#include "rgl/smatch.hpp"

using namespace rgl;

namespace {

AmrGraph g1() {
  return parse_penman(
      "(c / come-01 :purpose (a / and :op1 (s / study-01) :op2 (l / learn-01)))");
}

}  // namespace

TEST_CASE("G1 L2R and R2L traversal order") {
  AmrGraph g = g1();
  CHECK(render_tokens(linearize(g, Order::L2R)) ==
        "( <R0> come-01 :purpose ( <R1> and :op1 ( <R2> study-01 ) :op2 ( "
        "<R3> learn-01 ) ) )");
  CHECK(render_tokens(linearize(g, Order::R2L)) ==
        "( <R0> come-01 :purpose ( <R1> and :op2 ( <R2> learn-01 ) :op1 ( "
        "<R3> study-01 ) ) )");
}

TEST_CASE("single node identical under both orders") {
  AmrGraph g = parse_penman("(d / dog)");
  CHECK(render_tokens(linearize(g, Order::L2R)) ==
        render_tokens(linearize(g, Order::R2L)));
}

TEST_CASE("round trips are smatch exact") {
  const char* texts[] = {
      "(d / dog)",
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
      "(a / dog :ARG0-of (b / bark-01) :quant 3)",
      "(p / person :name (n / name :op1 \"Kim\") :mod (q / quiet))",
  };
  for (const char* text : texts) {
    AmrGraph g = parse_penman(text);
    for (Order o : {Order::L2R, Order::R2L}) {
      AmrGraph restored = delinearize(linearize(g, o));
      CHECK(smatch(restored, g).f1 == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("reverse_tokens") {
  AmrGraph g = g1();
  TokenSeq l2r = linearize(g, Order::L2R);
  TokenSeq rev = reverse_tokens(l2r);
  CHECK(rev.order == Order::Reversed);
  CHECK(render_tokens(rev).rfind(") ) ) learn-01 <R3> (", 0) == 0);
  TokenSeq back = reverse_tokens(rev);
  CHECK(back.tokens == l2r.tokens);

  TokenSeq empty;
  CHECK(reverse_tokens(empty).tokens.empty());
}

TEST_CASE("repair: missing close") {
  TokenSeq t = linearize(g1(), Order::L2R);
  TokenSeq broken = t;
  broken.tokens.pop_back();  // drop one Close
  AmrGraph restored = delinearize(broken);
  restored.validate();
  CHECK(smatch(restored, g1()).f1 == doctest::Approx(1.0));
}

TEST_CASE("repair: dangling role dropped") {
  TokenSeq t = lex_tokens("( <R0> dog :mod :quant 3 )", Order::L2R);
  AmrGraph g = delinearize(t);
  g.validate();
  CHECK(g.nodes.size() == 1);
  REQUIRE(g.attributes.size() == 1);
  CHECK(g.attributes[0].role == "quant");
}

TEST_CASE("repair: unseen pointer becomes amr-unknown node") {
  TokenSeq t = lex_tokens("( <R0> dog :mod <R7> )", Order::L2R);
  AmrGraph g = delinearize(t);
  g.validate();
  REQUIRE(g.nodes.size() == 2);
  bool unknown = false;
  for (const auto& n : g.nodes) unknown |= n.concept_name == "amr-unknown";
  CHECK(unknown);
}

TEST_CASE("repair: trailing orphans dropped") {
  TokenSeq t = lex_tokens("( <R0> dog ) ) extra :mod", Order::L2R);
  AmrGraph g = delinearize(t);
  g.validate();
  CHECK(g.nodes.size() == 1);
}

TEST_CASE("repair: cycle-closing edge dropped") {
  TokenSeq t = lex_tokens("( <R0> a :r1 ( <R1> b :r2 <R0> ) )", Order::L2R);
  AmrGraph g = delinearize(t);
  g.validate();
  CHECK(g.edges.size() == 1);
}

TEST_CASE("unrecoverable input") {
  TokenSeq t = lex_tokens(") )", Order::L2R);
  CHECK_THROWS_AS(delinearize(t), DelinearizeError);
  TokenSeq empty;
  CHECK_THROWS_AS(delinearize(empty), DelinearizeError);
}

TEST_CASE("token text lexes back") {
  TokenSeq t = linearize(parse_penman("(p / person :name (n / name :op1 \"New York\"))"),
                         Order::L2R);
  TokenSeq relexed = lex_tokens(render_tokens(t), Order::L2R);
  REQUIRE(relexed.size() == t.size());
  AmrGraph a = delinearize(t);
  AmrGraph b = delinearize(relexed);
  CHECK(smatch(a, b).f1 == doctest::Approx(1.0));
}

TEST_CASE("generated graphs: order-invariant token stats and round trips") {
  GenSpec spec;
  spec.n_examples = 60;
  spec.seed = 7;
  auto corpus = generate(spec);
  for (const auto& ex : corpus) {
    TokenSeq l2r = linearize(ex.graph, Order::L2R);
    TokenSeq r2l = linearize(ex.graph, Order::R2L);
    CHECK(l2r.size() == r2l.size());

    // reentrant edges may be reached from the other endpoint under R2L, so
    // role tokens are compared by canonical name (the "-of" marker can flip)
    auto bag = [](const TokenSeq& s) {
      std::map<std::string, int> m;
      for (const Token& t : s.tokens) {
        if (t.kind == Token::Kind::Concept) m[t.text]++;
        if (t.kind == Token::Kind::Role) {
          std::string role = t.text;
          if (role.size() > 3 && role.ends_with("-of"))
            role = role.substr(0, role.size() - 3);
          m[":" + role]++;
        }
      }
      return m;
    };
    CHECK(bag(l2r) == bag(r2l));

    for (Order o : {Order::L2R, Order::R2L}) {
      AmrGraph restored = delinearize(linearize(ex.graph, o));
      CHECK(smatch(restored, ex.graph).f1 == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("last L2R subtree moves to the front of R2L") {
  GenSpec spec;
  spec.n_examples = 80;
  spec.seed = 11;
  auto corpus = generate(spec);
  int considered = 0;
  for (const auto& ex : corpus) {
    const AmrGraph& g = ex.graph;
    TokenSeq l2r = linearize(g, Order::L2R);
    TokenSeq r2l = linearize(g, Order::R2L);

    // spans of the root's direct children in L2R: role tokens at depth 1
    int depth = 0;
    int depth1_roles = 0;
    std::size_t last_role = 0;
    for (std::size_t i = 0; i < l2r.tokens.size(); ++i) {
      const Token& t = l2r.tokens[i];
      if (t.kind == Token::Kind::Open) ++depth;
      if (t.kind == Token::Kind::Close) --depth;
      if (t.kind == Token::Kind::Role && depth == 1) {
        ++depth1_roles;
        last_role = i;
      }
    }
    if (depth1_roles < 2) continue;  // nothing to reorder at the root
    ++considered;

    // under R2L the last child comes first: its tokens start at index 3,
    // inside the first half of the sequence
    CHECK(4 < r2l.size() / 2);

    // aggregate shift: the subtree's mean token position strictly drops
    std::size_t span = l2r.size() - 1 - last_role;
    double mean_l2r = double(last_role) + double(span) / 2.0;
    double mean_r2l = 3.0 + double(span) / 2.0;
    CHECK(mean_r2l < mean_l2r);
  }
  CHECK(considered > 10);
}
