#include <doctest.h>

#include "rgl/corpus.hpp"
#include "rgl/linearize.hpp"
#include "rgl/penman.hpp"
#include "rgl/rng.hpp"
#include "rgl/smatch.hpp"

using namespace rgl;

TEST_CASE("identity scores 1.0") {
  const char* texts[] = {
      "(d / dog)",
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))",
  };
  for (const char* t : texts) {
    AmrGraph g = parse_penman(t);
    SmatchScore s = smatch(g, g);
    CHECK(s.f1 == doctest::Approx(1.0));
    CHECK(s.matched == s.pred_total);
  }
}

TEST_CASE("dog/cat worked example: F = 0.75") {
  AmrGraph pred = parse_penman("(a / dog :ARG0-of (b / bark-01))");
  AmrGraph gold = parse_penman("(x / cat :ARG0-of (y / bark-01))");
  SmatchScore hc = smatch(pred, gold);
  SmatchScore bf = smatch_bruteforce(pred, gold);
  CHECK(hc.matched == 3);
  CHECK(hc.pred_total == 4);
  CHECK(hc.f1 == doctest::Approx(0.75));
  CHECK(bf.f1 == doctest::Approx(0.75));
}

TEST_CASE("single node pair: F = 0.5 (TOP only)") {
  AmrGraph pred = parse_penman("(a / dog)");
  AmrGraph gold = parse_penman("(b / cat)");
  SmatchScore s = smatch_bruteforce(pred, gold);
  CHECK(s.matched == 1);
  CHECK(s.f1 == doctest::Approx(0.5));
  CHECK(smatch(pred, gold).f1 == doctest::Approx(0.5));
}

TEST_CASE("empty pred scores zero") {
  TripleSet empty;
  TripleSet gold = to_triples(parse_penman("(d / dog)"));
  SmatchResult r = smatch_triples(empty, gold);
  CHECK(r.score.precision == 0.0);
  CHECK(r.score.recall == 0.0);
  CHECK(r.score.f1 == 0.0);
  SmatchResult rb = smatch_bruteforce_triples(empty, gold);
  CHECK(rb.score.f1 == 0.0);
}

TEST_CASE("brute force guards against large inputs") {
  std::string big = "(a0 / c0";
  for (int i = 1; i <= 9; ++i)
    big += " :op" + std::to_string(i) + " (a" + std::to_string(i) + " / c" +
           std::to_string(i) + ")";
  big += ")";
  AmrGraph g = parse_penman(big);
  CHECK_THROWS_AS(smatch_bruteforce(g, g), SmatchError);
}

namespace {

std::vector<AmrGraph> small_graphs(int count, std::uint64_t seed) {
  GenSpec spec;
  spec.n_examples = count * 3;
  spec.max_depth = 2;
  spec.max_children = 2;
  spec.concept_vocab_size = 12;
  spec.role_vocab_size = 4;
  spec.reentrancy_prob = 0.15;
  spec.seed = seed;
  std::vector<AmrGraph> out;
  for (auto& ex : generate(spec)) {
    if (ex.graph.nodes.size() <= 6) out.push_back(ex.graph);
    if (int(out.size()) == count) break;
  }
  return out;
}

}  // namespace

TEST_CASE("hill climbing equals brute force on small random pairs") {
  auto graphs = small_graphs(40, 123);
  REQUIRE(graphs.size() >= 20);
  Rng rng(99);
  int pairs = 0;
  for (std::size_t i = 0; i + 1 < graphs.size() && pairs < 60; ++i) {
    std::size_t j = rng.uniform_int(graphs.size());
    SmatchScore hc = smatch(graphs[i], graphs[j], 5, 1);
    SmatchScore bf = smatch_bruteforce(graphs[i], graphs[j]);
    CHECK(hc.f1 == doctest::Approx(bf.f1));
    CHECK(hc.matched == bf.matched);
    ++pairs;
  }
}

TEST_CASE("matched count is symmetric") {
  auto graphs = small_graphs(12, 5);
  for (std::size_t i = 0; i + 1 < graphs.size(); i += 2) {
    SmatchScore ab = smatch_bruteforce(graphs[i], graphs[i + 1]);
    SmatchScore ba = smatch_bruteforce(graphs[i + 1], graphs[i]);
    CHECK(ab.matched == ba.matched);
    CHECK(ab.precision == doctest::Approx(ba.recall));
  }
}

TEST_CASE("restart monotonicity under one seed stream") {
  auto graphs = small_graphs(10, 17);
  for (std::size_t i = 0; i + 1 < graphs.size(); i += 2) {
    long prev = -1;
    for (int r = 1; r <= 5; ++r) {
      SmatchScore s = smatch(graphs[i], graphs[i + 1], r, 7);
      CHECK(s.matched >= prev);
      prev = s.matched;
    }
  }
}

TEST_CASE("delinearized L2R and R2L agree") {
  GenSpec spec;
  spec.n_examples = 40;
  spec.seed = 31;
  for (auto& ex : generate(spec)) {
    AmrGraph a = delinearize(linearize(ex.graph, Order::L2R));
    AmrGraph b = delinearize(linearize(ex.graph, Order::R2L));
    CHECK(smatch(a, b).f1 == doctest::Approx(1.0));
  }
}

TEST_CASE("fine grained: sense-only difference") {
  AmrGraph pred = parse_penman("(d / duck-01)");
  AmrGraph gold = parse_penman("(d / duck-02)");
  BreakdownScores b = fine_grained(pred, gold);
  CHECK(b.scores[BreakdownCategory::NoWSD].f1 == doctest::Approx(1.0));
  CHECK(b.scores[BreakdownCategory::Concepts].f1 < 1.0);
}

TEST_CASE("fine grained: identical graphs score 1.0 everywhere") {
  AmrGraph g = parse_penman(
      "(s / say-01 :ARG0 (p / person :name (n / name :op1 \"Kim\") :wiki "
      "\"Kim_Q1\") :ARG1 (w / walk-01 :polarity - :ARG0 p))");
  BreakdownScores b = fine_grained(g, g);
  for (BreakdownCategory c : all_categories()) {
    INFO(category_name(c));
    CHECK(b.scores[c].f1 == doctest::Approx(1.0));
  }
}

TEST_CASE("fine grained: empty category conventions") {
  AmrGraph pred = parse_penman("(d / dog)");
  AmrGraph gold = parse_penman("(d / dog)");
  BreakdownScores b = fine_grained(pred, gold);
  CHECK(b.scores[BreakdownCategory::Negations].f1 == doctest::Approx(1.0));

  AmrGraph neg = parse_penman("(d / dog :polarity -)");
  BreakdownScores b2 = fine_grained(pred, neg);
  CHECK(b2.scores[BreakdownCategory::Negations].f1 == doctest::Approx(0.0));
}

TEST_CASE("fine grained: unlabeled ignores role names") {
  AmrGraph pred = parse_penman("(a / x :ARG0 (b / y))");
  AmrGraph gold = parse_penman("(a / x :ARG1 (b / y))");
  BreakdownScores b = fine_grained(pred, gold);
  CHECK(b.scores[BreakdownCategory::Unlabel].f1 == doctest::Approx(1.0));
  CHECK(smatch(pred, gold).f1 < 1.0);
}

TEST_CASE("fine grained: reentrancy and srl categories") {
  AmrGraph pred = parse_penman(
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))");
  AmrGraph gold = parse_penman(
      "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 (c / cat)))");
  BreakdownScores b = fine_grained(pred, gold);
  // pred has one reentrant edge, gold has none
  CHECK(b.scores[BreakdownCategory::Reentrancy].f1 == doctest::Approx(0.0));
  CHECK(b.scores[BreakdownCategory::SRL].f1 > 0.0);
}

TEST_CASE("strip_sense") {
  CHECK(strip_sense("duck-01") == "duck");
  CHECK(strip_sense("want-01") == "want");
  CHECK(strip_sense("and") == "and");
  CHECK(strip_sense("x-1") == "x-1");      // single digit: not a sense tag
  CHECK(strip_sense("look-12") == "look");
  CHECK(strip_sense("-") == "-");
}
