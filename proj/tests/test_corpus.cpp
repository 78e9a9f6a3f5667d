#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "rgl/corpus.hpp"
#include "rgl/linearize.hpp"
#include "rgl/smatch.hpp"

using namespace rgl;

TEST_CASE("load corpus text") {
  std::string text =
      "# ::id a\n# ::snt the dog\n(d / dog)\n"
      "\n"
      "# ::id b\n# ::snt a cat\n(c / cat)\n";
  CorpusLoadResult r = load_corpus_text(text);
  REQUIRE(r.examples.size() == 2);
  CHECK(r.errors.empty());
  CHECK(r.examples[0].id == "a");
  CHECK(r.examples[0].sentence == std::vector<std::string>{"the", "dog"});
}

TEST_CASE("missing snt synthesizes a sentence, flagged") {
  CorpusLoadResult r = load_corpus_text("# ::id z\n(d / dog)\n");
  REQUIRE(r.examples.size() == 1);
  CHECK_FALSE(r.examples[0].sentence.empty());
  REQUIRE(r.examples[0].graph.meta("synthesized_snt") != nullptr);
  CHECK(*r.examples[0].graph.meta("synthesized_snt") == "true");
}

TEST_CASE("per-block errors carry the block index") {
  std::string text = "(d / dog)\n\n(broken\n\n(c / cat)\n";
  CorpusLoadResult r = load_corpus_text(text);
  CHECK(r.examples.size() == 2);
  REQUIRE(r.errors.size() == 1);
  CHECK(r.errors[0].first == 1);
}

TEST_CASE("empty file gives an empty corpus") {
  CorpusLoadResult r = load_corpus_text("");
  CHECK(r.examples.empty());
  CHECK(r.errors.empty());
}

TEST_CASE("generate is seed-deterministic") {
  GenSpec spec;
  spec.n_examples = 25;
  spec.seed = 5;
  std::string a = corpus_to_text(generate(spec));
  std::string b = corpus_to_text(generate(spec));
  CHECK(a == b);
  spec.seed = 6;
  CHECK(a != corpus_to_text(generate(spec)));
}

TEST_CASE("zero reentrancy probability generates trees") {
  GenSpec spec;
  spec.n_examples = 40;
  spec.reentrancy_prob = 0.0;
  spec.seed = 8;
  for (const auto& ex : generate(spec)) {
    for (const auto& n : ex.graph.nodes) {
      int expected = n.var == ex.graph.root ? 0 : 1;
      CHECK(ex.graph.in_degree(n.var) == expected);
    }
  }
}

TEST_CASE("generated graphs validate and round trip both orders") {
  GenSpec spec;
  spec.n_examples = 50;
  spec.seed = 17;
  for (const auto& ex : generate(spec)) {
    ex.graph.validate();
    for (Order o : {Order::L2R, Order::R2L}) {
      AmrGraph restored = delinearize(linearize(ex.graph, o));
      CHECK(smatch(restored, ex.graph).f1 == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("verbalization is injective across a large sample") {
  GenSpec spec;
  spec.n_examples = 1000;
  spec.seed = 23;
  auto corpus = generate(spec);
  std::map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::ostringstream key;
    for (const auto& w : corpus[i].sentence) key << w << ' ';
    auto [it, inserted] = seen.emplace(key.str(), i);
    if (!inserted) {
      // same sentence must mean smatch-equivalent graphs
      CHECK(smatch(corpus[i].graph, corpus[it->second].graph).f1 ==
            doctest::Approx(1.0));
    }
  }
}

TEST_CASE("split sizes, disjointness, determinism") {
  GenSpec spec;
  spec.n_examples = 1000;
  spec.max_depth = 2;
  spec.max_children = 1;
  spec.seed = 9;
  auto corpus = generate(spec);
  SplitResult r = split(corpus, {0.8, 0.1, 0.1}, 77);
  CHECK(r.train.size() == 800);
  CHECK(r.dev.size() == 100);
  CHECK(r.test.size() == 100);

  std::set<std::string> ids;
  for (const auto& part : {r.train, r.dev, r.test})
    for (const auto& ex : part) CHECK(ids.insert(ex.id).second);

  SplitResult r2 = split(corpus, {0.8, 0.1, 0.1}, 77);
  CHECK(r.train[0].id == r2.train[0].id);
  CHECK(r.test[0].id == r2.test[0].id);

  CHECK_THROWS_AS(split(corpus, {0.8, 0.1, 0.2}, 1), CorpusError);
}

TEST_CASE("save and reload a corpus") {
  GenSpec spec;
  spec.n_examples = 5;
  spec.seed = 12;
  auto corpus = generate(spec);
  std::string path = "/tmp/rgl_test_corpus.amr";
  save_corpus(path, corpus);
  CorpusLoadResult r = load_corpus(path);
  REQUIRE(r.examples.size() == corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    CHECK(r.examples[i].id == corpus[i].id);
    CHECK(r.examples[i].sentence == corpus[i].sentence);
    CHECK(smatch(r.examples[i].graph, corpus[i].graph).f1 ==
          doctest::Approx(1.0));
  }
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_corpus("/nonexistent/nope.amr"), CorpusError);
}
