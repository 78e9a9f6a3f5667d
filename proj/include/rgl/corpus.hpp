#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgl/amr_graph.hpp"

namespace rgl {

enum class CorpusErrorKind { Io, BadRatios, EmptyCorpus };

struct CorpusError : std::runtime_error {
  CorpusError(CorpusErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
  CorpusErrorKind kind;
};

struct Example {
  std::string id;
  std::vector<std::string> sentence;
  AmrGraph graph;
};

struct CorpusLoadResult {
  std::vector<Example> examples;
  std::vector<std::pair<std::size_t, std::string>> errors;  // block idx, msg
};

CorpusLoadResult load_corpus_text(const std::string& text);
CorpusLoadResult load_corpus(const std::string& path);

std::string corpus_to_text(const std::vector<Example>& corpus);
void save_corpus(const std::string& path, const std::vector<Example>& corpus);

// Seeded synthetic generator: random rooted DAGs with bounded depth and
// branching, occasional reentrancies and :quant attributes, paired with a
// deterministic verbalization the models learn to invert.
struct GenSpec {
  long n_examples = 2000;
  long max_depth = 5;
  long max_children = 3;
  long concept_vocab_size = 200;
  long role_vocab_size = 12;
  double reentrancy_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

std::vector<Example> generate(const GenSpec& spec);

// Left-to-right concept reading with bracket and role function words;
// injective on generated graphs (reentrant mentions carry their pointer).
std::vector<std::string> verbalize(const AmrGraph& g);

struct SplitResult {
  std::vector<Example> train, dev, test;
};

// Seeded disjoint partition; ratios must sum to 1.
SplitResult split(const std::vector<Example>& corpus,
                  std::array<double, 3> ratios, std::uint64_t seed);

}  // namespace rgl
