#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgl/amr_graph.hpp"

namespace rgl {

struct SmatchScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long matched = 0;
  long pred_total = 0;
  long gold_total = 0;

  static SmatchScore from_counts(long matched, long pred_total, long gold_total);
};

// pred variable -> gold variable; absent key means unmapped
using VarMapping = std::map<std::string, std::string>;

struct SmatchError : std::runtime_error {
  explicit SmatchError(const std::string& msg) : std::runtime_error(msg) {}
};

struct SmatchResult {
  SmatchScore score;
  VarMapping mapping;
};

// Best one-to-one variable mapping found by hill-climbing, `restarts` total
// starts: the first is seeded by concept/neighborhood overlap, the rest are
// random. Deterministic given the seed; ties between equal-gain moves go to
// the lowest (pred_var, gold_var) pair. Stops early once every triple on the
// smaller side is matched.
SmatchResult smatch_triples(const TripleSet& pred, const TripleSet& gold,
                            int restarts = 5, std::uint64_t seed = 0);

SmatchScore smatch(const AmrGraph& pred, const AmrGraph& gold,
                   int restarts = 5, std::uint64_t seed = 0);

SmatchResult smatch_with_mapping(const AmrGraph& pred, const AmrGraph& gold,
                                 int restarts = 5, std::uint64_t seed = 0);

// Exact optimum by enumerating injective mappings of the smaller variable
// side. Throws SmatchError("too large ...") past the size guard.
SmatchResult smatch_bruteforce_triples(const TripleSet& pred,
                                       const TripleSet& gold);
SmatchScore smatch_bruteforce(const AmrGraph& pred, const AmrGraph& gold);

// Micro-average accumulator for corpus-level scores.
struct SmatchAccumulator {
  long matched = 0;
  long pred_total = 0;
  long gold_total = 0;

  void add(const SmatchScore& s) {
    matched += s.matched;
    pred_total += s.pred_total;
    gold_total += s.gold_total;
  }
  SmatchScore score() const {
    return SmatchScore::from_counts(matched, pred_total, gold_total);
  }
};

enum class BreakdownCategory {
  NoWSD,
  Concepts,
  NER,
  Negations,
  Unlabel,
  Reentrancy,
  SRL,
  Wikification,
};

std::string category_name(BreakdownCategory c);
const std::vector<BreakdownCategory>& all_categories();

struct BreakdownScores {
  std::map<BreakdownCategory, SmatchScore> scores;
};

// Filters a triple view down to one category. Exposed for tests.
TripleSet filter_category(const TripleSet& ts, BreakdownCategory c);

// Per-category scores. Each category is matched over exactly its filtered
// triples; a category empty on both sides scores 1.0, empty on one side 0.0.
BreakdownScores fine_grained(const AmrGraph& pred, const AmrGraph& gold,
                             int restarts = 5, std::uint64_t seed = 0);

// strips trailing "-NN" PropBank sense suffixes ("duck-01" -> "duck")
std::string strip_sense(const std::string& concept_name);

}  // namespace rgl
