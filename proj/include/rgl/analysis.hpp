#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgl/amr_graph.hpp"
#include "rgl/linearize.hpp"

namespace rgl {

enum class AnalysisErrorKind { LengthMismatch, ConstantSeries, MisalignedCorpora };

struct AnalysisError : std::runtime_error {
  AnalysisError(AnalysisErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
  AnalysisErrorKind kind;
};

struct CurveBucket {
  long start = 0;  // token position range [start, end)
  long end = 0;
  double value = 0.0;
  long support = 0;
};

struct PositionalCurve {
  enum class Kind { NodeF1, RelationF1, TokenAccuracy, GateMean };
  Kind kind = Kind::NodeF1;
  long bucket_width = 1;
  std::vector<CurveBucket> buckets;  // partition of [0, max_len)
};

enum class StructKind { Node, Relation };

// F1 of predicted nodes/relations by the position of the token introducing
// them in the L2R sequence (gold positions from gold's own L2R sequence).
// Correctness is judged under the best Smatch mapping per pair; gold items
// the mapping leaves unmatched count against recall in their own bucket.
PositionalCurve positional_f1(const std::vector<AmrGraph>& pred_corpus,
                              const std::vector<AmrGraph>& gold_corpus,
                              StructKind kind, long bucket_width,
                              int restarts = 5, std::uint64_t seed = 0);

// Exact-token-match rate per position bucket. An example contributes to
// every position below the longer of its two lengths; a position covered by
// only one side counts as a miss.
PositionalCurve positionwise_accuracy(const std::vector<TokenSeq>& pred,
                                      const std::vector<TokenSeq>& gold,
                                      long bucket_width);

// Sample Pearson correlation. Throws LengthMismatch (unequal or < 2 points)
// and ConstantSeries.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

struct GateRecord {
  long position = 0;  // token index in the decoded sequence
  int layer = 0;      // decoder layer
  double g = 0.0;     // gate value in [0, 1]
};

struct GateHistogram {
  PositionalCurve curve;  // mean gate per position bucket
  double global_mean = 0.0;
  double position_pearson = 0.0;  // per-bucket mean vs bucket midpoint
  bool pearson_defined = false;
};

GateHistogram gate_histogram(const std::vector<GateRecord>& records,
                             long bucket_width = 50);

// Reorders `other` so its ::id sequence matches `reference`; throws
// MisalignedCorpora when the id sets differ or ids are missing.
std::vector<AmrGraph> align_by_id(const std::vector<AmrGraph>& reference,
                                  const std::vector<AmrGraph>& other);

// bucket_start, bucket_end, value, support rows plus a trailing summary line.
std::string curve_to_table(const PositionalCurve& curve, char delim,
                           const std::string& summary = "");

}  // namespace rgl
