#include "rgl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "rgl/smatch.hpp"

namespace rgl {

namespace {

struct BucketCounts {
  long matched_pred = 0;
  long pred = 0;
  long matched_gold = 0;
  long gold = 0;
};

long bucket_index(long pos, long width) { return pos / width; }

std::vector<CurveBucket> finalize_f1(const std::vector<BucketCounts>& counts,
                                     long width) {
  std::vector<CurveBucket> out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& c = counts[i];
    double p = c.pred > 0 ? double(c.matched_pred) / double(c.pred) : 0.0;
    double r = c.gold > 0 ? double(c.matched_gold) / double(c.gold) : 0.0;
    double f1 = (p + r) > 0 ? 2.0 * p * r / (p + r) : 0.0;
    out.push_back({long(i) * width, long(i + 1) * width, f1, c.pred + c.gold});
  }
  return out;
}

}  // namespace

PositionalCurve positional_f1(const std::vector<AmrGraph>& pred_corpus,
                              const std::vector<AmrGraph>& gold_corpus,
                              StructKind kind, long bucket_width,
                              int restarts, std::uint64_t seed) {
  if (pred_corpus.size() != gold_corpus.size())
    throw AnalysisError(AnalysisErrorKind::MisalignedCorpora,
                        "corpora sizes differ");
  if (bucket_width < 1)
    throw AnalysisError(AnalysisErrorKind::LengthMismatch, "bucket_width < 1");

  std::map<long, BucketCounts> counts;
  long max_len = 0;

  for (std::size_t i = 0; i < pred_corpus.size(); ++i) {
    const AmrGraph& pg = pred_corpus[i];
    const AmrGraph& gg = gold_corpus[i];
    Linearized pl = linearize_with_positions(pg, Order::L2R);
    Linearized gl = linearize_with_positions(gg, Order::L2R);
    max_len = std::max({max_len, long(pl.seq.size()), long(gl.seq.size())});

    VarMapping mapping = smatch_with_mapping(pg, gg, restarts, seed).mapping;

    if (kind == StructKind::Node) {
      std::map<std::string, std::string> gold_concept;
      for (const auto& n : gg.nodes) gold_concept[n.var] = n.concept_name;
      std::set<std::string> gold_matched;
      // pred side
      std::map<std::string, int> pred_pos(pl.concept_pos.begin(),
                                          pl.concept_pos.end());
      for (const auto& n : pg.nodes) {
        auto it = mapping.find(n.var);
        bool ok = it != mapping.end() &&
                  gold_concept.count(it->second) &&
                  gold_concept[it->second] == n.concept_name;
        auto& b = counts[bucket_index(pred_pos[n.var], bucket_width)];
        b.pred++;
        if (ok) {
          b.matched_pred++;
          gold_matched.insert(it->second);
        }
      }
      // gold side
      std::map<std::string, int> gold_pos(gl.concept_pos.begin(),
                                          gl.concept_pos.end());
      for (const auto& n : gg.nodes) {
        auto& b = counts[bucket_index(gold_pos[n.var], bucket_width)];
        b.gold++;
        if (gold_matched.count(n.var)) b.matched_gold++;
      }
    } else {
      // relation correctness: mapped triple present in gold, consumed 1:1
      std::map<std::tuple<std::string, std::string, std::string>, std::size_t>
          gold_edges;
      for (std::size_t e = 0; e < gg.edges.size(); ++e)
        gold_edges[{gg.edges[e].src, gg.edges[e].role, gg.edges[e].dst}] = e;
      std::set<std::size_t> gold_hit;
      for (std::size_t e = 0; e < pg.edges.size(); ++e) {
        const Edge& pe = pg.edges[e];
        bool ok = false;
        std::size_t hit = 0;
        auto sm = mapping.find(pe.src);
        auto dm = mapping.find(pe.dst);
        if (sm != mapping.end() && dm != mapping.end()) {
          auto it = gold_edges.find({sm->second, pe.role, dm->second});
          if (it != gold_edges.end() && !gold_hit.count(it->second)) {
            ok = true;
            hit = it->second;
          }
        }
        auto& b = counts[bucket_index(pl.edge_role_pos[e], bucket_width)];
        b.pred++;
        if (ok) {
          b.matched_pred++;
          gold_hit.insert(hit);
        }
      }
      for (std::size_t e = 0; e < gg.edges.size(); ++e) {
        auto& b = counts[bucket_index(gl.edge_role_pos[e], bucket_width)];
        b.gold++;
        if (gold_hit.count(e)) b.matched_gold++;
      }
    }
  }

  long n_buckets = max_len > 0 ? (max_len + bucket_width - 1) / bucket_width : 0;
  std::vector<BucketCounts> dense(static_cast<std::size_t>(n_buckets));
  for (const auto& [idx, c] : counts)
    if (idx < n_buckets) dense[std::size_t(idx)] = c;

  PositionalCurve curve;
  curve.kind = kind == StructKind::Node ? PositionalCurve::Kind::NodeF1
                                        : PositionalCurve::Kind::RelationF1;
  curve.bucket_width = bucket_width;
  curve.buckets = finalize_f1(dense, bucket_width);
  return curve;
}

PositionalCurve positionwise_accuracy(const std::vector<TokenSeq>& pred,
                                      const std::vector<TokenSeq>& gold,
                                      long bucket_width) {
  if (pred.size() != gold.size())
    throw AnalysisError(AnalysisErrorKind::MisalignedCorpora,
                        "corpora sizes differ");
  if (bucket_width < 1)
    throw AnalysisError(AnalysisErrorKind::LengthMismatch, "bucket_width < 1");

  long max_len = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    max_len = std::max({max_len, long(pred[i].size()), long(gold[i].size())});

  long n_buckets = max_len > 0 ? (max_len + bucket_width - 1) / bucket_width : 0;
  std::vector<long> correct(std::size_t(n_buckets), 0);
  std::vector<long> total(std::size_t(n_buckets), 0);

  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto& p = pred[i].tokens;
    const auto& g = gold[i].tokens;
    std::size_t upto = std::max(p.size(), g.size());
    for (std::size_t pos = 0; pos < upto; ++pos) {
      std::size_t b = std::size_t(bucket_index(long(pos), bucket_width));
      total[b]++;
      if (pos < p.size() && pos < g.size() && p[pos] == g[pos]) correct[b]++;
    }
  }

  PositionalCurve curve;
  curve.kind = PositionalCurve::Kind::TokenAccuracy;
  curve.bucket_width = bucket_width;
  for (long i = 0; i < n_buckets; ++i) {
    double acc = total[std::size_t(i)] > 0
                     ? double(correct[std::size_t(i)]) / double(total[std::size_t(i)])
                     : 0.0;
    curve.buckets.push_back(
        {i * bucket_width, (i + 1) * bucket_width, acc, total[std::size_t(i)]});
  }
  return curve;
}

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw AnalysisError(AnalysisErrorKind::LengthMismatch,
                        "series must have equal length >= 2");
  double n = double(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw AnalysisError(AnalysisErrorKind::ConstantSeries, "constant series");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

GateHistogram gate_histogram(const std::vector<GateRecord>& records,
                             long bucket_width) {
  if (bucket_width < 1)
    throw AnalysisError(AnalysisErrorKind::LengthMismatch, "bucket_width < 1");
  GateHistogram out;
  out.curve.kind = PositionalCurve::Kind::GateMean;
  out.curve.bucket_width = bucket_width;
  if (records.empty()) return out;

  long max_pos = 0;
  for (const auto& r : records) max_pos = std::max(max_pos, r.position);
  long n_buckets = max_pos / bucket_width + 1;
  std::vector<double> sums(std::size_t(n_buckets), 0.0);
  std::vector<long> cnts(std::size_t(n_buckets), 0);
  double total = 0.0;
  for (const auto& r : records) {
    std::size_t b = std::size_t(r.position / bucket_width);
    sums[b] += r.g;
    cnts[b]++;
    total += r.g;
  }
  out.global_mean = total / double(records.size());

  std::vector<double> mids, means;
  for (long i = 0; i < n_buckets; ++i) {
    double mean = cnts[std::size_t(i)] > 0
                      ? sums[std::size_t(i)] / double(cnts[std::size_t(i)])
                      : 0.0;
    out.curve.buckets.push_back(
        {i * bucket_width, (i + 1) * bucket_width, mean, cnts[std::size_t(i)]});
    if (cnts[std::size_t(i)] > 0) {
      mids.push_back(double(i) * double(bucket_width) + double(bucket_width) / 2.0);
      means.push_back(mean);
    }
  }
  try {
    out.position_pearson = pearson(mids, means);
    out.pearson_defined = true;
  } catch (const AnalysisError&) {
    out.pearson_defined = false;
  }
  return out;
}

std::vector<AmrGraph> align_by_id(const std::vector<AmrGraph>& reference,
                                  const std::vector<AmrGraph>& other) {
  if (reference.size() != other.size())
    throw AnalysisError(AnalysisErrorKind::MisalignedCorpora,
                        "corpora sizes differ");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < other.size(); ++i) {
    const std::string* id = other[i].meta("id");
    if (!id)
      throw AnalysisError(AnalysisErrorKind::MisalignedCorpora,
                          "block without ::id metadata");
    if (!index.emplace(*id, i).second)
      throw AnalysisError(AnalysisErrorKind::MisalignedCorpora,
                          "duplicate ::id " + *id);
  }
  std::vector<AmrGraph> aligned;
  aligned.reserve(reference.size());
  for (const auto& ref : reference) {
    const std::string* id = ref.meta("id");
    if (!id)
      throw AnalysisError(AnalysisErrorKind::MisalignedCorpora,
                          "block without ::id metadata");
    auto it = index.find(*id);
    if (it == index.end())
      throw AnalysisError(AnalysisErrorKind::MisalignedCorpora,
                          "id missing from other corpus: " + *id);
    aligned.push_back(other[it->second]);
  }
  return aligned;
}

std::string curve_to_table(const PositionalCurve& curve, char delim,
                           const std::string& summary) {
  std::ostringstream out;
  out << "bucket_start" << delim << "bucket_end" << delim << "value" << delim
      << "support\n";
  char buf[64];
  for (const auto& b : curve.buckets) {
    std::snprintf(buf, sizeof(buf), "%.4f", b.value);
    out << b.start << delim << b.end << delim << buf << delim << b.support
        << "\n";
  }
  if (!summary.empty()) out << summary << "\n";
  return out.str();
}

}  // namespace rgl
