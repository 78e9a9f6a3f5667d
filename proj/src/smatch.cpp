#include "rgl/smatch.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "rgl/rng.hpp"

namespace rgl {

SmatchScore SmatchScore::from_counts(long matched, long pred_total,
                                     long gold_total) {
  SmatchScore s;
  s.matched = matched;
  s.pred_total = pred_total;
  s.gold_total = gold_total;
  s.precision = pred_total > 0 ? double(matched) / double(pred_total) : 0.0;
  s.recall = gold_total > 0 ? double(matched) / double(gold_total) : 0.0;
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

namespace {

constexpr int kUnmapped = -1;

// Triples encoded over interned ids so mapped keys pack into one uint64.
struct EncodedTriple {
  int kind;  // 0 instance, 1 relation, 2 attribute
  int a;     // pred/gold var index
  int role;
  int b;     // var index for relations, symbol id otherwise
};

struct Matcher {
  std::vector<std::string> pred_vars, gold_vars;  // sorted
  std::vector<EncodedTriple> pred_triples, gold_triples;
  std::unordered_map<std::uint64_t, int> gold_keys;      // key -> count
  std::vector<std::vector<int>> touching;                // pred var -> triple idxs
  long pred_total = 0, gold_total = 0;

  std::unordered_map<std::string, int> symbols;
  int intern(const std::string& s) {
    auto [it, inserted] = symbols.emplace(s, int(symbols.size()));
    return it->second;
  }

  static int var_index(const std::vector<std::string>& vars, const std::string& v) {
    auto it = std::lower_bound(vars.begin(), vars.end(), v);
    if (it == vars.end() || *it != v) return kUnmapped;
    return int(it - vars.begin());
  }

  std::uint64_t key(const EncodedTriple& t, int mapped_a, int mapped_b) const {
    // kind | a | role | b, each field well under its width at desk scale
    return (std::uint64_t(t.kind) << 60) ^ (std::uint64_t(mapped_a + 1) << 42) ^
           (std::uint64_t(t.role) << 22) ^ std::uint64_t(mapped_b + 1);
  }

  void build(const TripleSet& pred, const TripleSet& gold) {
    pred_vars = pred.variables();
    gold_vars = gold.variables();

    auto encode = [&](const TripleSet& ts, const std::vector<std::string>& vars) {
      std::vector<EncodedTriple> out;
      out.reserve(ts.triples.size());
      for (const auto& t : ts.triples) {
        EncodedTriple e;
        e.kind = t.kind == TripleKind::Instance ? 0
                 : t.kind == TripleKind::Relation ? 1 : 2;
        e.a = var_index(vars, t.a);
        e.role = intern(t.role);
        e.b = t.kind == TripleKind::Relation ? var_index(vars, t.b)
                                             : intern(t.b) + (1 << 20);
        out.push_back(e);
      }
      return out;
    };
    pred_triples = encode(pred, pred_vars);
    gold_triples = encode(gold, gold_vars);
    pred_total = long(pred_triples.size());
    gold_total = long(gold_triples.size());

    for (const auto& t : gold_triples)  // gold ids are already gold-side
      gold_keys[key(t, t.a, t.b)]++;
    touching.assign(pred_vars.size(), {});
    for (int i = 0; i < int(pred_triples.size()); ++i) {
      const auto& t = pred_triples[i];
      if (t.a >= 0) touching[t.a].push_back(i);
      if (t.kind == 1 && t.b >= 0 && t.b != t.a) touching[t.b].push_back(i);
    }
  }

  // exact multiset count for a full assignment (pred var idx -> gold var idx)
  long exact_matched(const std::vector<int>& assign) const {
    std::unordered_map<std::uint64_t, int> remaining = gold_keys;
    long matched = 0;
    for (const auto& t : pred_triples) {
      int ma = t.a >= 0 ? assign[t.a] : kUnmapped;
      if (t.a >= 0 && ma == kUnmapped) continue;
      int mb = t.b;
      if (t.kind == 1) {
        mb = t.b >= 0 ? assign[t.b] : kUnmapped;
        if (mb == kUnmapped) continue;
      }
      auto it = remaining.find(key(t, ma, mb));
      if (it != remaining.end() && it->second > 0) {
        --it->second;
        ++matched;
      }
    }
    return matched;
  }

  // additive presence check used for move gains (exact when keys are unique)
  bool triple_hits(const EncodedTriple& t, const std::vector<int>& assign,
                   int override_var, int override_val) const {
    auto mapped = [&](int v) {
      if (v == kUnmapped) return kUnmapped;
      return v == override_var ? override_val : assign[v];
    };
    int ma = t.a >= 0 ? mapped(t.a) : kUnmapped;
    if (t.a >= 0 && ma == kUnmapped) return false;
    int mb = t.b;
    if (t.kind == 1) {
      mb = t.b >= 0 ? mapped(t.b) : kUnmapped;
      if (mb == kUnmapped) return false;
    }
    return gold_keys.count(key(t, ma, mb)) > 0;
  }

  // hits with two overrides (swap evaluation)
  bool triple_hits2(const EncodedTriple& t, const std::vector<int>& assign,
                    int v1, int g1, int v2, int g2) const {
    auto mapped = [&](int v) {
      if (v == kUnmapped) return kUnmapped;
      if (v == v1) return g1;
      if (v == v2) return g2;
      return assign[v];
    };
    int ma = t.a >= 0 ? mapped(t.a) : kUnmapped;
    if (t.a >= 0 && ma == kUnmapped) return false;
    int mb = t.b;
    if (t.kind == 1) {
      mb = t.b >= 0 ? mapped(t.b) : kUnmapped;
      if (mb == kUnmapped) return false;
    }
    return gold_keys.count(key(t, ma, mb)) > 0;
  }

  // strictly-uphill climbing over single reassignments and swaps
  void climb_strict(std::vector<int>& assign) const {
    const int P = int(pred_vars.size());
    const int G = int(gold_vars.size());
    std::vector<int> owner(G, kUnmapped);  // gold idx -> pred idx
    for (int p = 0; p < P; ++p)
      if (assign[p] != kUnmapped) owner[assign[p]] = p;

    auto move_gain = [&](int p, int g_new) {
      long gain = 0;
      for (int ti : touching[p]) {
        const auto& t = pred_triples[ti];
        gain -= triple_hits(t, assign, kUnmapped, kUnmapped) ? 1 : 0;
        gain += triple_hits(t, assign, p, g_new) ? 1 : 0;
      }
      return gain;
    };
    auto swap_gain = [&](int p, int q, int gp_new, int gq_new) {
      long gain = 0;
      std::vector<int> seen;
      for (int src : {p, q})
        for (int ti : touching[src]) {
          if (std::find(seen.begin(), seen.end(), ti) != seen.end()) continue;
          seen.push_back(ti);
          const auto& t = pred_triples[ti];
          gain -= triple_hits(t, assign, kUnmapped, kUnmapped) ? 1 : 0;
          gain += triple_hits2(t, assign, p, gp_new, q, gq_new) ? 1 : 0;
        }
      return gain;
    };

    const int max_iters = 8 * (P + G) + 64;
    for (int iter = 0; iter < max_iters; ++iter) {
      long best_gain = 0;
      int best_p = -1, best_g = kUnmapped - 1;
      bool best_is_swap = false;
      for (int p = 0; p < P; ++p) {
        // moving to unmapped
        if (assign[p] != kUnmapped) {
          long gain = move_gain(p, kUnmapped);
          if (gain > best_gain) {
            best_gain = gain;
            best_p = p;
            best_g = kUnmapped;
            best_is_swap = false;
          }
        }
        for (int g = 0; g < G; ++g) {
          if (assign[p] == g) continue;
          int q = owner[g];
          long gain;
          bool is_swap = q != kUnmapped && q != p;
          if (is_swap) {
            gain = swap_gain(p, q, g, assign[p]);
          } else {
            gain = move_gain(p, g);
          }
          if (gain > best_gain) {
            best_gain = gain;
            best_p = p;
            best_g = g;
            best_is_swap = is_swap;
          }
        }
      }
      if (best_p < 0) break;
      int old = assign[best_p];
      if (best_is_swap) {
        int q = owner[best_g];
        assign[best_p] = best_g;
        assign[q] = old;
        owner[best_g] = best_p;
        if (old != kUnmapped) owner[old] = q;
      } else {
        if (old != kUnmapped) owner[old] = kUnmapped;
        assign[best_p] = best_g;
        if (best_g != kUnmapped) owner[best_g] = best_p;
      }
    }
  }

  // apply move/swap (p -> g) to a copy of the assignment
  std::vector<int> with_move(const std::vector<int>& assign, int p, int g) const {
    std::vector<int> out = assign;
    if (g != kUnmapped) {
      for (int q = 0; q < int(out.size()); ++q)
        if (out[q] == g) out[q] = assign[p];  // previous owner takes p's slot
    }
    out[std::size_t(p)] = g;
    return out;
  }

  long hill_climb(std::vector<int>& assign) const {
    const int P = int(pred_vars.size());
    const int G = int(gold_vars.size());
    climb_strict(assign);
    long best = exact_matched(assign);

    // strict gains stall on zero-gain plateaus that small problems need to
    // cross (a pair of coupled reassignments); for small mapping spaces walk
    // every single-step sideways kick and re-climb
    if (long(P) * long(G) <= 120) {
      const long upper = std::min(pred_total, gold_total);
      bool improved = true;
      while (improved && best < upper) {
        improved = false;
        for (int p = 0; p < P && !improved; ++p) {
          for (int g = kUnmapped; g < G && !improved; ++g) {
            if (assign[std::size_t(p)] == g) continue;
            std::vector<int> kicked = with_move(assign, p, g);
            climb_strict(kicked);
            long v = exact_matched(kicked);
            if (v > best) {
              best = v;
              assign = std::move(kicked);
              improved = true;
            }
          }
        }
      }
    }
    return best;
  }
};

// WL-1 style signature: concept plus the sorted multiset of incident
// (role, direction, neighbor concept) plus attributes.
std::vector<std::string> signatures(const TripleSet& ts) {
  auto vars = ts.variables();
  std::map<std::string, std::string> concept_of;
  for (const auto& t : ts.triples)
    if (t.kind == TripleKind::Instance) concept_of[t.a] = t.b;
  std::map<std::string, std::vector<std::string>> parts;
  for (const auto& t : ts.triples) {
    switch (t.kind) {
      case TripleKind::Instance: break;
      case TripleKind::Relation:
        parts[t.a].push_back(">" + t.role + "|" + concept_of[t.b]);
        parts[t.b].push_back("<" + t.role + "|" + concept_of[t.a]);
        break;
      case TripleKind::Attribute:
        parts[t.a].push_back("@" + t.role + "|" + t.b);
        break;
    }
  }
  std::vector<std::string> out;
  out.reserve(vars.size());
  for (const auto& v : vars) {
    auto p = parts[v];
    std::sort(p.begin(), p.end());
    std::string sig = concept_of[v];
    for (const auto& s : p) sig += "#" + s;
    out.push_back(sig);
  }
  return out;
}

std::vector<int> seeded_start(const Matcher& m, const TripleSet& pred,
                              const TripleSet& gold) {
  std::vector<int> assign(m.pred_vars.size(), kUnmapped);
  auto psig = signatures(pred);
  auto gsig = signatures(gold);
  std::map<std::string, std::string> pconcept, gconcept;
  for (const auto& t : pred.triples)
    if (t.kind == TripleKind::Instance) pconcept[t.a] = t.b;
  for (const auto& t : gold.triples)
    if (t.kind == TripleKind::Instance) gconcept[t.a] = t.b;

  std::vector<bool> used(m.gold_vars.size(), false);
  // pass 1: identical refined signature; pass 2: concept overlap
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t p = 0; p < m.pred_vars.size(); ++p) {
      if (assign[p] != kUnmapped) continue;
      for (std::size_t g = 0; g < m.gold_vars.size(); ++g) {
        if (used[g]) continue;
        bool ok = pass == 0
                      ? psig[p] == gsig[g]
                      : (!pconcept[m.pred_vars[p]].empty() &&
                         pconcept[m.pred_vars[p]] == gconcept[m.gold_vars[g]]);
        if (ok) {
          assign[p] = int(g);
          used[g] = true;
          break;
        }
      }
    }
  }
  return assign;
}

std::vector<int> random_start(const Matcher& m, Rng& rng) {
  std::vector<int> golds(m.gold_vars.size());
  for (std::size_t i = 0; i < golds.size(); ++i) golds[i] = int(i);
  rng.shuffle(golds);
  std::vector<int> preds(m.pred_vars.size());
  for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = int(i);
  rng.shuffle(preds);  // every pred var can land in a random start
  std::vector<int> assign(m.pred_vars.size(), kUnmapped);
  for (std::size_t i = 0; i < preds.size() && i < golds.size(); ++i)
    assign[std::size_t(preds[i])] = golds[i];
  return assign;
}

VarMapping to_mapping(const Matcher& m, const std::vector<int>& assign) {
  VarMapping map;
  for (std::size_t p = 0; p < assign.size(); ++p)
    if (assign[p] != kUnmapped)
      map[m.pred_vars[p]] = m.gold_vars[assign[p]];
  return map;
}

}  // namespace

SmatchResult smatch_triples(const TripleSet& pred, const TripleSet& gold,
                            int restarts, std::uint64_t seed) {
  if (restarts < 1) throw SmatchError("restarts must be >= 1");
  Matcher m;
  m.build(pred, gold);

  long best_matched = -1;
  std::vector<int> best_assign(m.pred_vars.size(), kUnmapped);
  const long upper = std::min(m.pred_total, m.gold_total);
  Rng rng(seed);

  for (int r = 0; r < restarts; ++r) {
    std::vector<int> assign =
        r == 0 ? seeded_start(m, pred, gold) : random_start(m, rng);
    long matched = m.hill_climb(assign);
    if (matched > best_matched) {
      best_matched = matched;
      best_assign = assign;
    }
    if (best_matched >= upper) break;  // cannot improve further
  }
  if (best_matched < 0) best_matched = 0;

  SmatchResult res;
  res.score = SmatchScore::from_counts(best_matched, m.pred_total, m.gold_total);
  res.mapping = to_mapping(m, best_assign);
  return res;
}

SmatchScore smatch(const AmrGraph& pred, const AmrGraph& gold, int restarts,
                   std::uint64_t seed) {
  return smatch_triples(to_triples(pred), to_triples(gold), restarts, seed).score;
}

SmatchResult smatch_with_mapping(const AmrGraph& pred, const AmrGraph& gold,
                                 int restarts, std::uint64_t seed) {
  return smatch_triples(to_triples(pred), to_triples(gold), restarts, seed);
}

SmatchResult smatch_bruteforce_triples(const TripleSet& pred,
                                       const TripleSet& gold) {
  Matcher m;
  m.build(pred, gold);
  const std::size_t P = m.pred_vars.size();
  const std::size_t G = m.gold_vars.size();
  if (std::min(P, G) > 8)
    throw SmatchError("too large: min variable count exceeds 8");

  // enumerate injective maps of the smaller side; work estimate guard
  bool pred_small = P <= G;
  std::size_t small = pred_small ? P : G;
  std::size_t large = pred_small ? G : P;
  double work = 1.0;
  for (std::size_t i = 0; i < small; ++i) work *= double(large - i);
  if (work > 5e7) throw SmatchError("too large: mapping space exceeds guard");

  std::vector<int> assign(small, kUnmapped);
  std::vector<bool> used(large, false);
  long best = -1;
  std::vector<int> best_small(small, kUnmapped);

  auto score_assign = [&](const std::vector<int>& a) {
    if (pred_small) return m.exact_matched(a);
    // invert: gold->pred into pred->gold
    std::vector<int> inv(P, kUnmapped);
    for (std::size_t g = 0; g < a.size(); ++g)
      if (a[g] != kUnmapped) inv[a[g]] = int(g);
    return m.exact_matched(inv);
  };

  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == small) {
      long v = score_assign(assign);
      if (v > best) {
        best = v;
        best_small = assign;
      }
      return;
    }
    for (std::size_t j = 0; j < large; ++j) {
      if (used[j]) continue;
      used[j] = true;
      assign[i] = int(j);
      self(self, i + 1);
      used[j] = false;
    }
    // small side strictly <= large side, so a full assignment always exists;
    // leaving vars unmapped can never beat mapping them
  };
  if (small == 0) {
    best = 0;
  } else {
    rec(rec, 0);
  }

  std::vector<int> pred_assign(P, kUnmapped);
  if (pred_small) {
    pred_assign = best_small;
  } else {
    for (std::size_t g = 0; g < best_small.size(); ++g)
      if (best_small[g] != kUnmapped) pred_assign[best_small[g]] = int(g);
  }

  SmatchResult res;
  res.score = SmatchScore::from_counts(best < 0 ? 0 : best, m.pred_total,
                                       m.gold_total);
  res.mapping = to_mapping(m, pred_assign);
  return res;
}

SmatchScore smatch_bruteforce(const AmrGraph& pred, const AmrGraph& gold) {
  return smatch_bruteforce_triples(to_triples(pred), to_triples(gold)).score;
}

std::string category_name(BreakdownCategory c) {
  switch (c) {
    case BreakdownCategory::NoWSD: return "NoWSD";
    case BreakdownCategory::Concepts: return "Concepts";
    case BreakdownCategory::NER: return "NER";
    case BreakdownCategory::Negations: return "Negations";
    case BreakdownCategory::Unlabel: return "Unlabel";
    case BreakdownCategory::Reentrancy: return "Reentrancy";
    case BreakdownCategory::SRL: return "SRL";
    case BreakdownCategory::Wikification: return "Wikification";
  }
  return "?";
}

const std::vector<BreakdownCategory>& all_categories() {
  static const std::vector<BreakdownCategory> cats = {
      BreakdownCategory::NoWSD,      BreakdownCategory::Concepts,
      BreakdownCategory::NER,        BreakdownCategory::Negations,
      BreakdownCategory::Unlabel,    BreakdownCategory::Reentrancy,
      BreakdownCategory::SRL,        BreakdownCategory::Wikification};
  return cats;
}

std::string strip_sense(const std::string& concept_name) {
  auto dash = concept_name.rfind('-');
  if (dash == std::string::npos || dash + 3 > concept_name.size())
    return concept_name;
  for (std::size_t i = dash + 1; i < concept_name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(concept_name[i])))
      return concept_name;
  if (concept_name.size() - dash - 1 < 2) return concept_name;
  return concept_name.substr(0, dash);
}

namespace {

bool is_srl_role(const std::string& role) {
  if (role.size() < 4 || role.compare(0, 3, "ARG") != 0) return false;
  for (std::size_t i = 3; i < role.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(role[i]))) return false;
  return true;
}

}  // namespace

TripleSet filter_category(const TripleSet& ts, BreakdownCategory c) {
  TripleSet out;
  switch (c) {
    case BreakdownCategory::NoWSD:
      for (auto t : ts.triples) {
        if (t.kind == TripleKind::Instance) t.b = strip_sense(t.b);
        out.triples.push_back(t);
      }
      break;
    case BreakdownCategory::Concepts:
      for (const auto& t : ts.triples)
        if (t.kind == TripleKind::Instance) out.triples.push_back(t);
      break;
    case BreakdownCategory::NER: {
      // :name edges plus everything reachable below the name node
      std::set<std::string> closure;
      std::vector<std::string> frontier;
      for (const auto& t : ts.triples)
        if (t.kind == TripleKind::Relation && t.role == "name")
          frontier.push_back(t.b);
      while (!frontier.empty()) {
        std::string v = frontier.back();
        frontier.pop_back();
        if (!closure.insert(v).second) continue;
        for (const auto& t : ts.triples)
          if (t.kind == TripleKind::Relation && t.a == v)
            frontier.push_back(t.b);
      }
      for (const auto& t : ts.triples) {
        bool keep = false;
        if (t.kind == TripleKind::Relation && t.role == "name") keep = true;
        else if (t.kind == TripleKind::Instance && closure.count(t.a)) keep = true;
        else if (t.kind == TripleKind::Attribute && closure.count(t.a) &&
                 t.role != "TOP")
          keep = true;
        else if (t.kind == TripleKind::Relation && closure.count(t.a)) keep = true;
        if (keep) out.triples.push_back(t);
      }
      break;
    }
    case BreakdownCategory::Negations:
      for (const auto& t : ts.triples)
        if (t.kind != TripleKind::Instance && t.role == "polarity")
          out.triples.push_back(t);
      break;
    case BreakdownCategory::Unlabel:
      for (auto t : ts.triples) {
        if (t.kind == TripleKind::Relation) t.role = "rel";
        out.triples.push_back(t);
      }
      break;
    case BreakdownCategory::Reentrancy: {
      std::map<std::string, int> indeg;
      for (const auto& t : ts.triples)
        if (t.kind == TripleKind::Relation) indeg[t.b]++;
      for (const auto& t : ts.triples)
        if (t.kind == TripleKind::Relation && indeg[t.b] >= 2)
          out.triples.push_back(t);
      break;
    }
    case BreakdownCategory::SRL:
      for (const auto& t : ts.triples)
        if (t.kind != TripleKind::Instance && is_srl_role(t.role))
          out.triples.push_back(t);
      break;
    case BreakdownCategory::Wikification:
      for (const auto& t : ts.triples)
        if (t.kind != TripleKind::Instance && t.role == "wiki")
          out.triples.push_back(t);
      break;
  }
  return out;
}

BreakdownScores fine_grained(const AmrGraph& pred, const AmrGraph& gold,
                             int restarts, std::uint64_t seed) {
  TripleSet pt = to_triples(pred);
  TripleSet gt = to_triples(gold);
  BreakdownScores out;
  for (BreakdownCategory c : all_categories()) {
    TripleSet fp = filter_category(pt, c);
    TripleSet fg = filter_category(gt, c);
    SmatchScore s;
    if (fp.triples.empty() && fg.triples.empty()) {
      s = SmatchScore::from_counts(0, 0, 0);
      s.precision = s.recall = s.f1 = 1.0;  // empty-category convention
    } else if (fp.triples.empty() || fg.triples.empty()) {
      s = SmatchScore::from_counts(0, long(fp.triples.size()),
                                   long(fg.triples.size()));
    } else {
      s = smatch_triples(fp, fg, restarts, seed).score;
    }
    out.scores[c] = s;
  }
  return out;
}

}  // namespace rgl
