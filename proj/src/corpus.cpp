#include "rgl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rgl/linearize.hpp"
#include "rgl/penman.hpp"
#include "rgl/rng.hpp"

namespace rgl {

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

const std::vector<std::string>& syllables() {
  static const std::vector<std::string> syl = {
      "ba", "be", "bi", "bo", "bu", "da", "de", "di", "do", "du",
      "ka", "ke", "ki", "ko", "ku", "la", "le", "li", "lo", "lu",
      "ma", "me", "mi", "mo", "mu", "na", "ne", "ni", "no", "nu",
      "pa", "pe", "pi", "po", "pu", "ra", "re", "ri", "ro", "ru",
      "sa", "se", "si", "so", "su", "ta", "te", "ti", "to", "tu"};
  return syl;
}

std::string concept_word(long i) {
  const auto& syl = syllables();
  long n = long(syl.size());
  std::string w = syl[std::size_t((i / n) % n)] + syl[std::size_t(i % n)];
  if (i >= n * n) w += syl[std::size_t((i / (n * n)) % n)];
  if (i % 2 == 1) w += "-01";  // some concepts carry a sense suffix
  return w;
}

std::vector<std::string> role_list(long n) {
  static const std::vector<std::string> base = {
      "ARG0", "ARG1", "ARG2",   "ARG3",   "op1",  "op2",
      "op3",  "mod",  "time",   "purpose", "manner", "location",
      "part", "topic", "degree", "poss"};
  std::vector<std::string> out;
  for (long i = 0; i < n; ++i) {
    if (i < long(base.size()))
      out.push_back(base[std::size_t(i)]);
    else
      out.push_back("rel" + std::to_string(i));
  }
  return out;
}

}  // namespace

void GenSpec::validate() const {
  if (n_examples < 1 || max_depth < 1 || max_children < 1 ||
      concept_vocab_size < 1 || role_vocab_size < 1)
    throw CorpusError(CorpusErrorKind::BadRatios, "GenSpec counts must be >= 1");
  if (reentrancy_prob < 0.0 || reentrancy_prob > 1.0)
    throw CorpusError(CorpusErrorKind::BadRatios,
                      "reentrancy_prob outside [0,1]");
}

std::vector<std::string> verbalize(const AmrGraph& g) {
  TokenSeq seq = linearize(g, Order::L2R);
  std::vector<std::string> words;
  words.reserve(seq.tokens.size());
  Token::Kind prev = Token::Kind::Close;
  for (const Token& t : seq.tokens) {
    switch (t.kind) {
      case Token::Kind::Open: words.push_back("["); break;
      case Token::Kind::Close: words.push_back("]"); break;
      case Token::Kind::Pointer:
        // introductions are silent; reentrant mentions carry the index
        if (prev != Token::Kind::Open)
          words.push_back("ref" + std::to_string(t.pointer));
        break;
      case Token::Kind::Concept: words.push_back(t.text); break;
      case Token::Kind::Role: words.push_back("of-" + t.text); break;
      case Token::Kind::Constant: words.push_back(t.text); break;
    }
    prev = t.kind;
  }
  return words;
}

std::vector<Example> generate(const GenSpec& spec) {
  spec.validate();
  auto roles = role_list(spec.role_vocab_size);
  std::vector<Example> out;
  out.reserve(std::size_t(spec.n_examples));

  for (long idx = 0; idx < spec.n_examples; ++idx) {
    Rng rng = Rng::child(spec.seed, std::uint64_t(idx));
    AmrGraph g;
    int seq = 0;
    int next_var = 0;

    auto gen_node = [&](auto&& self, long depth) -> std::string {
      std::string var = "v" + std::to_string(next_var++);
      g.nodes.push_back(
          {var, concept_word(long(rng.uniform_int(std::uint64_t(spec.concept_vocab_size))))});
      long n_children = 0;
      if (depth < spec.max_depth) {
        n_children = long(rng.uniform_int(std::uint64_t(spec.max_children + 1)));
        if (depth == 0 && n_children == 0) n_children = 1;
      }
      for (long c = 0; c < n_children; ++c) {
        std::string role = roles[rng.uniform_int(roles.size())];
        int my_seq = seq++;
        std::string child = self(self, depth + 1);
        g.edges.push_back({var, role, child, my_seq});
      }
      if (rng.bernoulli(0.15))
        g.attributes.push_back(
            {var, "quant", std::to_string(1 + rng.uniform_int(9)), seq++});
      return var;
    };
    g.root = gen_node(gen_node, 0);

    // reentrancies: extra edges to non-descendant targets, dedup guarded
    if (spec.reentrancy_prob > 0.0 && g.nodes.size() > 2) {
      auto reaches = [&](const std::string& from, const std::string& to) {
        std::vector<std::string> stack{from};
        std::set<std::string> vis;
        while (!stack.empty()) {
          std::string v = stack.back();
          stack.pop_back();
          if (v == to) return true;
          if (!vis.insert(v).second) continue;
          for (const auto& e : g.edges)
            if (e.src == v) stack.push_back(e.dst);
        }
        return false;
      };
      std::size_t n_nodes = g.nodes.size();
      for (std::size_t i = 0; i < n_nodes; ++i) {
        if (!rng.bernoulli(spec.reentrancy_prob)) continue;
        const std::string& src = g.nodes[i].var;
        const std::string& dst =
            g.nodes[rng.uniform_int(std::uint64_t(n_nodes))].var;
        if (src == dst || reaches(dst, src)) continue;
        std::string role = roles[rng.uniform_int(roles.size())];
        bool dup = false;
        for (const auto& e : g.edges)
          if (e.src == src && e.role == role && e.dst == dst) dup = true;
        if (dup) continue;
        g.edges.push_back({src, role, dst, seq++});
      }
    }

    Example ex;
    ex.id = "g" + std::to_string(idx);
    ex.sentence = verbalize(g);
    g.metadata.emplace_back("id", ex.id);
    std::ostringstream snt;
    for (std::size_t w = 0; w < ex.sentence.size(); ++w) {
      if (w) snt << ' ';
      snt << ex.sentence[w];
    }
    g.metadata.emplace_back("snt", snt.str());
    ex.graph = std::move(g);
    ex.graph.validate();
    out.push_back(std::move(ex));
  }
  return out;
}

CorpusLoadResult load_corpus_text(const std::string& text) {
  CorpusLoadResult result;
  for (auto& block : parse_penman_blocks(text)) {
    if (!block.graph) {
      result.errors.emplace_back(block.block_index, block.error);
      continue;
    }
    Example ex;
    ex.graph = std::move(*block.graph);
    const std::string* id = ex.graph.meta("id");
    ex.id = id ? *id : "block" + std::to_string(block.block_index);
    const std::string* snt = ex.graph.meta("snt");
    if (snt) {
      ex.sentence = split_words(*snt);
    }
    if (ex.sentence.empty()) {
      // fallback: synthesize the sentence from the graph, flagged
      ex.sentence = verbalize(ex.graph);
      ex.graph.metadata.emplace_back("synthesized_snt", "true");
    }
    result.examples.push_back(std::move(ex));
  }
  return result;
}

CorpusLoadResult load_corpus(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CorpusError(CorpusErrorKind::Io, "cannot open: " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return load_corpus_text(text);
}

std::string corpus_to_text(const std::vector<Example>& corpus) {
  std::ostringstream out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i) out << "\n";
    const Example& ex = corpus[i];
    bool has_id = false, has_snt = false;
    for (const auto& [k, v] : ex.graph.metadata) {
      has_id |= k == "id";
      has_snt |= k == "snt";
    }
    if (!has_id) out << "# ::id " << ex.id << "\n";
    if (!has_snt) {
      out << "# ::snt";
      for (const auto& w : ex.sentence) out << ' ' << w;
      out << "\n";
    }
    for (const auto& [k, v] : ex.graph.metadata)
      out << "# ::" << k << " " << v << "\n";
    out << serialize_penman(ex.graph) << "\n";
  }
  return out.str();
}

void save_corpus(const std::string& path, const std::vector<Example>& corpus) {
  std::ofstream f(path);
  if (!f) throw CorpusError(CorpusErrorKind::Io, "cannot open for write: " + path);
  f << corpus_to_text(corpus);
  if (!f) throw CorpusError(CorpusErrorKind::Io, "write failed: " + path);
}

SplitResult split(const std::vector<Example>& corpus,
                  std::array<double, 3> ratios, std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::fabs(sum - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 ||
      ratios[2] < 0)
    throw CorpusError(CorpusErrorKind::BadRatios, "ratios must sum to 1");

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  long n = long(corpus.size());
  long n_train = std::lround(ratios[0] * double(n));
  long n_dev = std::lround((ratios[0] + ratios[1]) * double(n)) - n_train;

  SplitResult r;
  for (long i = 0; i < n; ++i) {
    const Example& ex = corpus[order[std::size_t(i)]];
    if (i < n_train)
      r.train.push_back(ex);
    else if (i < n_train + n_dev)
      r.dev.push_back(ex);
    else
      r.test.push_back(ex);
  }
  return r;
}

}  // namespace rgl
