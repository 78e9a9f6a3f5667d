// rgl: command-line front end for the AMR parsing lab: synthetic corpora,
// linearization, Smatch scoring, structure-loss analysis, training and
// two-stage inference.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rgl/analysis.hpp"
#include "rgl/corpus.hpp"
#include "rgl/inference.hpp"
#include "rgl/linearize.hpp"
#include "rgl/model.hpp"
#include "rgl/penman.hpp"
#include "rgl/rng.hpp"
#include "rgl/smatch.hpp"
#include "rgl/training.hpp"
#include "rgl/vocab.hpp"

using namespace rgl;

namespace {

std::string fmt4(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw std::runtime_error("cannot open for write: " + out_path);
  f << content;
}

struct TokenRow {
  std::string id;
  TokenSeq seq;
};

std::vector<TokenRow> read_token_tsv(const std::string& path) {
  std::vector<TokenRow> rows;
  std::istringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos)
      throw std::runtime_error("bad token TSV line: " + line);
    TokenRow row;
    row.id = line.substr(0, t1);
    Order order = order_from_name(line.substr(t1 + 1, t2 - t1 - 1));
    row.seq = lex_tokens(line.substr(t2 + 1), order);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string token_tsv(const std::vector<TokenRow>& rows) {
  std::ostringstream out;
  for (const auto& r : rows)
    out << r.id << '\t' << order_name(r.seq.order) << '\t'
        << render_tokens(r.seq) << "\n";
  return out.str();
}

// corpora for scoring: blocks marked "::unrecoverable true" score as empty
struct ScoredGraph {
  AmrGraph graph;
  bool empty = false;
};

std::vector<ScoredGraph> load_scored(const std::string& path) {
  std::vector<ScoredGraph> out;
  CorpusLoadResult r = load_corpus(path);
  if (!r.errors.empty()) {
    std::ostringstream msg;
    msg << "parse errors in " << path << ":";
    for (auto& [idx, err] : r.errors) msg << " [block " << idx << "] " << err;
    throw std::runtime_error(msg.str());
  }
  for (auto& ex : r.examples) {
    ScoredGraph s;
    const std::string* flag = ex.graph.meta("unrecoverable");
    s.empty = flag && *flag == "true";
    s.graph = std::move(ex.graph);
    out.push_back(std::move(s));
  }
  return out;
}

TripleSet triples_of(const ScoredGraph& g) {
  if (g.empty) return {};
  return to_triples(g.graph);
}

// id-aligned pairing; falls back to positional when ids are absent
std::vector<std::pair<std::size_t, std::size_t>> align_pairs(
    const std::vector<ScoredGraph>& pred, const std::vector<ScoredGraph>& gold) {
  if (pred.size() != gold.size())
    throw std::runtime_error("pred and gold corpora differ in size");
  bool all_ids = true;
  for (const auto& g : pred) all_ids &= g.graph.meta("id") != nullptr;
  for (const auto& g : gold) all_ids &= g.graph.meta("id") != nullptr;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (!all_ids) {
    for (std::size_t i = 0; i < pred.size(); ++i) pairs.push_back({i, i});
    return pairs;
  }
  std::map<std::string, std::size_t> pred_by_id;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!pred_by_id.emplace(*pred[i].graph.meta("id"), i).second)
      throw std::runtime_error("duplicate id in pred corpus");
  for (std::size_t j = 0; j < gold.size(); ++j) {
    auto it = pred_by_id.find(*gold[j].graph.meta("id"));
    if (it == pred_by_id.end())
      throw std::runtime_error("id missing from pred corpus: " +
                               *gold[j].graph.meta("id"));
    pairs.push_back({it->second, j});
  }
  return pairs;
}

// ---- training settings ------------------------------------------------------

struct TrainSettings {
  ModelConfig model;
  long steps = 500;
  long batch = 8;
  double lr = 1e-3;
  long warmup = -1;  // -1: proportional to steps
  double k1 = 0.8;
  double k2 = 0.0;  // 0 = derive ln(4)/steps
  int beam = 5;
  double fraction = 0.3;
  std::uint64_t seed = 0;

  void apply_config(const std::map<std::string, std::string>& kv) {
    auto get_l = [&](const char* k, long& dst) {
      auto it = kv.find(k);
      if (it != kv.end()) dst = std::stol(it->second);
    };
    auto get_d = [&](const char* k, double& dst) {
      auto it = kv.find(k);
      if (it != kv.end()) dst = std::stod(it->second);
    };
    get_l("d_model", model.d_model);
    get_l("n_heads", model.n_heads);
    get_l("n_enc_layers", model.n_enc_layers);
    get_l("n_graph_layers", model.n_graph_layers);
    get_l("n_dec_layers", model.n_dec_layers);
    get_l("max_len", model.max_len);
    get_l("steps", steps);
    get_l("total_steps", steps);
    get_l("batch", batch);
    get_l("warmup", warmup);
    get_d("lr", lr);
    get_d("k1", k1);
    get_d("k2", k2);
    get_d("fraction", fraction);
    auto it = kv.find("seed");
    if (it != kv.end()) seed = std::stoull(it->second);
    auto bit = kv.find("beam");
    if (bit != kv.end()) beam = std::stoi(bit->second);
    auto abl = kv.find("ablate");
    if (abl != kv.end()) {
      std::istringstream in(abl->second);
      std::string flag;
      while (std::getline(in, flag, ','))
        if (!flag.empty()) ablations.push_back(flag);
    }
  }

  std::vector<std::string> ablations;

  LossSchedule schedule() const {
    LossSchedule s = LossSchedule::over_steps(steps);
    s.k1 = k1;
    if (k2 != 0.0) s.k2 = k2;
    return s;
  }
};

Vocab build_corpus_vocab(const std::vector<Example>& corpus) {
  std::vector<std::vector<std::string>> lists;
  for (const auto& ex : corpus) {
    lists.push_back(ex.sentence);
    std::vector<std::string> toks;
    for (Order o : {Order::L2R, Order::R2L})
      for (const Token& t : linearize(ex.graph, o).tokens)
        toks.push_back(render_token(t));
    lists.push_back(toks);
  }
  return Vocab::build(lists);
}

std::vector<Example> load_examples(const std::string& path) {
  CorpusLoadResult r = load_corpus(path);
  for (auto& [idx, err] : r.errors)
    std::cerr << "warning: skipping block " << idx << ": " << err << "\n";
  if (r.examples.empty()) throw std::runtime_error("no examples in " + path);
  return std::move(r.examples);
}

// ---- subcommand bodies ---------------------------------------------------------

int cmd_gen_corpus(const GenSpec& spec, const std::string& out,
                   const std::string& split_spec, const std::string& manifest) {
  auto corpus = generate(spec);
  save_corpus(out, corpus);
  std::cout << "wrote " << corpus.size() << " examples to " << out << "\n";
  if (!split_spec.empty()) {
    std::array<double, 3> ratios{};
    if (std::sscanf(split_spec.c_str(), "%lf,%lf,%lf", &ratios[0], &ratios[1],
                    &ratios[2]) != 3)
      throw std::runtime_error("--split expects r_train,r_dev,r_test");
    SplitResult parts = split(corpus, ratios, spec.seed);
    auto stem = out;
    if (stem.size() > 4 && stem.ends_with(".amr"))
      stem = stem.substr(0, stem.size() - 4);
    save_corpus(stem + ".train.amr", parts.train);
    save_corpus(stem + ".dev.amr", parts.dev);
    save_corpus(stem + ".test.amr", parts.test);
    std::cout << "split " << parts.train.size() << "/" << parts.dev.size()
              << "/" << parts.test.size() << "\n";
    if (!manifest.empty()) {
      std::ostringstream tsv;
      for (const auto& ex : parts.train) tsv << ex.id << "\ttrain\n";
      for (const auto& ex : parts.dev) tsv << ex.id << "\tdev\n";
      for (const auto& ex : parts.test) tsv << ex.id << "\ttest\n";
      write_output(manifest, tsv.str());
    }
  }
  return 0;
}

int cmd_linearize(const std::string& in, const std::string& order_name_s,
                  const std::string& out) {
  Order order = order_from_name(order_name_s);
  auto corpus = load_examples(in);
  std::vector<TokenRow> rows;
  for (const auto& ex : corpus)
    rows.push_back({ex.id, linearize(ex.graph, order)});
  write_output(out, token_tsv(rows));
  return 0;
}

int cmd_delinearize(const std::string& in, const std::string& out) {
  std::vector<TokenRow> rows = read_token_tsv(in);
  std::ostringstream blocks;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) blocks << "\n";
    blocks << "# ::id " << rows[i].id << "\n";
    try {
      AmrGraph g = delinearize(rows[i].seq);
      blocks << serialize_penman(g) << "\n";
    } catch (const DelinearizeError&) {
      blocks << "# ::unrecoverable true\n(z0 / amr-empty)\n";
    }
  }
  write_output(out, blocks.str());
  return 0;
}

int cmd_reverse_tokens(const std::string& in, const std::string& out) {
  std::vector<TokenRow> rows = read_token_tsv(in);
  for (auto& r : rows) r.seq = reverse_tokens(r.seq);
  write_output(out, token_tsv(rows));
  return 0;
}

int cmd_smatch(const std::string& pred_path, const std::string& gold_path,
               int restarts, std::uint64_t seed, const std::string& out,
               char delim) {
  auto pred = load_scored(pred_path);
  auto gold = load_scored(gold_path);
  SmatchAccumulator acc;
  for (auto [pi, gi] : align_pairs(pred, gold)) {
    SmatchResult r = smatch_triples(triples_of(pred[pi]), triples_of(gold[gi]),
                                    restarts, seed);
    acc.add(r.score);
  }
  SmatchScore s = acc.score();
  std::ostringstream report;
  report << "P" << delim << "R" << delim << "F" << delim << "matched" << delim
         << "pred_total" << delim << "gold_total\n"
         << fmt4(s.precision) << delim << fmt4(s.recall) << delim << fmt4(s.f1)
         << delim << s.matched << delim << s.pred_total << delim
         << s.gold_total << "\n";
  write_output(out, report.str());
  return 0;
}

int cmd_fine_grained(const std::string& pred_path, const std::string& gold_path,
                     int restarts, std::uint64_t seed, const std::string& out,
                     char delim) {
  auto pred = load_scored(pred_path);
  auto gold = load_scored(gold_path);
  auto pairs = align_pairs(pred, gold);

  std::ostringstream report;
  report << "category" << delim << "P" << delim << "R" << delim << "F" << delim
         << "matched" << delim << "pred_total" << delim << "gold_total\n";
  for (BreakdownCategory c : all_categories()) {
    SmatchAccumulator acc;
    bool any = false;
    for (auto [pi, gi] : pairs) {
      TripleSet pt = filter_category(triples_of(pred[pi]), c);
      TripleSet gt = filter_category(triples_of(gold[gi]), c);
      if (pt.triples.empty() && gt.triples.empty()) continue;
      any = true;
      acc.add(smatch_triples(pt, gt, restarts, seed).score);
    }
    SmatchScore s = acc.score();
    if (!any) s.precision = s.recall = s.f1 = 1.0;  // empty category convention
    report << category_name(c) << delim << fmt4(s.precision) << delim
           << fmt4(s.recall) << delim << fmt4(s.f1) << delim << s.matched
           << delim << s.pred_total << delim << s.gold_total << "\n";
  }
  write_output(out, report.str());
  return 0;
}

int cmd_structure_loss(const std::string& pred_path, const std::string& gold_path,
                       const std::string& kind, long bucket_width, int restarts,
                       std::uint64_t seed, const std::string& out, char delim) {
  PositionalCurve curve;
  if (kind == "token") {
    std::vector<TokenRow> pred = read_token_tsv(pred_path);
    std::vector<TokenRow> gold = read_token_tsv(gold_path);
    std::map<std::string, std::size_t> gold_by_id;
    for (std::size_t i = 0; i < gold.size(); ++i) gold_by_id[gold[i].id] = i;
    std::vector<TokenSeq> ps, gs;
    for (const auto& row : pred) {
      auto it = gold_by_id.find(row.id);
      if (it == gold_by_id.end())
        throw std::runtime_error("id missing from gold tokens: " + row.id);
      ps.push_back(row.seq);
      gs.push_back(gold[it->second].seq);
    }
    curve = positionwise_accuracy(ps, gs, bucket_width);
  } else {
    StructKind k = kind == "node" ? StructKind::Node : StructKind::Relation;
    auto pred = load_scored(pred_path);
    auto gold = load_scored(gold_path);
    std::vector<AmrGraph> pg, gg;
    for (auto [pi, gi] : align_pairs(pred, gold)) {
      if (pred[pi].empty) continue;  // unrecoverable: no positions to count
      pg.push_back(pred[pi].graph);
      gg.push_back(gold[gi].graph);
    }
    curve = positional_f1(pg, gg, k, bucket_width, restarts, seed);
  }

  // per-bucket values vs bucket midpoints
  std::vector<double> mids, vals;
  for (const auto& b : curve.buckets)
    if (b.support > 0) {
      mids.push_back(double(b.start + b.end) / 2.0);
      vals.push_back(b.value);
    }
  std::string summary = "pearson_r";
  summary += delim;
  try {
    summary += fmt4(pearson(mids, vals));
  } catch (const AnalysisError&) {
    summary += "nan";
  }
  write_output(out, curve_to_table(curve, delim, summary));
  return 0;
}

int cmd_analyze_gates(const std::string& in, long bucket_width,
                      const std::string& out, char delim) {
  std::vector<GateRecord> records;
  std::istringstream file(read_file(in));
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty() || line.rfind("example_id", 0) == 0) continue;
    std::istringstream ls(line);
    std::string id;
    GateRecord r;
    if (ls >> id >> r.position >> r.layer >> r.g) records.push_back(r);
  }
  GateHistogram h = gate_histogram(records, bucket_width);
  std::ostringstream summary;
  summary << "global_mean" << delim << fmt4(h.global_mean) << "\n";
  summary << "pearson_r" << delim
          << (h.pearson_defined ? fmt4(h.position_pearson) : "nan");
  write_output(out, curve_to_table(h.curve, delim, summary.str()));
  return 0;
}

std::vector<double> parse_series(const std::string& csv, const std::string& file) {
  std::vector<double> out;
  if (!csv.empty()) {
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  } else if (!file.empty()) {
    std::istringstream in(read_file(file));
    double v;
    while (in >> v) out.push_back(v);
  }
  return out;
}

int cmd_train(const std::string& mode, const std::string& corpus_path,
              const std::string& silver_path, TrainSettings st,
              std::vector<std::string> ablate, const std::string& out,
              const std::string& metrics) {
  auto corpus = load_examples(corpus_path);
  Vocab vocab = build_corpus_vocab(corpus);
  st.model.vocab_size = vocab.size();
  st.model.seed = st.seed;

  // drop examples whose tokenized forms do not fit the positional table
  {
    std::vector<Example> kept;
    for (const auto& ex : corpus) {
      TrainItem probe = tokenize_example(ex, vocab);
      long limit = st.model.max_len - 2;
      if (long(probe.x.size()) <= limit && long(probe.y.size()) <= limit &&
          long(probe.yr_gold.size()) <= limit)
        kept.push_back(ex);
    }
    if (kept.size() != corpus.size())
      std::cerr << "warning: dropped " << corpus.size() - kept.size()
                << " examples longer than max_len\n";
    corpus = std::move(kept);
    if (corpus.empty()) throw std::runtime_error("no examples fit max_len");
  }

  TrainerOptions opt;
  opt.schedule = st.schedule();
  opt.adam.lr = st.lr;
  opt.adam.warmup_steps = st.warmup >= 0 ? st.warmup : default_warmup(st.steps);
  for (const std::string& a : st.ablations) ablate.push_back(a);
  for (const std::string& a : ablate) {
    if (a == "no-scheduler") opt.use_scheduler = false;
    else if (a == "no-distill") opt.use_distill = false;
    else if (a == "no-silver") opt.use_silver = false;
    else if (a == "gate-zero") opt.gate_zero = true;
    else throw std::runtime_error("unknown ablation: " + a);
  }

  std::ofstream metrics_file;
  if (!metrics.empty()) {
    metrics_file.open(metrics);
    metrics_file << format_step_stats_tsv_header() << "\n";
  }
  auto log_step = [&](const StepStats& s) {
    if (metrics_file.is_open())
      metrics_file << format_step_stats_tsv(s) << "\n";
  };

  if (mode == "weak-r2l") {
    ModelConfig cfg = st.model;
    std::vector<StepStats> log;
    RglModel model = train_weak_r2l(corpus, vocab, cfg, opt, st.steps, st.batch,
                                    st.fraction, st.seed, &log);
    for (const auto& s : log) log_step(s);
    model.save(out, vocab.to_lines());
    std::cout << "trained weak r2l parser on "
              << sample_fraction(corpus.size(), st.fraction, st.seed).size()
              << " examples, saved to " << out << "\n";
    return 0;
  }

  std::vector<TrainItem> items;
  for (const auto& ex : corpus) items.push_back(tokenize_example(ex, vocab));

  if (mode == "rgl") {
    std::size_t missing = 0;
    if (!silver_path.empty()) {
      std::vector<TokenRow> silver = read_token_tsv(silver_path);
      std::map<std::string, std::size_t> by_id;
      for (std::size_t i = 0; i < silver.size(); ++i) by_id[silver[i].id] = i;
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto it = by_id.find(corpus[i].id);
        if (it == by_id.end() || silver[it->second].seq.tokens.empty()) {
          ++missing;  // falls back to gold
          continue;
        }
        for (const Token& t : silver[it->second].seq.tokens)
          items[i].yr_silver.push_back(vocab.id(render_token(t)));
      }
    } else {
      missing = corpus.size();
    }
    if (missing > 0)
      std::cerr << "warning: " << missing
                << " examples train with gold reverse linearization\n";
  }

  RglModel model(st.model);
  Trainer trainer(model, opt);
  Rng rng(st.seed ^ 0xba7c4e5ULL);
  for (long s = 0; s < st.steps; ++s) {
    std::vector<TrainItem> batch;
    for (long b = 0; b < st.batch; ++b)
      batch.push_back(items[rng.uniform_int(items.size())]);
    StepStats stats;
    if (mode == "rgl") {
      stats = trainer.train_step(batch);
    } else if (mode == "baseline") {
      stats = trainer.train_step_plain(batch, /*r2l_target=*/false);
    } else if (mode == "r2l") {
      stats = trainer.train_step_plain(batch, /*r2l_target=*/true);
    } else {
      throw std::runtime_error("unknown mode: " + mode);
    }
    log_step(stats);
  }
  model.save(out, vocab.to_lines());
  std::cout << "trained " << mode << " model for " << st.steps
            << " steps, saved to " << out << "\n";
  return 0;
}

int cmd_silver(const std::string& model_path, const std::string& corpus_path,
               int beam, const std::string& out) {
  LoadedModel loaded = load_model(model_path);
  Vocab vocab = Vocab::from_lines(loaded.vocab_lines);
  auto corpus = load_examples(corpus_path);
  auto results = generate_silver(loaded.model, vocab, corpus, beam,
                                 loaded.model.config().max_len - 1);
  std::ostringstream tsv;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (results[i].failed) ++failures;
    tsv << corpus[i].id << "\tR2L\t"
        << (results[i].failed ? "" : render_tokens(results[i].seq)) << "\n";
  }
  write_output(out, tsv.str());
  std::cerr << "silver generated for " << corpus.size() << " examples, "
            << failures << " failures\n";
  return 0;
}

int cmd_infer(const std::string& r2l_path, const std::string& rgl_path,
              const std::string& baseline_path, const std::string& in,
              int beam, const std::string& out, const std::string& gate_trace) {
  auto corpus = load_examples(in);
  BeamConfig cfg;
  cfg.beam_size = beam;

  std::ostringstream blocks;
  std::ostringstream gates_tsv;
  gates_tsv << "example_id\tposition\tlayer\tg\n";

  auto emit = [&](const Example& ex, const PipelineOutput& po) {
    blocks << "# ::id " << ex.id << "\n# ::snt";
    for (const auto& w : ex.sentence) blocks << ' ' << w;
    blocks << "\n";
    if (po.unrecoverable || !po.graph) {
      blocks << "# ::unrecoverable true\n(z0 / amr-empty)\n\n";
    } else {
      blocks << serialize_penman(*po.graph) << "\n\n";
    }
    for (const auto& g : po.gates)
      gates_tsv << ex.id << '\t' << g.position << '\t' << g.layer << '\t'
                << fmt4(g.g) << "\n";
  };

  auto guarded = [&](const Example& ex, auto&& decode) {
    try {
      emit(ex, decode());
    } catch (const ModelError& e) {
      std::cerr << "warning: " << ex.id << ": " << e.what() << "\n";
      PipelineOutput failed;
      failed.unrecoverable = true;
      emit(ex, failed);
    }
  };

  if (!baseline_path.empty()) {
    LoadedModel base = load_model(baseline_path);
    Vocab vocab = Vocab::from_lines(base.vocab_lines);
    cfg.max_len = base.model.config().max_len - 1;
    for (const auto& ex : corpus)
      guarded(ex, [&] { return parse_baseline(base.model, vocab, ex.sentence, cfg); });
  } else {
    LoadedModel r2l = load_model(r2l_path);
    LoadedModel rgl = load_model(rgl_path);
    Vocab vocab = Vocab::from_lines(rgl.vocab_lines);
    cfg.max_len = rgl.model.config().max_len - 1;
    for (const auto& ex : corpus)
      guarded(ex, [&] {
        return parse_pipeline(r2l.model, rgl.model, vocab, ex.sentence, cfg,
                              !gate_trace.empty());
      });
  }
  write_output(out, blocks.str());
  if (!gate_trace.empty()) write_output(gate_trace, gates_tsv.str());
  return 0;
}

int cmd_grad_check(bool full, std::uint64_t seed) {
  int failures = 0;
  auto report = [&](const std::string& name, double err, double bound) {
    bool ok = err < bound;
    if (!ok) ++failures;
    std::cout << name << ": max_rel_err=" << fmt4(err) << " bound="
              << fmt4(bound) << (ok ? " ok" : " FAIL") << "\n";
  };

  {
    Rng rng(seed);
    std::vector<double> xd(6), wd(36);
    for (double& v : xd) v = rng.uniform(-1, 1);
    for (double& v : wd) v = rng.uniform(-1, 1);
    Tensor x = Tensor::from_data({1, 6}, xd).set_requires_grad(true);
    Tensor w = Tensor::from_data({6, 6}, wd);
    auto f = [&]() { return sum_all(mul(matmul(x, w), matmul(x, w))); };
    report("quadratic", grad_check(f, {x}, 1e-5), 1e-8);
  }
  {
    Rng rng(seed + 1);
    std::vector<double> xd(8);
    for (double& v : xd) v = rng.uniform(-2, 2);
    Tensor x = Tensor::from_data({2, 4}, xd).set_requires_grad(true);
    auto f = [&]() { return sum_all(sigmoid(tanh_op(sigmoid(x)))); };
    report("sigmoid_chain", grad_check(f, {x}, 1e-5), 1e-6);
  }
  {
    long d = 8;
    Rng rng(seed + 2);
    auto rand_tensor = [&](std::vector<long> shape, bool grad) {
      long n = 1;
      for (long s : shape) n *= s;
      std::vector<double> v(static_cast<std::size_t>(n));
      for (double& x : v) x = rng.uniform(-0.8, 0.8);
      Tensor t = Tensor::from_data(shape, v);
      if (grad) t.set_requires_grad(true);
      return t;
    };
    Tensor s_z = rand_tensor({3, d}, false);
    Tensor w = rand_tensor({d, d}, true);
    Tensor b1 = rand_tensor({d}, true);
    Tensor v = rand_tensor({d, 1}, true);
    Tensor b2 = rand_tensor({1}, true);
    auto f = [&]() {
      Tensor u = tanh_op(add_bias(matmul(s_z, w), b1));
      Tensor g = sigmoid(add_bias(matmul(u, v), b2));
      return sum_all(mul(g, g));
    };
    report("gate_subnetwork", grad_check(f, {w, b1, v, b2}, 1e-5), 1e-6);
  }

  if (full) {
    GenSpec spec;
    spec.n_examples = 4;
    spec.max_depth = 2;
    spec.max_children = 2;
    spec.concept_vocab_size = 10;
    spec.role_vocab_size = 3;
    spec.seed = seed;
    auto corpus = generate(spec);
    Vocab vocab = build_corpus_vocab(corpus);
    ModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.n_enc_layers = 1;
    cfg.n_graph_layers = 1;
    cfg.n_dec_layers = 1;
    cfg.vocab_size = vocab.size();
    cfg.max_len = 64;
    cfg.seed = seed;
    RglModel model(cfg);

    std::vector<TrainItem> batch;
    for (int i = 0; i < 2; ++i) {
      TrainItem item = tokenize_example(corpus[std::size_t(i)], vocab);
      item.yr_silver = tokenize_example(corpus[std::size_t(i + 2)], vocab).yr_gold;
      batch.push_back(item);
    }
    LossSchedule sched = LossSchedule::over_steps(100);
    double a = alpha(3, sched);
    // KL reference frozen at the base parameters (stop-gradient semantics)
    std::vector<Tensor> teacher_ref;
    for (const TrainItem& item : batch) {
      std::vector<int> dec_in{Vocab::kBos};
      dec_in.insert(dec_in.end(), item.y.begin(), item.y.end());
      teacher_ref.push_back(
          softmax_rows(model.forward(item.x, item.yr_gold, dec_in)).detach());
    }
    auto loss_fn = [&]() {
      Tensor total = Tensor::scalar(0.0);
      for (std::size_t bi = 0; bi < batch.size(); ++bi) {
        const TrainItem& item = batch[bi];
        std::vector<int> dec_in{Vocab::kBos};
        dec_in.insert(dec_in.end(), item.y.begin(), item.y.end());
        std::vector<int> target = item.y;
        target.push_back(Vocab::kEos);
        Tensor lt = model.forward(item.x, item.yr_gold, dec_in);
        Tensor ls = model.forward(item.x, item.yr_silver, dec_in);
        Tensor item_loss =
            add(add(scale(ce_loss(lt, target, Vocab::kPad), a),
                    scale(ce_loss(ls, target, Vocab::kPad), 1.0 - a)),
                kl_loss(teacher_ref[bi], softmax_rows(ls)));
        total = add(total, item_loss);
      }
      return scale(total, 1.0 / double(batch.size()));
    };
    std::vector<Tensor> params;
    for (auto& [name, t] : model.params()) params.push_back(t);
    report("full_model_loss", grad_check(loss_fn, params, 1e-5, 6, seed), 1e-3);
  }
  return failures == 0 ? 0 : 1;
}

int cmd_bench_latency(const std::string& corpus_path, const std::string& r2l_path,
                      const std::string& rgl_path, const std::string& baseline_path,
                      long len, long n_examples, int beam, int repeats) {
  auto corpus = load_examples(corpus_path);
  if (long(corpus.size()) > n_examples) corpus.resize(std::size_t(n_examples));

  LoadedModel r2l = load_model(r2l_path);
  LoadedModel rgl = load_model(rgl_path);
  LoadedModel base = load_model(baseline_path);
  Vocab vocab = Vocab::from_lines(rgl.vocab_lines);

  // fixed-length decodes (eos disabled), input-proportional budget (capped by
  // --len) so the ratio reflects the two-stage structure
  auto decode_fixed = [&](const RglModel& model, const std::vector<int>& x,
                          const std::vector<int>* yr) {
    NoGradScope inference_only;
    BeamConfig cfg;
    cfg.beam_size = beam;
    cfg.max_len = std::min(len, long(2 * x.size() + 8));
    Tensor h_s = model.encode_sentence(x);
    Tensor h_g;
    const Tensor* h_g_ptr = nullptr;
    if (yr) {
      h_g = model.encode_graph(*yr);
      h_g_ptr = &h_g;
    }
    StepFn step = [&](const std::vector<int>& prefix) {
      Tensor logits = model.decode_logits(h_s, h_g_ptr, prefix);
      Tensor lp = log_softmax_rows(logits);
      long m = lp.rows();
      std::vector<double> out(std::size_t(lp.cols()));
      for (long j = 0; j < lp.cols(); ++j) out[std::size_t(j)] = lp.at(m - 1, j);
      return out;
    };
    return beam_decode(step, cfg, Vocab::kBos, /*eos=*/-1);
  };

  using clock = std::chrono::steady_clock;
  std::vector<double> ratios;
  for (int rep = 0; rep < repeats; ++rep) {
    auto t0 = clock::now();
    for (const auto& ex : corpus) {
      std::vector<int> x = encode_sentence_words(vocab, ex.sentence);
      BeamResult yr = decode_fixed(r2l.model, x, nullptr);
      std::vector<int> yr_ids = yr.ids;
      decode_fixed(rgl.model, x, &yr_ids);
    }
    auto t1 = clock::now();
    for (const auto& ex : corpus) {
      std::vector<int> x = encode_sentence_words(vocab, ex.sentence);
      decode_fixed(base.model, x, nullptr);
    }
    auto t2 = clock::now();
    double pipeline_s = std::chrono::duration<double>(t1 - t0).count();
    double baseline_s = std::chrono::duration<double>(t2 - t1).count();
    ratios.push_back(pipeline_s / baseline_s);
    std::cout << "run " << rep << ": pipeline=" << fmt4(pipeline_s)
              << "s baseline=" << fmt4(baseline_s) << "s ratio="
              << fmt4(ratios.back()) << "\n";
  }
  std::sort(ratios.begin(), ratios.end());
  double median = ratios[ratios.size() / 2];
  std::cout << "median_ratio\t" << fmt4(median) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reverse-graph-linearization AMR parsing lab"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "global rng seed")->capture_default_str();

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
  GenSpec gspec;
  std::string gen_out = "corpus.amr", gen_split, gen_manifest;
  gen->add_option("--n", gspec.n_examples);
  gen->add_option("--max-depth", gspec.max_depth);
  gen->add_option("--max-children", gspec.max_children);
  gen->add_option("--concepts", gspec.concept_vocab_size);
  gen->add_option("--roles", gspec.role_vocab_size);
  gen->add_option("--reentrancy", gspec.reentrancy_prob);
  gen->add_option("--out", gen_out);
  gen->add_option("--split", gen_split, "train,dev,test ratios");
  gen->add_option("--manifest", gen_manifest, "dataset manifest TSV path");

  // linearize / delinearize / reverse-tokens
  auto* lin = app.add_subcommand("linearize", "graphs to token sequences");
  std::string lin_in, lin_order = "l2r", lin_out;
  lin->add_option("--in", lin_in)->required();
  lin->add_option("--order", lin_order, "l2r|r2l");
  lin->add_option("--out", lin_out);

  auto* delin = app.add_subcommand("delinearize", "token sequences to graphs");
  std::string delin_in, delin_out;
  delin->add_option("--in", delin_in)->required();
  delin->add_option("--out", delin_out);

  auto* rev = app.add_subcommand("reverse-tokens", "naive sequence reversal");
  std::string rev_in, rev_out;
  rev->add_option("--in", rev_in)->required();
  rev->add_option("--out", rev_out);

  // smatch / fine-grained
  auto* sm = app.add_subcommand("smatch", "corpus-level Smatch");
  std::string sm_pred, sm_gold, sm_out, sm_format = "tsv";
  int sm_restarts = 5;
  sm->add_option("--pred", sm_pred)->required();
  sm->add_option("--gold", sm_gold)->required();
  sm->add_option("--restarts", sm_restarts);
  sm->add_option("--out", sm_out);
  sm->add_option("--format", sm_format, "tsv|csv");

  auto* fg = app.add_subcommand("fine-grained", "fine-grained Smatch breakdown");
  std::string fg_pred, fg_gold, fg_out, fg_format = "tsv";
  int fg_restarts = 5;
  fg->add_option("--pred", fg_pred)->required();
  fg->add_option("--gold", fg_gold)->required();
  fg->add_option("--restarts", fg_restarts);
  fg->add_option("--out", fg_out);
  fg->add_option("--format", fg_format, "tsv|csv");

  // analysis
  auto* sl = app.add_subcommand("analyze-structure-loss",
                                "positional F1 / token accuracy curves");
  std::string sl_pred, sl_gold, sl_kind = "node", sl_out, sl_format = "tsv";
  long sl_bucket = 10;
  int sl_restarts = 5;
  sl->add_option("--pred", sl_pred)->required();
  sl->add_option("--gold", sl_gold)->required();
  sl->add_option("--kind", sl_kind, "node|relation|token");
  sl->add_option("--bucket-width", sl_bucket);
  sl->add_option("--restarts", sl_restarts);
  sl->add_option("--out", sl_out);
  sl->add_option("--format", sl_format, "tsv|csv");

  auto* ag = app.add_subcommand("analyze-gates", "gate-vs-position histogram");
  std::string ag_in, ag_out, ag_format = "tsv";
  long ag_bucket = 50;
  ag->add_option("--in", ag_in)->required();
  ag->add_option("--bucket-width", ag_bucket);
  ag->add_option("--out", ag_out);
  ag->add_option("--format", ag_format, "tsv|csv");

  auto* pe = app.add_subcommand("pearson", "sample Pearson correlation");
  std::string pe_xs, pe_ys, pe_xf, pe_yf;
  pe->add_option("--xs", pe_xs, "comma separated");
  pe->add_option("--ys", pe_ys, "comma separated");
  pe->add_option("--x-file", pe_xf);
  pe->add_option("--y-file", pe_yf);

  auto* al = app.add_subcommand("alpha", "loss scheduler weight");
  double al_k1 = 0.8;
  std::string al_k2 = "auto";
  long al_steps = 1000, al_at = 0;
  al->add_option("--k1", al_k1);
  al->add_option("--k2", al_k2, "decay rate or 'auto' for ln(4)/steps");
  al->add_option("--steps", al_steps);
  al->add_option("--at", al_at);

  // train / silver / infer
  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_mode = "rgl", tr_corpus, tr_silver, tr_config;
  std::string tr_out = "model.ckpt", tr_metrics;
  std::vector<std::string> tr_ablate;
  TrainSettings settings;
  tr->add_option("--mode", tr_mode, "baseline|rgl|r2l|weak-r2l");
  tr->add_option("--corpus", tr_corpus)->required();
  tr->add_option("--silver", tr_silver, "silver R2L token TSV (rgl mode)");
  tr->add_option("--config", tr_config, "key-value training config");
  tr->add_option("--steps", settings.steps);
  tr->add_option("--batch", settings.batch);
  tr->add_option("--lr", settings.lr);
  tr->add_option("--fraction", settings.fraction, "weak-r2l subsample");
  tr->add_option("--ablate", tr_ablate,
                 "no-scheduler|no-distill|no-silver|gate-zero");
  tr->add_option("--out", tr_out);
  tr->add_option("--metrics", tr_metrics, "per-step TSV log");

  auto* si = app.add_subcommand("silver", "generate silver reverse linearizations");
  std::string si_model, si_corpus, si_out;
  int si_beam = 5;
  si->add_option("--model", si_model)->required();
  si->add_option("--corpus", si_corpus)->required();
  si->add_option("--beam", si_beam);
  si->add_option("--out", si_out);

  auto* inf = app.add_subcommand("infer", "two-stage (or baseline) parsing");
  std::string in_r2l, in_rgl, in_baseline, in_in, in_out, in_gates;
  int in_beam = 5;
  inf->add_option("--r2l", in_r2l, "R2L parser checkpoint");
  inf->add_option("--rgl", in_rgl, "dual-attention model checkpoint");
  inf->add_option("--baseline", in_baseline, "one-pass baseline checkpoint");
  inf->add_option("--in", in_in)->required();
  inf->add_option("--beam", in_beam);
  inf->add_option("--out", in_out);
  inf->add_option("--gate-trace", in_gates, "gate TSV output");

  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient checks");
  bool gc_full = false;
  gc->add_flag("--full", gc_full, "include the full two-pass model loss");

  auto* bl = app.add_subcommand("bench-latency",
                                "two-stage vs one-pass wall clock");
  std::string bl_corpus, bl_r2l, bl_rgl, bl_baseline;
  long bl_len = 48, bl_n = 8;
  int bl_beam = 5, bl_repeats = 3;
  bl->add_option("--corpus", bl_corpus)->required();
  bl->add_option("--r2l", bl_r2l)->required();
  bl->add_option("--rgl", bl_rgl)->required();
  bl->add_option("--baseline", bl_baseline)->required();
  bl->add_option("--len", bl_len, "forced decode length");
  bl->add_option("--n", bl_n, "examples to decode");
  bl->add_option("--beam", bl_beam);
  bl->add_option("--repeats", bl_repeats);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      gspec.seed = seed;
      return cmd_gen_corpus(gspec, gen_out, gen_split, gen_manifest);
    }
    if (*lin) return cmd_linearize(lin_in, lin_order, lin_out);
    if (*delin) return cmd_delinearize(delin_in, delin_out);
    if (*rev) return cmd_reverse_tokens(rev_in, rev_out);
    if (*sm)
      return cmd_smatch(sm_pred, sm_gold, sm_restarts, seed, sm_out,
                        sm_format == "csv" ? ',' : '\t');
    if (*fg)
      return cmd_fine_grained(fg_pred, fg_gold, fg_restarts, seed, fg_out,
                              fg_format == "csv" ? ',' : '\t');
    if (*sl)
      return cmd_structure_loss(sl_pred, sl_gold, sl_kind, sl_bucket,
                                sl_restarts, seed, sl_out,
                                sl_format == "csv" ? ',' : '\t');
    if (*ag)
      return cmd_analyze_gates(ag_in, ag_bucket, ag_out,
                               ag_format == "csv" ? ',' : '\t');
    if (*pe) {
      double r = pearson(parse_series(pe_xs, pe_xf), parse_series(pe_ys, pe_yf));
      std::cout << fmt4(r) << "\n";
      return 0;
    }
    if (*al) {
      LossSchedule s = LossSchedule::over_steps(al_steps);
      s.k1 = al_k1;
      if (al_k2 != "auto") s.k2 = std::stod(al_k2);
      std::cout << fmt4(alpha(al_at, s)) << "\n";
      return 0;
    }
    if (*tr) {
      settings.seed = seed;
      if (!tr_config.empty()) {
        TrainSettings from_flags = settings;  // explicit flags beat the file
        settings.apply_config(parse_key_value(read_file(tr_config)));
        if (tr->count("--steps")) settings.steps = from_flags.steps;
        if (tr->count("--batch")) settings.batch = from_flags.batch;
        if (tr->count("--lr")) settings.lr = from_flags.lr;
        if (tr->count("--fraction")) settings.fraction = from_flags.fraction;
        if (app.count("--seed")) settings.seed = seed;
      }
      return cmd_train(tr_mode, tr_corpus, tr_silver, settings, tr_ablate,
                       tr_out, tr_metrics);
    }
    if (*si) return cmd_silver(si_model, si_corpus, si_beam, si_out);
    if (*inf) {
      if (in_baseline.empty() && (in_r2l.empty() || in_rgl.empty()))
        throw std::runtime_error("infer needs --baseline or --r2l with --rgl");
      return cmd_infer(in_r2l, in_rgl, in_baseline, in_in, in_beam, in_out,
                       in_gates);
    }
    if (*gc) return cmd_grad_check(gc_full, seed);
    if (*bl)
      return cmd_bench_latency(bl_corpus, bl_r2l, bl_rgl, bl_baseline, bl_len,
                               bl_n, bl_beam, bl_repeats);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
