#include "rgl/inference.hpp"

#include <algorithm>
#include <cmath>

namespace rgl {

namespace {

struct Hyp {
  std::vector<int> ids;  // includes BOS
  double logp = 0.0;
};

double norm_score(double logp, std::size_t gen_len, double penalty) {
  double len = double(std::max<std::size_t>(gen_len, 1));
  return logp / std::pow(len, penalty);
}

}  // namespace

BeamResult beam_decode(const StepFn& step, const BeamConfig& cfg, int bos,
                       int eos) {
  std::vector<Hyp> live{{{bos}, 0.0}};
  struct Done {
    std::vector<int> ids;
    double score;
  };
  std::vector<Done> finished;

  for (long t = 0; t < cfg.max_len && !live.empty(); ++t) {
    struct Cand {
      std::size_t hyp;
      int tok;
      double logp;
    };
    std::vector<Cand> cands;
    for (std::size_t h = 0; h < live.size(); ++h) {
      std::vector<double> lp = step(live[h].ids);
      cands.reserve(cands.size() + lp.size());
      for (std::size_t v = 0; v < lp.size(); ++v)
        cands.push_back({h, int(v), live[h].logp + lp[v]});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.tok < b.tok;
    });

    std::vector<Hyp> next;
    for (const Cand& c : cands) {
      if (int(next.size()) >= cfg.beam_size) break;
      Hyp h = live[c.hyp];
      h.ids.push_back(c.tok);
      h.logp = c.logp;
      if (c.tok == eos) {
        finished.push_back(
            {h.ids, norm_score(h.logp, h.ids.size() - 1, cfg.length_penalty)});
        // a finished hypothesis frees its beam slot
        continue;
      }
      next.push_back(std::move(h));
    }
    live = std::move(next);
    if (int(finished.size()) >= cfg.beam_size) break;
  }

  BeamResult res;
  if (!finished.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < finished.size(); ++i)
      if (finished[i].score > finished[best].score) best = i;
    res.ids.assign(finished[best].ids.begin() + 1, finished[best].ids.end());
    res.score = finished[best].score;
    res.ended_with_eos = true;
    return res;
  }
  if (!live.empty()) {
    std::size_t best = 0;
    double best_score =
        norm_score(live[0].logp, live[0].ids.size() - 1, cfg.length_penalty);
    for (std::size_t i = 1; i < live.size(); ++i) {
      double s = norm_score(live[i].logp, live[i].ids.size() - 1,
                            cfg.length_penalty);
      if (s > best_score) {
        best = i;
        best_score = s;
      }
    }
    res.ids.assign(live[best].ids.begin() + 1, live[best].ids.end());
    res.score = best_score;
  }
  return res;
}

BeamResult beam_decode_model(const RglModel& model, const std::vector<int>& x_ids,
                             const std::vector<int>* yr_ids,
                             const BeamConfig& cfg,
                             std::vector<GateRecord>* trace) {
  NoGradScope inference_only;
  Tensor h_s = model.encode_sentence(x_ids);
  Tensor h_g;
  if (yr_ids) h_g = model.encode_graph(*yr_ids);
  const Tensor* h_g_ptr = yr_ids ? &h_g : nullptr;

  StepFn step = [&](const std::vector<int>& prefix) {
    Tensor logits = model.decode_logits(h_s, h_g_ptr, prefix);
    long m = logits.rows();
    Tensor lp = log_softmax_rows(logits);
    std::vector<double> out(std::size_t(lp.cols()));
    for (long j = 0; j < lp.cols(); ++j) out[std::size_t(j)] = lp.at(m - 1, j);
    return out;
  };

  BeamConfig capped = cfg;
  capped.max_len = std::min(cfg.max_len, model.config().max_len - 1);
  BeamResult res = beam_decode(step, capped, Vocab::kBos, Vocab::kEos);

  if (trace && !res.ids.empty()) {
    // replay the chosen hypothesis once: row i predicts generated token i
    std::vector<int> dec_in{Vocab::kBos};
    dec_in.insert(dec_in.end(), res.ids.begin(), res.ids.end() - 1);
    model.decode_logits(h_s, h_g_ptr, dec_in, trace);
  }
  return res;
}

std::vector<int> encode_sentence_words(const Vocab& vocab,
                                       const std::vector<std::string>& words) {
  return vocab.encode(words);
}

std::vector<int> encode_token_seq(const Vocab& vocab, const TokenSeq& seq) {
  std::vector<int> out;
  out.reserve(seq.tokens.size());
  for (const Token& t : seq.tokens) out.push_back(vocab.id(render_token(t)));
  return out;
}

TokenSeq decode_token_ids(const Vocab& vocab, const std::vector<int>& ids,
                          Order order) {
  std::string line;
  for (int id : ids) {
    if (id == Vocab::kEos || id == Vocab::kBos || id == Vocab::kPad) continue;
    if (!line.empty()) line += ' ';
    line += vocab.token(id);
  }
  return lex_tokens(line, order);
}

PipelineOutput parse_pipeline(const RglModel& r2l_parser, const RglModel& rgl_model,
                              const Vocab& vocab,
                              const std::vector<std::string>& sentence,
                              const BeamConfig& beam_cfg, bool trace_gates) {
  PipelineOutput out;
  std::vector<int> x = encode_sentence_words(vocab, sentence);
  BeamConfig cfg = beam_cfg;
  cfg.max_len = std::min(cfg.max_len, long(2 * x.size() + 16));

  BeamResult yr_hyp = beam_decode_model(r2l_parser, x, nullptr, cfg);
  out.reverse_tokens = decode_token_ids(vocab, yr_hyp.ids, Order::R2L);

  std::vector<int> yr_ids = yr_hyp.ids;
  if (!yr_ids.empty() && yr_ids.back() == Vocab::kEos) yr_ids.pop_back();
  if (yr_ids.empty()) yr_ids.push_back(Vocab::kUnk);  // degenerate R2L pass

  BeamResult y_hyp = beam_decode_model(rgl_model, x, &yr_ids, cfg,
                                       trace_gates ? &out.gates : nullptr);
  out.decoded_length = y_hyp.ids.size();
  out.tokens = decode_token_ids(vocab, y_hyp.ids, Order::L2R);
  try {
    out.graph = delinearize(out.tokens);
  } catch (const DelinearizeError&) {
    out.unrecoverable = true;
  }
  return out;
}

PipelineOutput parse_baseline(const RglModel& baseline, const Vocab& vocab,
                              const std::vector<std::string>& sentence,
                              const BeamConfig& beam_cfg) {
  PipelineOutput out;
  std::vector<int> x = encode_sentence_words(vocab, sentence);
  BeamConfig cfg = beam_cfg;
  cfg.max_len = std::min(cfg.max_len, long(2 * x.size() + 16));
  BeamResult y_hyp = beam_decode_model(baseline, x, nullptr, cfg);
  out.decoded_length = y_hyp.ids.size();
  out.tokens = decode_token_ids(vocab, y_hyp.ids, Order::L2R);
  try {
    out.graph = delinearize(out.tokens);
  } catch (const DelinearizeError&) {
    out.unrecoverable = true;
  }
  return out;
}

}  // namespace rgl
