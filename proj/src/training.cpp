#include "rgl/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rgl/inference.hpp"
#include "rgl/rng.hpp"

namespace rgl {

Tensor ce_loss(const Tensor& logits, const std::vector<int>& targets,
               int pad_id) {
  if (long(targets.size()) != logits.rows())
    throw NumError("shape mismatch: ce_loss targets vs logits rows");
  Tensor lp = log_softmax_rows(logits);
  Tensor picked = pick(lp, targets);  // [m,1]
  long m = long(targets.size());
  std::vector<double> mask(std::size_t(m), 0.0);
  long count = 0;
  for (long i = 0; i < m; ++i) {
    if (targets[std::size_t(i)] != pad_id) {
      mask[std::size_t(i)] = 1.0;
      ++count;
    }
  }
  if (count == 0) return Tensor::scalar(0.0);
  Tensor masked = mul(picked, Tensor::from_data({m, 1}, std::move(mask)));
  return scale(sum_all(masked), -1.0 / double(count));
}

Tensor kl_loss(const Tensor& p, const Tensor& q) {
  if (p.shape() != q.shape())
    throw NumError("shape mismatch: kl_loss distributions");
  Tensor p_const = p.detach();  // teacher is constant by contract
  long m = p_const.rows();

  // constant sum_i p log p term
  double plogp = 0.0;
  for (double v : p_const.data())
    if (v > 0.0) plogp += v * std::log(v);

  Tensor cross = sum_all(mul(p_const, log_op(q)));  // sum p log q
  return scale(add(Tensor::scalar(plogp), scale(cross, -1.0)), 1.0 / double(m));
}

LossSchedule LossSchedule::over_steps(long total_steps) {
  LossSchedule s;
  s.total_steps = total_steps;
  s.k1 = s.upper;
  s.k2 = total_steps > 0 ? std::log(s.upper / s.lower) / double(total_steps) : 0.0;
  return s;
}

double alpha(long i, const LossSchedule& s) {
  if (i < 0 || i > s.total_steps)
    throw TrainingError("alpha step out of range: " + std::to_string(i));
  double a = s.k1 * std::exp(-s.k2 * double(i));
  return std::clamp(a, s.lower, s.upper);
}

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (const auto& p : params_) {
    m_.emplace_back(std::size_t(p.numel()), 0.0);
    v_.emplace_back(std::size_t(p.numel()), 0.0);
  }
}

void Adam::step() {
  ++t_;
  double lr = cfg_.lr;
  if (cfg_.warmup_steps > 0 && t_ <= cfg_.warmup_steps)
    lr *= double(t_) / double(cfg_.warmup_steps);
  double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    const std::vector<double>& g = params_[pi].grad();
    std::vector<double>& val = params_[pi].mutable_data();
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    for (std::size_t i = 0; i < val.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      double mh = m[i] / bc1;
      double vh = v[i] / bc2;
      val[i] -= lr * mh / (std::sqrt(vh) + cfg_.eps);
    }
    params_[pi].zero_grad();
  }
}

TrainItem tokenize_example(const Example& ex, const Vocab& vocab) {
  TrainItem item;
  item.x = vocab.encode(ex.sentence);
  TokenSeq l2r = linearize(ex.graph, Order::L2R);
  TokenSeq r2l = linearize(ex.graph, Order::R2L);
  for (const Token& t : l2r.tokens) item.y.push_back(vocab.id(render_token(t)));
  for (const Token& t : r2l.tokens)
    item.yr_gold.push_back(vocab.id(render_token(t)));
  return item;
}

Trainer::Trainer(RglModel& model, TrainerOptions opt)
    : model_(model), opt_(opt), adam_([&] {
        std::vector<Tensor> ps;
        for (auto& [name, t] : model.params()) ps.push_back(t);
        return ps;
      }(), opt.adam) {}

namespace {

// decoder input [BOS] + y, target y + [EOS]
std::pair<std::vector<int>, std::vector<int>> teacher_forcing(
    const std::vector<int>& y) {
  std::vector<int> dec_in{Vocab::kBos};
  dec_in.insert(dec_in.end(), y.begin(), y.end());
  std::vector<int> target = y;
  target.push_back(Vocab::kEos);
  return {std::move(dec_in), std::move(target)};
}

Tensor mean_of(const std::vector<Tensor>& xs) {
  Tensor acc = xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i) acc = add(acc, xs[i]);
  return scale(acc, 1.0 / double(xs.size()));
}

}  // namespace

StepStats Trainer::train_step(const std::vector<TrainItem>& batch) {
  if (batch.empty()) throw TrainingError("empty batch");
  double a = opt_.use_scheduler ? alpha(std::min(step_, opt_.schedule.total_steps),
                                        opt_.schedule)
                                : 0.5;
  GateForce force = opt_.gate_zero ? GateForce::Zero : GateForce::None;

  std::vector<Tensor> ce_t_items, ce_s_items, kl_items;
  for (const TrainItem& item : batch) {
    auto [dec_in, target] = teacher_forcing(item.y);

    Tensor logits_t = model_.forward(item.x, item.yr_gold, dec_in, nullptr, force);
    ce_t_items.push_back(ce_loss(logits_t, target, Vocab::kPad));

    const std::vector<int>& silver =
        (opt_.use_silver && !item.yr_silver.empty()) ? item.yr_silver
                                                     : item.yr_gold;
    Tensor logits_s = model_.forward(item.x, silver, dec_in, nullptr, force);
    ce_s_items.push_back(ce_loss(logits_s, target, Vocab::kPad));

    if (opt_.use_distill) {
      Tensor p = softmax_rows(logits_t).detach();
      Tensor q = softmax_rows(logits_s);
      kl_items.push_back(kl_loss(p, q));
    }
  }

  Tensor ce_t = mean_of(ce_t_items);
  Tensor ce_s = mean_of(ce_s_items);
  Tensor kl = opt_.use_distill ? mean_of(kl_items) : Tensor::scalar(0.0);
  Tensor total = add(add(scale(ce_t, a), scale(ce_s, 1.0 - a)), kl);

  backward(total);
  adam_.step();

  StepStats stats;
  stats.step = step_++;
  stats.alpha = a;
  stats.total = total.at(0);
  stats.ce_teacher = ce_t.at(0);
  stats.ce_student = ce_s.at(0);
  stats.kl = kl.at(0);
  return stats;
}

StepStats Trainer::train_step_plain(const std::vector<TrainItem>& batch,
                                    bool r2l_target) {
  if (batch.empty()) throw TrainingError("empty batch");
  std::vector<Tensor> ce_items;
  for (const TrainItem& item : batch) {
    const std::vector<int>& y = r2l_target ? item.yr_gold : item.y;
    auto [dec_in, target] = teacher_forcing(y);
    Tensor logits = model_.baseline_forward(item.x, dec_in);
    ce_items.push_back(ce_loss(logits, target, Vocab::kPad));
  }
  Tensor ce = mean_of(ce_items);
  backward(ce);
  adam_.step();

  StepStats stats;
  stats.step = step_++;
  stats.alpha = 1.0;
  stats.total = ce.at(0);
  stats.ce_teacher = ce.at(0);
  stats.ce_student = ce.at(0);
  stats.kl = 0.0;
  return stats;
}

std::vector<std::size_t> sample_fraction(std::size_t n, double fraction,
                                         std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw TrainingError("fraction must be in (0, 1]");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::size_t keep = std::size_t(std::ceil(fraction * double(n)));
  keep = std::max<std::size_t>(1, std::min(keep, n));
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

RglModel train_weak_r2l(const std::vector<Example>& corpus, const Vocab& vocab,
                        const ModelConfig& cfg, const TrainerOptions& opt,
                        long steps, long batch_size, double fraction,
                        std::uint64_t seed, std::vector<StepStats>* log) {
  if (corpus.empty())
    throw CorpusError(CorpusErrorKind::EmptyCorpus, "empty corpus");
  std::vector<std::size_t> subset =
      sample_fraction(corpus.size(), fraction, seed);

  std::vector<TrainItem> items;
  items.reserve(subset.size());
  for (std::size_t idx : subset)
    items.push_back(tokenize_example(corpus[idx], vocab));

  RglModel model(cfg);
  Trainer trainer(model, opt);
  Rng rng(seed ^ 0x5eedULL);
  for (long s = 0; s < steps; ++s) {
    std::vector<TrainItem> batch;
    for (long b = 0; b < batch_size; ++b)
      batch.push_back(items[rng.uniform_int(items.size())]);
    StepStats st = trainer.train_step_plain(batch, /*r2l_target=*/true);
    if (log) log->push_back(st);
  }
  return model;
}

std::vector<SilverResult> generate_silver(const RglModel& r2l_parser,
                                          const Vocab& vocab,
                                          const std::vector<Example>& corpus,
                                          int beam_size, long max_len) {
  std::vector<SilverResult> out;
  out.reserve(corpus.size());
  for (const Example& ex : corpus) {
    SilverResult r;
    try {
      std::vector<int> x = encode_sentence_words(vocab, ex.sentence);
      BeamConfig cfg;
      cfg.beam_size = beam_size;
      // decode budget proportional to the input; linearizations of the
      // synthetic verbalization are at most ~1.4x the sentence length
      cfg.max_len = std::min(max_len, long(2 * x.size() + 16));
      BeamResult hyp = beam_decode_model(r2l_parser, x, nullptr, cfg);
      r.seq = decode_token_ids(vocab, hyp.ids, Order::R2L);
      r.failed = r.seq.tokens.empty();
    } catch (const std::exception&) {
      r.failed = true;  // recorded, never thrown
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::map<std::string, std::string> parse_key_value(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::replace(line.begin(), line.end(), '=', ' ');
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::string value, word;
    while (ls >> word) {
      if (!value.empty()) value += ' ';
      value += word;
    }
    out[key] = value;
  }
  return out;
}

std::string format_step_stats_tsv_header() {
  return "step\talpha\tL\tL_CE_T\tL_CE_S\tL_KL";
}

std::string format_step_stats_tsv(const StepStats& s) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%ld\t%.4f\t%.4f\t%.4f\t%.4f\t%.4f", s.step,
                s.alpha, s.total, s.ce_teacher, s.ce_student, s.kl);
  return buf;
}

}  // namespace rgl
