#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgl/corpus.hpp"
#include "rgl/linearize.hpp"
#include "rgl/model.hpp"
#include "rgl/tensor.hpp"
#include "rgl/vocab.hpp"

namespace rgl {

struct TrainingError : std::runtime_error {
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- losses -----------------------------------------------------------------

// mean negative log-likelihood over non-pad target positions
Tensor ce_loss(const Tensor& logits, const std::vector<int>& targets,
               int pad_id = -1);

// sum_i p_i log(p_i / q_i) over the vocabulary, averaged over positions.
// p is the teacher distribution and is treated as constant (no gradient).
Tensor kl_loss(const Tensor& p, const Tensor& q);

// ---- loss scheduler -----------------------------------------------------------

// alpha_i = k1 * exp(-k2 * i), clamped into [lower, upper] against the last
// ulp of rounding at the endpoints.
struct LossSchedule {
  double k1 = 0.8;
  double k2 = 0.0;
  long total_steps = 0;
  double lower = 0.2;
  double upper = 0.8;

  // k1 = upper, k2 = ln(upper/lower) / total so alpha decays 0.8 -> 0.2
  static LossSchedule over_steps(long total_steps);
};

double alpha(long i, const LossSchedule& s);  // throws on i outside [0, total]

// ---- optimizer ----------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  long warmup_steps = 25;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// the warmup fraction of the run, not an absolute count
inline long default_warmup(long steps) { return std::max<long>(10, steps / 20); }

class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);
  void step();       // applies grads, then zeroes them
  long steps_done() const { return t_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

// ---- training loop -------------------------------------------------------------

// One tokenized example. yr_silver empty => no silver available (falls back
// to gold, flagged in stats).
struct TrainItem {
  std::vector<int> x;
  std::vector<int> y;         // L2R target ids
  std::vector<int> yr_gold;   // R2L ids
  std::vector<int> yr_silver;
};

TrainItem tokenize_example(const Example& ex, const Vocab& vocab);

struct StepStats {
  long step = 0;
  double alpha = 0.0;
  double total = 0.0;
  double ce_teacher = 0.0;
  double ce_student = 0.0;
  double kl = 0.0;
};

struct TrainerOptions {
  LossSchedule schedule;
  AdamConfig adam;
  bool use_scheduler = true;  // off: alpha fixed at 0.5
  bool use_distill = true;    // off: KL term dropped
  bool use_silver = true;     // off: student pass sees gold
  bool gate_zero = false;     // force g = 0 (graph branch ablated)
};

// Two-pass self-distillation: teacher forward on (x, gold reverse), student
// forward on (x, silver reverse), shared parameters, KL pulling student
// toward the detached teacher, alpha-scheduled CE mix.
class Trainer {
 public:
  Trainer(RglModel& model, TrainerOptions opt);

  StepStats train_step(const std::vector<TrainItem>& batch);

  // plain seq2seq CE step (baseline and r2l parsers); r2l_target selects
  // yr_gold as the decoder target instead of y
  StepStats train_step_plain(const std::vector<TrainItem>& batch,
                             bool r2l_target);

  long step() const { return step_; }

 private:
  RglModel& model_;
  TrainerOptions opt_;
  Adam adam_;
  long step_ = 0;
};

// ---- weak parser + silver data ---------------------------------------------------

struct SilverResult {
  TokenSeq seq;  // order tag R2L
  bool failed = false;
};

struct BeamConfig;  // inference.hpp

// Seed-deterministic subsample of ceil(fraction * n) examples.
std::vector<std::size_t> sample_fraction(std::size_t n, double fraction,
                                         std::uint64_t seed);

// Trains a plain seq2seq R2L parser on a seeded fraction of the corpus.
RglModel train_weak_r2l(const std::vector<Example>& corpus, const Vocab& vocab,
                        const ModelConfig& cfg, const TrainerOptions& opt,
                        long steps, long batch_size, double fraction,
                        std::uint64_t seed,
                        std::vector<StepStats>* log = nullptr);

// Beam-decodes the reverse linearization of every example; per-item failures
// are recorded, never thrown.
std::vector<SilverResult> generate_silver(const RglModel& r2l_parser,
                                          const Vocab& vocab,
                                          const std::vector<Example>& corpus,
                                          int beam_size, long max_len);

// ---- config files -----------------------------------------------------------------

// "key value" / "key=value" lines, '#' comments
std::map<std::string, std::string> parse_key_value(const std::string& text);

std::string format_step_stats_tsv_header();
std::string format_step_stats_tsv(const StepStats& s);

}  // namespace rgl
