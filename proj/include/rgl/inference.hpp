#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rgl/analysis.hpp"
#include "rgl/linearize.hpp"
#include "rgl/model.hpp"
#include "rgl/vocab.hpp"

namespace rgl {

struct BeamConfig {
  int beam_size = 5;
  long max_len = 256;
  double length_penalty = 1.0;  // 1.0 = mean log-prob
};

struct BeamResult {
  std::vector<int> ids;  // generated tokens, EOS included when reached
  double score = 0.0;    // length-normalized log-prob
  bool ended_with_eos = false;
};

// log-probabilities over the vocabulary for the next token, given the
// decoder prefix (BOS included)
using StepFn = std::function<std::vector<double>(const std::vector<int>&)>;

// Length-normalized beam search, fully deterministic: candidate ties break
// toward the lower token id, so beam_size == 1 is exactly greedy argmax.
// eos < 0 disables termination (fixed-length decode for benchmarks).
BeamResult beam_decode(const StepFn& step, const BeamConfig& cfg, int bos,
                       int eos);

// Decodes with encoder states computed once; h_g selects the dual-attention
// path, trace replays gates for the returned hypothesis.
BeamResult beam_decode_model(const RglModel& model, const std::vector<int>& x_ids,
                             const std::vector<int>* yr_ids,
                             const BeamConfig& cfg,
                             std::vector<GateRecord>* trace = nullptr);

struct PipelineOutput {
  std::optional<AmrGraph> graph;  // empty when delinearize was unrecoverable
  TokenSeq tokens;                // the decoded L2R token sequence
  TokenSeq reverse_tokens;        // the intermediate R2L hypothesis
  std::vector<GateRecord> gates;  // filled when tracing
  std::size_t decoded_length = 0; // generated tokens incl. EOS when reached
  bool unrecoverable = false;
};

// Two-stage inference: the R2L parser proposes the reverse linearization,
// then the dual-attention model decodes the standard L2R sequence from the
// sentence plus that hypothesis.
PipelineOutput parse_pipeline(const RglModel& r2l_parser, const RglModel& rgl_model,
                              const Vocab& vocab,
                              const std::vector<std::string>& sentence,
                              const BeamConfig& cfg, bool trace_gates = false);

// One-pass baseline decode (the ablation comparator and latency reference).
PipelineOutput parse_baseline(const RglModel& baseline, const Vocab& vocab,
                              const std::vector<std::string>& sentence,
                              const BeamConfig& cfg);

// Token strings -> ids helper shared by decoding paths.
std::vector<int> encode_sentence_words(const Vocab& vocab,
                                       const std::vector<std::string>& words);
std::vector<int> encode_token_seq(const Vocab& vocab, const TokenSeq& seq);
TokenSeq decode_token_ids(const Vocab& vocab, const std::vector<int>& ids,
                          Order order);

}  // namespace rgl
