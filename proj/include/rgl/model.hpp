#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgl/analysis.hpp"
#include "rgl/tensor.hpp"

namespace rgl {

enum class ModelErrorKind { TooLong, UnknownToken, BadConfig };

struct ModelError : std::runtime_error {
  ModelError(ModelErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
  ModelErrorKind kind;
};

struct ModelConfig {
  long d_model = 64;
  long n_heads = 2;
  long n_enc_layers = 2;
  long n_graph_layers = 2;  // 0 = pass-through graph encoder (ablation floor)
  long n_dec_layers = 2;
  long vocab_size = 0;
  long max_len = 256;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
};

struct LnParams {
  Tensor gain, bias;
};
struct AttnParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};
struct FfnParams {
  Tensor w1, b1, w2, b2;
};
struct GateParams {
  Tensor w;   // [d, d]
  Tensor b1;  // [d]
  Tensor v;   // [d, 1]
  Tensor b2;  // [1]
};

struct EncLayer {
  LnParams ln1, ln2;
  AttnParams attn;
  FfnParams ffn;
};

struct DecLayer {
  LnParams ln1, ln2, ln3;
  AttnParams self_attn, cross_s, cross_g;
  GateParams gate;
  FfnParams ffn;
};

// One gated dual cross-attention application.
struct DecoderLayerOutput {
  Tensor s_z;  // query stream the sublayer saw
  Tensor s_s;  // sentence cross-attention output
  Tensor s_g;  // graph cross-attention output
  Tensor s_o;  // g*s_g + (1-g)*s_s
  Tensor g;    // [k, 1] gate, one value per target position
};

enum class GateForce { None, Zero };

// Sentence encoder, graph encoder and mixed decoder with gated dual
// cross-attention, pre-norm residuals throughout, embeddings shared between
// both encoders and the decoder (tied output projection). baseline_forward
// runs the same decoder without the graph branch and is bit-identical to
// forward with the gate forced to zero.
class RglModel {
 public:
  explicit RglModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }

  Tensor encode_sentence(const std::vector<int>& ids) const;
  // n_graph_layers == 0 degrades to the embedded inputs (with positions)
  Tensor encode_graph(const std::vector<int>& ids) const;

  // causal decoder over y_prefix; logits shape (|y_prefix|, vocab)
  Tensor forward(const std::vector<int>& x_ids, const std::vector<int>& yr_ids,
                 const std::vector<int>& y_prefix,
                 std::vector<GateRecord>* trace = nullptr,
                 GateForce force = GateForce::None) const;

  // plain seq2seq path (no graph encoder, single cross-attention)
  Tensor baseline_forward(const std::vector<int>& x_ids,
                          const std::vector<int>& y_prefix) const;

  // decoder over precomputed encoder states; h_g == nullptr selects the
  // baseline path
  Tensor decode_logits(const Tensor& h_s, const Tensor* h_g,
                       const std::vector<int>& y_prefix,
                       std::vector<GateRecord>* trace = nullptr,
                       GateForce force = GateForce::None) const;

  // the gated dual cross-attention operator itself (exposed for tests);
  // s_z is the (already normalized) query stream
  DecoderLayerOutput dual_cross_attention(const Tensor& s_z, const Tensor& h_s,
                                          const Tensor& h_g, const DecLayer& layer,
                                          GateForce force = GateForce::None) const;

  // stable enumeration: initialization order, optimizer order, checkpoint
  // record order
  std::vector<std::pair<std::string, Tensor>> params() const;

  std::vector<DecLayer>& decoder_layers() { return dec_; }
  const std::vector<DecLayer>& decoder_layers() const { return dec_; }

  void save(const std::string& path, const std::vector<std::string>& vocab_lines) const;

 private:
  ModelConfig cfg_;
  Tensor embedding_;  // [vocab, d]
  std::vector<EncLayer> enc_, genc_;
  LnParams enc_final_, genc_final_, dec_final_;
  std::vector<DecLayer> dec_;
  std::vector<double> pos_table_;  // sinusoidal, max_len x d

  void init_params();
  Tensor embed(const std::vector<int>& ids) const;
  Tensor run_encoder(const std::vector<EncLayer>& layers, const LnParams& fin,
                     const std::vector<int>& ids, bool skip_when_empty) const;
  void check_ids(const std::vector<int>& ids) const;
};

struct LoadedModel {
  RglModel model;
  std::vector<std::string> vocab_lines;
};

LoadedModel load_model(const std::string& path);

}  // namespace rgl
