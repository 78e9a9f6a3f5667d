#include "rgl/model.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "rgl/checkpoint.hpp"
#include "rgl/rng.hpp"

namespace rgl {

void ModelConfig::validate() const {
  auto bad = [](const std::string& msg) {
    throw ModelError(ModelErrorKind::BadConfig, msg);
  };
  if (d_model < 1 || n_heads < 1 || n_enc_layers < 1 || n_dec_layers < 1 ||
      vocab_size < 1 || max_len < 1)
    bad("all counts must be >= 1");
  if (n_graph_layers < 0) bad("n_graph_layers must be >= 0");
  if (d_model % n_heads != 0) bad("d_model must be divisible by n_heads");
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "d_model " << d_model << "\n"
      << "n_heads " << n_heads << "\n"
      << "n_enc_layers " << n_enc_layers << "\n"
      << "n_graph_layers " << n_graph_layers << "\n"
      << "n_dec_layers " << n_dec_layers << "\n"
      << "vocab_size " << vocab_size << "\n"
      << "max_len " << max_len << "\n"
      << "seed " << seed << "\n";
  return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig cfg;
  std::istringstream in(text);
  std::string key;
  while (in >> key) {
    if (key == "d_model") in >> cfg.d_model;
    else if (key == "n_heads") in >> cfg.n_heads;
    else if (key == "n_enc_layers") in >> cfg.n_enc_layers;
    else if (key == "n_graph_layers") in >> cfg.n_graph_layers;
    else if (key == "n_dec_layers") in >> cfg.n_dec_layers;
    else if (key == "vocab_size") in >> cfg.vocab_size;
    else if (key == "max_len") in >> cfg.max_len;
    else if (key == "seed") in >> cfg.seed;
    else {
      std::string rest;
      std::getline(in, rest);
    }
  }
  return cfg;
}

namespace {

Tensor make_param(std::vector<long> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  t.set_requires_grad(true);
  return t;
}

LnParams make_ln(long d) {
  LnParams p{make_param({d}), make_param({d})};
  std::fill(p.gain.mutable_data().begin(), p.gain.mutable_data().end(), 1.0);
  return p;
}

AttnParams make_attn(long d) {
  return {make_param({d, d}), make_param({d}), make_param({d, d}),
          make_param({d}),    make_param({d, d}), make_param({d}),
          make_param({d, d}), make_param({d})};
}

FfnParams make_ffn(long d) {
  return {make_param({d, 4 * d}), make_param({4 * d}), make_param({4 * d, d}),
          make_param({d})};
}

GateParams make_gate(long d) {
  return {make_param({d, d}), make_param({d}), make_param({d, 1}),
          make_param({1})};
}

void collect_ln(std::vector<std::pair<std::string, Tensor>>& out,
                const std::string& prefix, const LnParams& p) {
  out.emplace_back(prefix + ".gain", p.gain);
  out.emplace_back(prefix + ".bias", p.bias);
}

void collect_attn(std::vector<std::pair<std::string, Tensor>>& out,
                  const std::string& prefix, const AttnParams& p) {
  out.emplace_back(prefix + ".wq", p.wq);
  out.emplace_back(prefix + ".bq", p.bq);
  out.emplace_back(prefix + ".wk", p.wk);
  out.emplace_back(prefix + ".bk", p.bk);
  out.emplace_back(prefix + ".wv", p.wv);
  out.emplace_back(prefix + ".bv", p.bv);
  out.emplace_back(prefix + ".wo", p.wo);
  out.emplace_back(prefix + ".bo", p.bo);
}

void collect_ffn(std::vector<std::pair<std::string, Tensor>>& out,
                 const std::string& prefix, const FfnParams& p) {
  out.emplace_back(prefix + ".w1", p.w1);
  out.emplace_back(prefix + ".b1", p.b1);
  out.emplace_back(prefix + ".w2", p.w2);
  out.emplace_back(prefix + ".b2", p.b2);
}

// multi-head attention; kv_in supplies both keys and values
Tensor mha(const Tensor& q_in, const Tensor& kv_in, const AttnParams& p,
           long n_heads, const Tensor* mask) {
  Tensor q = add_bias(matmul(q_in, p.wq), p.bq);
  Tensor k = add_bias(matmul(kv_in, p.wk), p.bk);
  Tensor v = add_bias(matmul(kv_in, p.wv), p.bv);
  long d = q.cols();
  long dk = d / n_heads;
  std::vector<Tensor> heads;
  heads.reserve(std::size_t(n_heads));
  for (long h = 0; h < n_heads; ++h) {
    heads.push_back(scaled_dot_attention(slice_cols(q, h * dk, (h + 1) * dk),
                                         slice_cols(k, h * dk, (h + 1) * dk),
                                         slice_cols(v, h * dk, (h + 1) * dk),
                                         mask));
  }
  return add_bias(matmul(concat_cols(heads), p.wo), p.bo);
}

Tensor ffn(const Tensor& x, const FfnParams& p) {
  return add_bias(matmul(gelu(add_bias(matmul(x, p.w1), p.b1)), p.w2), p.b2);
}

Tensor causal_mask(long m) {
  std::vector<double> data(std::size_t(m * m), 0.0);
  for (long i = 0; i < m; ++i)
    for (long j = i + 1; j < m; ++j) data[std::size_t(i * m + j)] = -1e30;
  return Tensor::from_data({m, m}, std::move(data));
}

}  // namespace

RglModel::RglModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  long d = cfg_.d_model;
  embedding_ = make_param({cfg_.vocab_size, d});
  for (long i = 0; i < cfg_.n_enc_layers; ++i)
    enc_.push_back({make_ln(d), make_ln(d), make_attn(d), make_ffn(d)});
  enc_final_ = make_ln(d);
  for (long i = 0; i < cfg_.n_graph_layers; ++i)
    genc_.push_back({make_ln(d), make_ln(d), make_attn(d), make_ffn(d)});
  genc_final_ = make_ln(d);
  for (long i = 0; i < cfg_.n_dec_layers; ++i)
    dec_.push_back({make_ln(d), make_ln(d), make_ln(d), make_attn(d),
                    make_attn(d), make_attn(d), make_gate(d), make_ffn(d)});
  dec_final_ = make_ln(d);

  pos_table_.resize(std::size_t(cfg_.max_len * d));
  for (long pos = 0; pos < cfg_.max_len; ++pos)
    for (long i = 0; i < d; ++i) {
      double angle = double(pos) /
                     std::pow(10000.0, double(2 * (i / 2)) / double(d));
      pos_table_[std::size_t(pos * d + i)] =
          (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }

  init_params();
}

void RglModel::init_params() {
  Rng rng(cfg_.seed);
  for (auto& [name, t] : params()) {
    bool is_matrix = t.shape().size() == 2;
    bool is_ln = name.ends_with(".gain") || name.ends_with(".bias");
    if (!is_matrix || is_ln) continue;  // LN handled in make_ln, biases zero
    long fan_in = name == "embedding" ? t.shape()[1] : t.shape()[0];
    double bound = 1.0 / std::sqrt(double(fan_in));
    for (double& v : t.mutable_data()) v = rng.uniform(-bound, bound);
  }
}

std::vector<std::pair<std::string, Tensor>> RglModel::params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("embedding", embedding_);
  for (std::size_t i = 0; i < enc_.size(); ++i) {
    std::string p = "enc." + std::to_string(i);
    collect_ln(out, p + ".ln1", enc_[i].ln1);
    collect_ln(out, p + ".ln2", enc_[i].ln2);
    collect_attn(out, p + ".attn", enc_[i].attn);
    collect_ffn(out, p + ".ffn", enc_[i].ffn);
  }
  collect_ln(out, "enc_final", enc_final_);
  for (std::size_t i = 0; i < genc_.size(); ++i) {
    std::string p = "genc." + std::to_string(i);
    collect_ln(out, p + ".ln1", genc_[i].ln1);
    collect_ln(out, p + ".ln2", genc_[i].ln2);
    collect_attn(out, p + ".attn", genc_[i].attn);
    collect_ffn(out, p + ".ffn", genc_[i].ffn);
  }
  collect_ln(out, "genc_final", genc_final_);
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    std::string p = "dec." + std::to_string(i);
    collect_ln(out, p + ".ln1", dec_[i].ln1);
    collect_ln(out, p + ".ln2", dec_[i].ln2);
    collect_ln(out, p + ".ln3", dec_[i].ln3);
    collect_attn(out, p + ".self", dec_[i].self_attn);
    collect_attn(out, p + ".cross_s", dec_[i].cross_s);
    collect_attn(out, p + ".cross_g", dec_[i].cross_g);
    out.emplace_back(p + ".gate.w", dec_[i].gate.w);
    out.emplace_back(p + ".gate.b1", dec_[i].gate.b1);
    out.emplace_back(p + ".gate.v", dec_[i].gate.v);
    out.emplace_back(p + ".gate.b2", dec_[i].gate.b2);
    collect_ffn(out, p + ".ffn", dec_[i].ffn);
  }
  collect_ln(out, "dec_final", dec_final_);
  return out;
}

void RglModel::check_ids(const std::vector<int>& ids) const {
  if (long(ids.size()) > cfg_.max_len)
    throw ModelError(ModelErrorKind::TooLong,
                     "sequence length " + std::to_string(ids.size()) +
                         " exceeds max_len " + std::to_string(cfg_.max_len));
  for (int id : ids)
    if (id < 0 || id >= cfg_.vocab_size)
      throw ModelError(ModelErrorKind::UnknownToken,
                       "token id out of vocabulary: " + std::to_string(id));
}

Tensor RglModel::embed(const std::vector<int>& ids) const {
  long m = long(ids.size());
  long d = cfg_.d_model;
  Tensor e = scale(embedding_rows(embedding_, ids), std::sqrt(double(d)));
  std::vector<double> pe(std::size_t(m * d));
  std::copy_n(pos_table_.data(), std::size_t(m * d), pe.data());
  return add(e, Tensor::from_data({m, d}, std::move(pe)));
}

Tensor RglModel::run_encoder(const std::vector<EncLayer>& layers,
                             const LnParams& fin, const std::vector<int>& ids,
                             bool skip_when_empty) const {
  check_ids(ids);
  if (ids.empty())
    throw ModelError(ModelErrorKind::TooLong, "empty encoder input");
  Tensor x = embed(ids);
  if (layers.empty() && skip_when_empty) return x;  // ablation floor
  for (const auto& layer : layers) {
    Tensor a = layer_norm(x, layer.ln1.gain, layer.ln1.bias);
    x = add(x, mha(a, a, layer.attn, cfg_.n_heads, nullptr));
    Tensor b = layer_norm(x, layer.ln2.gain, layer.ln2.bias);
    x = add(x, ffn(b, layer.ffn));
  }
  return layer_norm(x, fin.gain, fin.bias);
}

Tensor RglModel::encode_sentence(const std::vector<int>& ids) const {
  return run_encoder(enc_, enc_final_, ids, false);
}

Tensor RglModel::encode_graph(const std::vector<int>& ids) const {
  return run_encoder(genc_, genc_final_, ids, true);
}

DecoderLayerOutput RglModel::dual_cross_attention(const Tensor& s_z,
                                                  const Tensor& h_s,
                                                  const Tensor& h_g,
                                                  const DecLayer& layer,
                                                  GateForce force) const {
  DecoderLayerOutput out;
  out.s_z = s_z;
  out.s_s = mha(s_z, h_s, layer.cross_s, cfg_.n_heads, nullptr);
  out.s_g = mha(s_z, h_g, layer.cross_g, cfg_.n_heads, nullptr);

  if (force == GateForce::Zero) {
    out.g = Tensor::zeros({s_z.rows(), 1});
  } else {
    Tensor u = tanh_op(add_bias(matmul(s_z, layer.gate.w), layer.gate.b1));
    out.g = sigmoid(add_bias(matmul(u, layer.gate.v), layer.gate.b2));
  }
  Tensor ones = Tensor::full({s_z.rows(), 1}, 1.0);
  out.s_o = add(scale_rows(out.s_g, out.g), scale_rows(out.s_s, sub(ones, out.g)));
  return out;
}

Tensor RglModel::decode_logits(const Tensor& h_s, const Tensor* h_g,
                               const std::vector<int>& y_prefix,
                               std::vector<GateRecord>* trace,
                               GateForce force) const {
  check_ids(y_prefix);
  if (y_prefix.empty())
    throw ModelError(ModelErrorKind::TooLong, "empty decoder input");
  long m = long(y_prefix.size());
  Tensor mask = causal_mask(m);
  Tensor y = embed(y_prefix);
  for (std::size_t li = 0; li < dec_.size(); ++li) {
    const DecLayer& layer = dec_[li];
    Tensor a1 = layer_norm(y, layer.ln1.gain, layer.ln1.bias);
    Tensor s_z = add(y, mha(a1, a1, layer.self_attn, cfg_.n_heads, &mask));
    Tensor a2 = layer_norm(s_z, layer.ln2.gain, layer.ln2.bias);
    if (h_g) {
      DecoderLayerOutput dlo = dual_cross_attention(a2, h_s, *h_g, layer, force);
      if (trace) {
        for (long pos = 0; pos < m; ++pos)
          trace->push_back({pos, int(li), dlo.g.at(pos)});
      }
      y = add(s_z, dlo.s_o);
    } else {
      y = add(s_z, mha(a2, h_s, layer.cross_s, cfg_.n_heads, nullptr));
    }
    Tensor a3 = layer_norm(y, layer.ln3.gain, layer.ln3.bias);
    y = add(y, ffn(a3, layer.ffn));
  }
  y = layer_norm(y, dec_final_.gain, dec_final_.bias);
  return matmul(y, transpose(embedding_));  // tied output projection
}

Tensor RglModel::forward(const std::vector<int>& x_ids,
                         const std::vector<int>& yr_ids,
                         const std::vector<int>& y_prefix,
                         std::vector<GateRecord>* trace, GateForce force) const {
  Tensor h_s = encode_sentence(x_ids);
  Tensor h_g = encode_graph(yr_ids);
  return decode_logits(h_s, &h_g, y_prefix, trace, force);
}

Tensor RglModel::baseline_forward(const std::vector<int>& x_ids,
                                  const std::vector<int>& y_prefix) const {
  Tensor h_s = encode_sentence(x_ids);
  return decode_logits(h_s, nullptr, y_prefix);
}

void RglModel::save(const std::string& path,
                    const std::vector<std::string>& vocab_lines) const {
  CheckpointData data;
  std::ostringstream header;
  header << cfg_.to_text();
  for (const auto& line : vocab_lines) header << line << "\n";
  data.header_text = header.str();
  for (const auto& [name, t] : params()) data.tensors.emplace_back(name, t);
  save_checkpoint(path, data);
}

LoadedModel load_model(const std::string& path) {
  CheckpointData data = load_checkpoint(path);
  ModelConfig cfg = ModelConfig::from_text(data.header_text);
  RglModel model(cfg);
  std::map<std::string, Tensor> by_name(data.tensors.begin(), data.tensors.end());
  for (auto& [name, t] : model.params()) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw CheckpointError("checkpoint missing tensor: " + name);
    if (it->second.shape() != t.shape())
      throw CheckpointError("checkpoint shape mismatch for " + name);
    t.mutable_data() = it->second.data();
  }
  std::vector<std::string> vocab_lines;
  std::istringstream in(data.header_text);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("tok ", 0) == 0) vocab_lines.push_back(line);
  return {std::move(model), std::move(vocab_lines)};
}

}  // namespace rgl
