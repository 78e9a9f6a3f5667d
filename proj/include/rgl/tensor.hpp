#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace rgl {

struct NumError : std::runtime_error {
  explicit NumError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense 64-bit tensor (.rank 1 or 2) with reverse-mode gradients. A Tensor is
// a cheap shared handle; ops build a computation DAG that backward() walks.
// Parameters are tensors with requires_grad set; their grad buffers persist
// across graphs until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<long> shape);
  static Tensor full(std::vector<long> shape, double v);
  static Tensor from_data(std::vector<long> shape, std::vector<double> data);
  static Tensor scalar(double v) { return from_data({1}, {v}); }

  bool defined() const { return impl_ != nullptr; }
  const std::vector<long>& shape() const;
  long numel() const;
  long rows() const;  // 1 for rank-1
  long cols() const;  // size of last axis

  const std::vector<double>& data() const;
  std::vector<double>& mutable_data() const;  // handle semantics: shared state
  double at(long i) const;
  double at(long i, long j) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool v);
  const std::vector<double>& grad() const;  // zeros if never touched
  void zero_grad() const;

  // value copy with no graph linkage (teacher outputs in distillation)
  Tensor detach() const;

  struct Impl;
  const std::shared_ptr<Impl>& impl() const { return impl_; }
  explicit Tensor(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<Impl> impl_;
};

// ---- forward ops ----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);        // same shape
Tensor add_bias(const Tensor& a, const Tensor& b);   // b broadcast over rows
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);        // elementwise
Tensor scale(const Tensor& a, double c);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor log_op(const Tensor& a);                      // floored at 1e-300
Tensor softmax_rows(const Tensor& a);                // rows sum to 1
Tensor log_softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-12);
Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids);
Tensor scale_rows(const Tensor& x, const Tensor& g);  // g is [m,1]
Tensor slice_cols(const Tensor& x, long c0, long c1);
Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor sum_all(const Tensor& x);                      // -> [1]
Tensor sum_cols(const Tensor& x);                     // [m,n] -> [m,1]
Tensor pick(const Tensor& x, const std::vector<int>& ids);  // -> [m,1]

// softmax(Q Kᵀ / sqrt(d_k)) V; mask (if given) is added to the scores
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor* mask = nullptr);

// ---- autodiff -------------------------------------------------------------

// Suspends graph construction while alive (decoding and evaluation paths);
// nests, thread-local.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;
  static bool active();
};

// Reverse-mode accumulation from a scalar loss. Throws NumError when the
// loss is not a single element.
void backward(const Tensor& loss);

// Central finite differences vs autodiff over the parameters' coordinates.
// `samples_per_param` > 0 checks a seeded random subset of that size per
// tensor (the full-model acceptance check would otherwise take hours);
// 0 checks every coordinate. Returns the max relative error
// |ad - fd| / max(1, |ad|, |fd|).
double grad_check(const std::function<Tensor()>& f,
                  const std::vector<Tensor>& params, double eps = 1e-5,
                  long samples_per_param = 0, std::uint64_t seed = 0);

}  // namespace rgl
