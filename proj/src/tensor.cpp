#include "rgl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "rgl/rng.hpp"

namespace rgl {

struct Tensor::Impl {
  std::vector<long> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily
  bool requires_grad = false;
  bool tracked = false;  // participates in the current graph
  std::vector<std::shared_ptr<Impl>> parents;
  std::function<void()> backprop;

  long numel() const {
    long n = 1;
    for (long d : shape) n *= d;
    return n;
  }
  std::vector<double>& grad_buf() {
    if (grad.empty()) grad.assign(std::size_t(numel()), 0.0);
    return grad;
  }
};

namespace {

using Impl = Tensor::Impl;
using ImplPtr = std::shared_ptr<Impl>;

ImplPtr make_impl(std::vector<long> shape, std::vector<double> value) {
  auto impl = std::make_shared<Impl>();
  impl->shape = std::move(shape);
  impl->value = std::move(value);
  return impl;
}

long rows_of(const Impl& t) { return t.shape.size() == 2 ? t.shape[0] : 1; }
long cols_of(const Impl& t) { return t.shape.back(); }

void require(bool cond, const std::string& msg) {
  if (!cond) throw NumError("shape mismatch: " + msg);
}

thread_local int no_grad_depth = 0;

// Wires a result node. The backprop closure must capture the result as a raw
// pointer (it owns the closure; a shared_ptr capture would leak the graph).
ImplPtr make_result(std::vector<long> shape, std::vector<double> value,
                    std::vector<ImplPtr> parents) {
  auto impl = make_impl(std::move(shape), std::move(value));
  if (no_grad_depth > 0) return impl;
  bool tracked = false;
  for (const auto& p : parents) tracked |= p->tracked || p->requires_grad;
  if (tracked) {
    impl->tracked = true;
    impl->parents = std::move(parents);
  }
  return impl;
}

bool wants_grad(const ImplPtr& p) { return p->tracked || p->requires_grad; }

}  // namespace

Tensor Tensor::zeros(std::vector<long> shape) {
  long n = 1;
  for (long d : shape) n *= d;
  return Tensor(make_impl(std::move(shape), std::vector<double>(std::size_t(n), 0.0)));
}

Tensor Tensor::full(std::vector<long> shape, double v) {
  long n = 1;
  for (long d : shape) n *= d;
  return Tensor(make_impl(std::move(shape), std::vector<double>(std::size_t(n), v)));
}

Tensor Tensor::from_data(std::vector<long> shape, std::vector<double> data) {
  long n = 1;
  for (long d : shape) n *= d;
  if (n != long(data.size())) throw NumError("from_data: size mismatch");
  return Tensor(make_impl(std::move(shape), std::move(data)));
}

const std::vector<long>& Tensor::shape() const { return impl_->shape; }
long Tensor::numel() const { return impl_->numel(); }
long Tensor::rows() const { return rows_of(*impl_); }
long Tensor::cols() const { return cols_of(*impl_); }
const std::vector<double>& Tensor::data() const { return impl_->value; }
std::vector<double>& Tensor::mutable_data() const { return impl_->value; }
double Tensor::at(long i) const { return impl_->value[std::size_t(i)]; }
double Tensor::at(long i, long j) const {
  return impl_->value[std::size_t(i * cols() + j)];
}
bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool v) {
  impl_->requires_grad = v;
  impl_->tracked = v;
  return *this;
}

const std::vector<double>& Tensor::grad() const { return impl_->grad_buf(); }

void Tensor::zero_grad() const {
  std::fill(impl_->grad_buf().begin(), impl_->grad_buf().end(), 0.0);
}

Tensor Tensor::detach() const {
  return Tensor(make_impl(impl_->shape, impl_->value));
}

// ---- op implementations ----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2, "matmul needs rank 2");
  long m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
  require(k == k2, "matmul inner dims " + std::to_string(k) + " vs " +
                       std::to_string(k2));
  std::vector<double> out(std::size_t(m * n), 0.0);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (long i = 0; i < m; ++i) {
    double* po = out.data() + i * n;
    const double* pai = pa + i * k;
    for (long kk = 0; kk < k; ++kk) {
      double av = pai[kk];
      if (av == 0.0) continue;
      const double* pbk = pb + kk * n;
      for (long j = 0; j < n; ++j) po[j] += av * pbk[j];
    }
  }
  auto ia = a.impl(), ib = b.impl();
  auto io = make_result({m, n}, std::move(out), {ia, ib});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, ib, self, m, n, k]() {
      const double* go = self->grad_buf().data();
      if (wants_grad(ia)) {
        double* ga = ia->grad_buf().data();
        const double* pb = ib->value.data();
        for (long i = 0; i < m; ++i) {
          const double* goi = go + i * n;
          double* gai = ga + i * k;
          for (long kk = 0; kk < k; ++kk) {
            const double* pbk = pb + kk * n;
            double acc = 0.0;
            for (long j = 0; j < n; ++j) acc += goi[j] * pbk[j];
            gai[kk] += acc;
          }
        }
      }
      if (wants_grad(ib)) {
        double* gb = ib->grad_buf().data();
        const double* pa = ia->value.data();
        for (long i = 0; i < m; ++i) {
          const double* goi = go + i * n;
          const double* pai = pa + i * k;
          for (long kk = 0; kk < k; ++kk) {
            double av = pai[kk];
            if (av == 0.0) continue;
            double* gbk = gb + kk * n;
            for (long j = 0; j < n; ++j) gbk[j] += av * goi[j];
          }
        }
      }
    };
  }
  return Tensor(io);
}

Tensor transpose(const Tensor& a) {
  require(a.shape().size() == 2, "transpose needs rank 2");
  long m = a.shape()[0], n = a.shape()[1];
  std::vector<double> out(std::size_t(m * n));
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j) out[std::size_t(j * m + i)] = a.at(i, j);
  auto ia = a.impl();
  auto io = make_result({n, m}, std::move(out), {ia});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, self, m, n]() {
      double* ga = ia->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < n; ++j) ga[i * n + j] += go[j * m + i];
    };
  }
  return Tensor(io);
}

namespace {

Tensor elementwise2(const Tensor& a, const Tensor& b,
                    double (*fwd)(double, double),
                    void (*bwd)(double, double, double, double&, double&)) {
  require(a.shape() == b.shape(), "elementwise shapes differ");
  std::size_t n = a.data().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(a.data()[i], b.data()[i]);
  auto ia = a.impl(), ib = b.impl();
  auto io = make_result(a.shape(), std::move(out), {ia, ib});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, ib, self, bwd, n]() {
      double* ga = ia->grad_buf().data();
      double* gb = ib->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (std::size_t i = 0; i < n; ++i) {
        double da = 0, db = 0;
        bwd(ia->value[i], ib->value[i], go[i], da, db);
        ga[i] += da;
        gb[i] += db;
      }
    };
  }
  return Tensor(io);
}

Tensor unary(const Tensor& a, double (*fwd)(double),
             double (*dfn)(double /*x*/, double /*y*/)) {
  std::size_t n = a.data().size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(a.data()[i]);
  auto ia = a.impl();
  auto io = make_result(a.shape(), std::move(out), {ia});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, self, dfn, n]() {
      double* ga = ia->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (std::size_t i = 0; i < n; ++i)
        ga[i] += go[i] * dfn(ia->value[i], self->value[i]);
    };
  }
  return Tensor(io);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise2(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = g;
      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise2(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = -g;
      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise2(
      a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& da, double& db) {
        da = g * y;
        db = g * x;
      });
}

Tensor add_bias(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2, "add_bias lhs needs rank 2");
  long m = a.shape()[0], n = a.shape()[1];
  require(b.numel() == n, "bias length");
  std::vector<double> out(a.data());
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j)
      out[std::size_t(i * n + j)] += b.data()[std::size_t(j)];
  auto ia = a.impl(), ib = b.impl();
  auto io = make_result(a.shape(), std::move(out), {ia, ib});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, ib, self, m, n]() {
      double* ga = ia->grad_buf().data();
      double* gb = ib->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < n; ++j) {
          ga[i * n + j] += go[i * n + j];
          gb[j] += go[i * n + j];
        }
    };
  }
  return Tensor(io);
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.data());
  for (double& v : out) v *= c;
  auto ia = a.impl();
  auto io = make_result(a.shape(), std::move(out), {ia});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, self, c]() {
      double* ga = ia->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (std::size_t i = 0; i < ia->value.size(); ++i) ga[i] += c * go[i];
    };
  }
  return Tensor(io);
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor gelu(const Tensor& a) {
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); },
      [](double x, double) {
        double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
        double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
        return cdf + x * phi;
      });
}

Tensor log_op(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(std::max(x, 1e-300)); },
      [](double x, double) { return 1.0 / std::max(x, 1e-300); });
}

Tensor softmax_rows(const Tensor& a) {
  long m = rows_of(*a.impl()), n = cols_of(*a.impl());
  std::vector<double> out(a.data().size());
  for (long i = 0; i < m; ++i) {
    const double* row = a.data().data() + i * n;
    double mx = row[0];
    for (long j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (long j = 0; j < n; ++j) {
      out[std::size_t(i * n + j)] = std::exp(row[j] - mx);
      sum += out[std::size_t(i * n + j)];
    }
    for (long j = 0; j < n; ++j) out[std::size_t(i * n + j)] /= sum;
  }
  auto ia = a.impl();
  auto io = make_result(a.shape(), std::move(out), {ia});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, self, m, n]() {
      double* ga = ia->grad_buf().data();
      const double* go = self->grad_buf().data();
      const double* y = self->value.data();
      for (long i = 0; i < m; ++i) {
        double dot = 0.0;
        for (long j = 0; j < n; ++j) dot += go[i * n + j] * y[i * n + j];
        for (long j = 0; j < n; ++j)
          ga[i * n + j] += y[i * n + j] * (go[i * n + j] - dot);
      }
    };
  }
  return Tensor(io);
}

Tensor log_softmax_rows(const Tensor& a) {
  long m = rows_of(*a.impl()), n = cols_of(*a.impl());
  std::vector<double> out(a.data().size());
  for (long i = 0; i < m; ++i) {
    const double* row = a.data().data() + i * n;
    double mx = row[0];
    for (long j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (long j = 0; j < n; ++j) sum += std::exp(row[j] - mx);
    double lse = mx + std::log(sum);
    for (long j = 0; j < n; ++j) out[std::size_t(i * n + j)] = row[j] - lse;
  }
  auto ia = a.impl();
  auto io = make_result(a.shape(), std::move(out), {ia});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ia, self, m, n]() {
      double* ga = ia->grad_buf().data();
      const double* go = self->grad_buf().data();
      const double* y = self->value.data();
      for (long i = 0; i < m; ++i) {
        double gsum = 0.0;
        for (long j = 0; j < n; ++j) gsum += go[i * n + j];
        for (long j = 0; j < n; ++j)
          ga[i * n + j] += go[i * n + j] - std::exp(y[i * n + j]) * gsum;
      }
    };
  }
  return Tensor(io);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  long m = rows_of(*x.impl()), n = cols_of(*x.impl());
  require(gain.numel() == n && bias.numel() == n, "layer_norm affine size");
  std::vector<double> out(x.data().size());
  std::vector<double> norm(x.data().size());  // pre-affine, saved for backward
  std::vector<double> inv_std(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mean = 0.0;
    for (long j = 0; j < n; ++j) mean += row[j];
    mean /= double(n);
    double var = 0.0;
    for (long j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= double(n);
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[std::size_t(i)] = is;
    for (long j = 0; j < n; ++j) {
      double y = (row[j] - mean) * is;
      norm[std::size_t(i * n + j)] = y;
      out[std::size_t(i * n + j)] =
          y * gain.data()[std::size_t(j)] + bias.data()[std::size_t(j)];
    }
  }
  auto ix = x.impl(), ig = gain.impl(), ib = bias.impl();
  auto io = make_result(x.shape(), std::move(out), {ix, ig, ib});
  if (io->tracked) {
    Impl* self = io.get();
    auto saved_norm = std::make_shared<std::vector<double>>(std::move(norm));
    auto saved_is = std::make_shared<std::vector<double>>(std::move(inv_std));
    io->backprop = [ix, ig, ib, self, saved_norm, saved_is, m, n]() {
      double* gx = ix->grad_buf().data();
      double* gg = ig->grad_buf().data();
      double* gb = ib->grad_buf().data();
      const double* go = self->grad_buf().data();
      const double* y = saved_norm->data();
      for (long i = 0; i < m; ++i) {
        double is = (*saved_is)[std::size_t(i)];
        double sum_dy = 0.0, sum_dyy = 0.0;
        for (long j = 0; j < n; ++j) {
          double dy = go[i * n + j] * ig->value[std::size_t(j)];
          sum_dy += dy;
          sum_dyy += dy * y[i * n + j];
          gg[j] += go[i * n + j] * y[i * n + j];
          gb[j] += go[i * n + j];
        }
        for (long j = 0; j < n; ++j) {
          double dy = go[i * n + j] * ig->value[std::size_t(j)];
          gx[i * n + j] += is * (dy - sum_dy / double(n) -
                                 y[i * n + j] * sum_dyy / double(n));
        }
      }
    };
  }
  return Tensor(io);
}

Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids) {
  require(table.shape().size() == 2, "embedding table rank 2");
  long v = table.shape()[0], d = table.shape()[1];
  for (int id : ids)
    if (id < 0 || id >= v) throw NumError("embedding id out of range");
  long m = long(ids.size());
  std::vector<double> out(std::size_t(m * d));
  for (long i = 0; i < m; ++i)
    std::copy_n(table.data().data() + long(ids[std::size_t(i)]) * d, d,
                out.data() + i * d);
  auto it = table.impl();
  auto io = make_result({m, d}, std::move(out), {it});
  if (io->tracked) {
    Impl* self = io.get();
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    io->backprop = [it, self, ids_copy, d]() {
      double* gt = it->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (std::size_t i = 0; i < ids_copy->size(); ++i) {
        double* dst = gt + long((*ids_copy)[i]) * d;
        const double* src = go + long(i) * d;
        for (long j = 0; j < d; ++j) dst[j] += src[j];
      }
    };
  }
  return Tensor(io);
}

Tensor scale_rows(const Tensor& x, const Tensor& g) {
  long m = rows_of(*x.impl()), n = cols_of(*x.impl());
  require(g.numel() == m, "scale_rows gate length");
  std::vector<double> out(x.data().size());
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j)
      out[std::size_t(i * n + j)] = x.at(i, j) * g.data()[std::size_t(i)];
  auto ix = x.impl(), ig = g.impl();
  auto io = make_result(x.shape(), std::move(out), {ix, ig});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ix, ig, self, m, n]() {
      double* gx = ix->grad_buf().data();
      double* gg = ig->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (long i = 0; i < m; ++i) {
        double acc = 0.0;
        for (long j = 0; j < n; ++j) {
          gx[i * n + j] += go[i * n + j] * ig->value[std::size_t(i)];
          acc += go[i * n + j] * ix->value[std::size_t(i * n + j)];
        }
        gg[i] += acc;
      }
    };
  }
  return Tensor(io);
}

Tensor slice_cols(const Tensor& x, long c0, long c1) {
  require(x.shape().size() == 2, "slice_cols rank 2");
  long m = x.shape()[0], n = x.shape()[1];
  require(0 <= c0 && c0 < c1 && c1 <= n, "slice_cols bounds");
  long w = c1 - c0;
  std::vector<double> out(std::size_t(m * w));
  for (long i = 0; i < m; ++i)
    std::copy_n(x.data().data() + i * n + c0, w, out.data() + i * w);
  auto ix = x.impl();
  auto io = make_result({m, w}, std::move(out), {ix});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ix, self, m, n, c0, w]() {
      double* gx = ix->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < w; ++j) gx[i * n + c0 + j] += go[i * w + j];
    };
  }
  return Tensor(io);
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  require(!xs.empty(), "concat_cols empty");
  long m = xs[0].shape()[0];
  long total = 0;
  for (const auto& x : xs) {
    require(x.shape().size() == 2 && x.shape()[0] == m, "concat_cols rows");
    total += x.shape()[1];
  }
  std::vector<double> out(std::size_t(m * total));
  long off = 0;
  for (const auto& x : xs) {
    long w = x.shape()[1];
    for (long i = 0; i < m; ++i)
      std::copy_n(x.data().data() + i * w, w, out.data() + i * total + off);
    off += w;
  }
  std::vector<ImplPtr> parents;
  for (const auto& x : xs) parents.push_back(x.impl());
  auto io = make_result({m, total}, std::move(out), parents);
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [self, parents, m, total]() {
      const double* go = self->grad_buf().data();
      long off = 0;
      for (const auto& p : parents) {
        long w = p->shape[1];
        double* gp = p->grad_buf().data();
        for (long i = 0; i < m; ++i)
          for (long j = 0; j < w; ++j) gp[i * w + j] += go[i * total + off + j];
        off += w;
      }
    };
  }
  return Tensor(io);
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  auto ix = x.impl();
  auto io = make_result({1}, {s}, {ix});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ix, self]() {
      double g = self->grad_buf()[0];
      double* gx = ix->grad_buf().data();
      for (std::size_t i = 0; i < ix->value.size(); ++i) gx[i] += g;
    };
  }
  return Tensor(io);
}

Tensor sum_cols(const Tensor& x) {
  long m = rows_of(*x.impl()), n = cols_of(*x.impl());
  std::vector<double> out(std::size_t(m), 0.0);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j) out[std::size_t(i)] += x.at(i, j);
  auto ix = x.impl();
  auto io = make_result({m, 1}, std::move(out), {ix});
  if (io->tracked) {
    Impl* self = io.get();
    io->backprop = [ix, self, m, n]() {
      double* gx = ix->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < n; ++j) gx[i * n + j] += go[i];
    };
  }
  return Tensor(io);
}

Tensor pick(const Tensor& x, const std::vector<int>& ids) {
  long m = rows_of(*x.impl()), n = cols_of(*x.impl());
  require(long(ids.size()) == m, "pick ids length");
  for (int id : ids)
    if (id < 0 || id >= n) throw NumError("pick id out of range");
  std::vector<double> out(static_cast<std::size_t>(m));
  for (long i = 0; i < m; ++i)
    out[std::size_t(i)] = x.at(i, ids[std::size_t(i)]);
  auto ix = x.impl();
  auto io = make_result({m, 1}, std::move(out), {ix});
  if (io->tracked) {
    Impl* self = io.get();
    auto ids_copy = std::make_shared<std::vector<int>>(ids);
    io->backprop = [ix, self, ids_copy, n]() {
      double* gx = ix->grad_buf().data();
      const double* go = self->grad_buf().data();
      for (std::size_t i = 0; i < ids_copy->size(); ++i)
        gx[long(i) * n + (*ids_copy)[i]] += go[i];
    };
  }
  return Tensor(io);
}

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                            const Tensor* mask) {
  long dk = q.shape()[1];
  require(k.shape()[1] == dk, "attention q/k dims");
  require(k.shape()[0] == v.shape()[0], "attention k/v rows");
  Tensor scores = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(double(dk)));
  if (mask) scores = add(scores, *mask);
  return matmul(softmax_rows(scores), v);
}

// ---- backward ---------------------------------------------------------------

NoGradScope::NoGradScope() { ++no_grad_depth; }
NoGradScope::~NoGradScope() { --no_grad_depth; }
bool NoGradScope::active() { return no_grad_depth > 0; }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw NumError("backward requires a scalar loss");

  // iterative post-order topo sort over parents
  std::vector<Impl*> order;
  std::unordered_set<Impl*> visited;
  std::vector<std::pair<Impl*, std::size_t>> stack{{loss.impl().get(), 0}};
  visited.insert(loss.impl().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Impl* p = node->parents[idx++].get();
      if (!visited.count(p) && (p->tracked || p->requires_grad)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.impl()->grad_buf()[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backprop) (*it)->backprop();
}

double grad_check(const std::function<Tensor()>& f,
                  const std::vector<Tensor>& params, double eps,
                  long samples_per_param, std::uint64_t seed) {
  for (const auto& p : params) p.zero_grad();
  Tensor loss = f();
  backward(loss);
  std::vector<std::vector<double>> ad;
  ad.reserve(params.size());
  for (const auto& p : params) ad.push_back(p.grad());

  double max_rel = 0.0;
  Rng rng(seed);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const Tensor& p = params[pi];
    long n = p.numel();
    std::vector<long> coords;
    if (samples_per_param <= 0 || n <= samples_per_param) {
      coords.resize(std::size_t(n));
      for (long i = 0; i < n; ++i) coords[std::size_t(i)] = i;
    } else {
      std::unordered_set<long> chosen;
      while (long(chosen.size()) < samples_per_param)
        chosen.insert(long(rng.uniform_int(std::uint64_t(n))));
      coords.assign(chosen.begin(), chosen.end());
      std::sort(coords.begin(), coords.end());
    }
    for (long c : coords) {
      double orig = p.mutable_data()[std::size_t(c)];
      p.mutable_data()[std::size_t(c)] = orig + eps;
      double up = f().at(0);
      p.mutable_data()[std::size_t(c)] = orig - eps;
      double down = f().at(0);
      p.mutable_data()[std::size_t(c)] = orig;
      double fd = (up - down) / (2.0 * eps);
      double a = ad[pi][std::size_t(c)];
      double denom = std::max({1.0, std::fabs(a), std::fabs(fd)});
      max_rel = std::max(max_rel, std::fabs(a - fd) / denom);
    }
  }
  return max_rel;
}

}  // namespace rgl
