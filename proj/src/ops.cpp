#include "svqa/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace svqa {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

bool track(std::initializer_list<const Tensor*> inputs) {
  if (!grad_enabled()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

void attach(Tensor& out, std::initializer_list<const Tensor*> inputs,
            std::function<void()> bw) {
  out.node()->requires_grad = true;
  for (const Tensor* t : inputs) out.node()->parents.push_back(t->node());
  out.node()->backward = std::move(bw);
}

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape("add", a, b);
  Tensor out(a.shape());
  const int64_t n = a.numel();
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
  if (track({&a, &b})) {
    TensorNode* self = out.node().get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    attach(out, {&a, &b}, [self, an, bn, n] {
      for (TensorNode* p : {an, bn}) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (int64_t i = 0; i < n; ++i) p->grad[i] += self->grad[i];
      }
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape("sub", a, b);
  Tensor out(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
  if (track({&a, &b})) {
    TensorNode* self = out.node().get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    attach(out, {&a, &b}, [self, an, bn, n] {
      if (an->requires_grad) {
        an->ensure_grad();
        for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int64_t i = 0; i < n; ++i) bn->grad[i] -= self->grad[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape("mul", a, b);
  Tensor out(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
  if (track({&a, &b})) {
    TensorNode* self = out.node().get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    attach(out, {&a, &b}, [self, an, bn, n] {
      if (an->requires_grad) {
        an->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
          an->grad[i] += self->grad[i] * bn->data[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int64_t i = 0; i < n; ++i)
          bn->grad[i] += self->grad[i] * an->data[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * s;
  if (track({&a})) {
    TensorNode* self = out.node().get();
    TensorNode* an = a.node().get();
    attach(out, {&a}, [self, an, s, n] {
      an->ensure_grad();
      for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i] * s;
    });
  }
  return out;
}

Tensor add_const(const Tensor& a, const std::vector<double>& c) {
  if (static_cast<int64_t>(c.size()) != a.numel())
    throw std::invalid_argument("add_const: buffer size " +
                                std::to_string(c.size()) +
                                " does not match shape " +
                                shape_str(a.shape()));
  Tensor out(a.shape());
  const int64_t n = a.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + c[i];
  if (track({&a})) {
    TensorNode* self = out.node().get();
    TensorNode* an = a.node().get();
    attach(out, {&a}, [self, an, n] {
      an->ensure_grad();
      for (int64_t i = 0; i < n; ++i) an->grad[i] += self->grad[i];
    });
  }
  return out;
}

Tensor scale_rows(const Tensor& x, const std::vector<double>& s) {
  if (x.rank() != 2 || x.dim(0) != static_cast<int>(s.size()))
    throw std::invalid_argument("scale_rows: need [N x d] with N == " +
                                std::to_string(s.size()) + ", got " +
                                shape_str(x.shape()));
  const int rows = x.dim(0), cols = x.dim(1);
  Tensor out(x.shape());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out.data()[r * cols + c] = x.data()[r * cols + c] * s[r];
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, s, rows, cols] {
      xn->ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          xn->grad[r * cols + c] += self->grad[r * cols + c] * s[r];
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_str(a.shape()) + " and " +
                                shape_str(b.shape()));
  const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double aip = pa[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = pb + p * n;
      double* orow = po + i * n;
      for (int j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  if (track({&a, &b})) {
    TensorNode* self = out.node().get();
    TensorNode* an = a.node().get();
    TensorNode* bn = b.node().get();
    attach(out, {&a, &b}, [self, an, bn, m, k, n] {
      const double* g = self->grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            double acc = 0.0;
            const double* grow = g + i * n;
            const double* brow = bn->data.data() + p * n;
            for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
            an->grad[i * k + p] += acc;
          }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int p = 0; p < k; ++p) {
            const double aip = an->data[i * k + p];
            if (aip == 0.0) continue;
            const double* grow = g + i * n;
            double* brow = bn->grad.data() + p * n;
            for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
          }
      }
    });
  }
  return out;
}

Tensor transpose2d(const Tensor& x) {
  if (x.rank() != 2)
    throw std::invalid_argument("transpose2d: need rank 2, got " +
                                shape_str(x.shape()));
  const int r = x.dim(0), c = x.dim(1);
  Tensor out({c, r});
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) out.data()[j * r + i] = x.data()[i * c + j];
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, r, c] {
      xn->ensure_grad();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
          xn->grad[i * c + j] += self->grad[j * r + i];
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(1))
    throw std::invalid_argument("linear: input " + shape_str(x.shape()) +
                                " incompatible with weight " +
                                shape_str(w.shape()));
  const int rows = x.dim(0), in = x.dim(1), out_dim = w.dim(0);
  if (b.rank() != 1 || b.dim(0) != out_dim)
    throw std::invalid_argument("linear: bias " + shape_str(b.shape()) +
                                " incompatible with weight " +
                                shape_str(w.shape()));
  Tensor out({rows, out_dim});
  for (int r = 0; r < rows; ++r) {
    const double* xrow = x.data() + r * in;
    double* orow = out.data() + r * out_dim;
    for (int o = 0; o < out_dim; ++o) {
      const double* wrow = w.data() + o * in;
      double acc = b.data()[o];
      for (int i = 0; i < in; ++i) acc += xrow[i] * wrow[i];
      orow[o] = acc;
    }
  }
  if (track({&x, &w, &b})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    TensorNode* wn = w.node().get();
    TensorNode* bn = b.node().get();
    attach(out, {&x, &w, &b}, [self, xn, wn, bn, rows, in, out_dim] {
      const double* g = self->grad.data();
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (int r = 0; r < rows; ++r)
          for (int o = 0; o < out_dim; ++o) {
            const double go = g[r * out_dim + o];
            if (go == 0.0) continue;
            const double* wrow = wn->data.data() + o * in;
            double* xgrow = xn->grad.data() + r * in;
            for (int i = 0; i < in; ++i) xgrow[i] += go * wrow[i];
          }
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        for (int r = 0; r < rows; ++r)
          for (int o = 0; o < out_dim; ++o) {
            const double go = g[r * out_dim + o];
            if (go == 0.0) continue;
            const double* xrow = xn->data.data() + r * in;
            double* wgrow = wn->grad.data() + o * in;
            for (int i = 0; i < in; ++i) wgrow[i] += go * xrow[i];
          }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int r = 0; r < rows; ++r)
          for (int o = 0; o < out_dim; ++o)
            bn->grad[o] += g[r * out_dim + o];
      }
    });
  }
  return out;
}

Tensor gelu(const Tensor& x) {
  Tensor out(x.shape());
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) {
    const double v = x.data()[i];
    out.data()[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, n] {
      xn->ensure_grad();
      for (int64_t i = 0; i < n; ++i) {
        const double v = xn->data[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        xn->grad[i] += self->grad[i] * (cdf + v * pdf);
      }
    });
  }
  return out;
}

Tensor tanh_t(const Tensor& x) {
  Tensor out(x.shape());
  const int64_t n = x.numel();
  for (int64_t i = 0; i < n; ++i) out.data()[i] = std::tanh(x.data()[i]);
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, n] {
      xn->ensure_grad();
      for (int64_t i = 0; i < n; ++i) {
        const double y = self->data[i];
        xn->grad[i] += self->grad[i] * (1.0 - y * y);
      }
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  if (x.rank() < 1 || x.rank() > 2)
    throw std::invalid_argument("layer_norm: need rank 1 or 2, got " +
                                shape_str(x.shape()));
  const int d = x.dim(x.rank() - 1);
  const int rows = x.rank() == 2 ? x.dim(0) : 1;
  if (gamma.rank() != 1 || gamma.dim(0) != d || beta.rank() != 1 ||
      beta.dim(0) != d)
    throw std::invalid_argument(
        "layer_norm: gamma/beta " + shape_str(gamma.shape()) + "/" +
        shape_str(beta.shape()) + " do not match last axis of " +
        shape_str(x.shape()));
  Tensor out(x.shape());
  std::vector<double> inv_std(rows);
  std::vector<double> xhat(static_cast<size_t>(rows) * d);
  for (int r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * d;
    double mean = 0.0;
    for (int j = 0; j < d; ++j) mean += xr[j];
    mean /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) {
      const double c = xr[j] - mean;
      var += c * c;
    }
    var /= d;
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (int j = 0; j < d; ++j) {
      const double h = (xr[j] - mean) * is;
      xhat[r * d + j] = h;
      out.data()[r * d + j] = gamma.data()[j] * h + beta.data()[j];
    }
  }
  if (track({&x, &gamma, &beta})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    TensorNode* gn = gamma.node().get();
    TensorNode* bn = beta.node().get();
    attach(out, {&x, &gamma, &beta},
           [self, xn, gn, bn, rows, d, inv_std = std::move(inv_std),
            xhat = std::move(xhat)] {
             for (int r = 0; r < rows; ++r) {
               const double* g = self->grad.data() + r * d;
               const double* h = xhat.data() + r * d;
               if (xn->requires_grad) {
                 xn->ensure_grad();
                 // dxhat = g * gamma; dx = (dxhat - mean(dxhat)
                 //        - xhat * mean(dxhat * xhat)) * inv_std
                 double mean_dh = 0.0, mean_dhh = 0.0;
                 for (int j = 0; j < d; ++j) {
                   const double dh = g[j] * gn->data[j];
                   mean_dh += dh;
                   mean_dhh += dh * h[j];
                 }
                 mean_dh /= d;
                 mean_dhh /= d;
                 for (int j = 0; j < d; ++j) {
                   const double dh = g[j] * gn->data[j];
                   xn->grad[r * d + j] +=
                       (dh - mean_dh - h[j] * mean_dhh) * inv_std[r];
                 }
               }
               if (gn->requires_grad) {
                 gn->ensure_grad();
                 for (int j = 0; j < d; ++j) gn->grad[j] += g[j] * h[j];
               }
               if (bn->requires_grad) {
                 bn->ensure_grad();
                 for (int j = 0; j < d; ++j) bn->grad[j] += g[j];
               }
             }
           });
  }
  return out;
}

Tensor softmax(const Tensor& x, int axis) {
  if (x.rank() < 1 || x.rank() > 2)
    throw std::invalid_argument("softmax: need rank 1 or 2, got " +
                                shape_str(x.shape()));
  if (axis < 0) axis += x.rank();
  if (axis < 0 || axis >= x.rank())
    throw std::invalid_argument("softmax: bad axis for " +
                                shape_str(x.shape()));
  // Iterate "lines" along the softmax axis. Lines are rows for the last
  // axis and columns for axis 0 of a matrix.
  const int axis_len = x.dim(axis);
  const int num_lines = static_cast<int>(x.numel() / axis_len);
  const bool lines_contiguous = (x.rank() == 1 || axis == x.rank() - 1);
  const int stride = lines_contiguous ? 1 : x.dim(1);
  Tensor out(x.shape());
  for (int l = 0; l < num_lines; ++l) {
    const int base = lines_contiguous ? l * axis_len : l;
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < axis_len; ++j)
      mx = std::max(mx, x.data()[base + j * stride]);
    double sum = 0.0;
    for (int j = 0; j < axis_len; ++j) {
      const double e = std::exp(x.data()[base + j * stride] - mx);
      out.data()[base + j * stride] = e;
      sum += e;
    }
    for (int j = 0; j < axis_len; ++j) out.data()[base + j * stride] /= sum;
  }
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, num_lines, axis_len, stride,
                       lines_contiguous] {
      xn->ensure_grad();
      for (int l = 0; l < num_lines; ++l) {
        const int base = lines_contiguous ? l * axis_len : l;
        double dot = 0.0;
        for (int j = 0; j < axis_len; ++j) {
          const int idx = base + j * stride;
          dot += self->grad[idx] * self->data[idx];
        }
        for (int j = 0; j < axis_len; ++j) {
          const int idx = base + j * stride;
          xn->grad[idx] += self->data[idx] * (self->grad[idx] - dot);
        }
      }
    });
  }
  return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     int ignore_index) {
  if (logits.rank() != 2)
    throw std::invalid_argument("cross_entropy: logits must be [B x K], got " +
                                shape_str(logits.shape()));
  const int batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<int>(targets.size()) != batch)
    throw std::invalid_argument("cross_entropy: " +
                                std::to_string(targets.size()) +
                                " targets for batch " + std::to_string(batch));
  std::vector<double> lse(batch);
  int valid = 0;
  double loss = 0.0;
  for (int r = 0; r < batch; ++r) {
    if (targets[r] == ignore_index) continue;
    if (targets[r] < 0 || targets[r] >= classes)
      throw std::out_of_range("cross_entropy: target index " +
                              std::to_string(targets[r]) +
                              " outside [0, " + std::to_string(classes) + ")");
    const double* lr = logits.data() + r * classes;
    double mx = lr[0];
    for (int k = 1; k < classes; ++k) mx = std::max(mx, lr[k]);
    double sum = 0.0;
    for (int k = 0; k < classes; ++k) sum += std::exp(lr[k] - mx);
    lse[r] = mx + std::log(sum);
    loss += lse[r] - lr[targets[r]];
    ++valid;
  }
  if (valid == 0) throw std::runtime_error("cross_entropy: empty loss");
  Tensor out = Tensor::scalar(loss / valid);
  if (track({&logits})) {
    TensorNode* self = out.node().get();
    TensorNode* ln = logits.node().get();
    attach(out, {&logits},
           [self, ln, targets, ignore_index, batch, classes, valid,
            lse = std::move(lse)] {
             ln->ensure_grad();
             const double g = self->grad[0] / valid;
             for (int r = 0; r < batch; ++r) {
               if (targets[r] == ignore_index) continue;
               const double* lr = ln->data.data() + r * classes;
               double* gr = ln->grad.data() + r * classes;
               for (int k = 0; k < classes; ++k) {
                 const double p = std::exp(lr[k] - lse[r]);
                 gr[k] += g * (p - (k == targets[r] ? 1.0 : 0.0));
               }
             }
           });
  }
  return out;
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0)
    throw std::invalid_argument("dropout: rate must be < 1");
  const int64_t n = x.numel();
  std::vector<double> mask(static_cast<size_t>(n));
  const double keep = 1.0 - rate;
  for (int64_t i = 0; i < n; ++i)
    mask[i] = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  Tensor out(x.shape());
  for (int64_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * mask[i];
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, n, mask = std::move(mask)] {
      xn->ensure_grad();
      for (int64_t i = 0; i < n; ++i)
        xn->grad[i] += self->grad[i] * mask[i];
    });
  }
  return out;
}

Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2)
    throw std::invalid_argument("embedding_rows: table must be [V x d]");
  const int vocab = table.dim(0), d = table.dim(1);
  for (int id : ids)
    if (id < 0 || id >= vocab)
      throw std::out_of_range("embedding_rows: id " + std::to_string(id) +
                              " outside vocab of size " +
                              std::to_string(vocab));
  const int rows = static_cast<int>(ids.size());
  Tensor out({rows, d});
  for (int r = 0; r < rows; ++r)
    std::copy_n(table.data() + ids[r] * d, d, out.data() + r * d);
  if (track({&table})) {
    TensorNode* self = out.node().get();
    TensorNode* tn = table.node().get();
    attach(out, {&table}, [self, tn, ids, rows, d] {
      tn->ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int j = 0; j < d; ++j)
          tn->grad[ids[r] * d + j] += self->grad[r * d + j];
    });
  }
  return out;
}

Tensor slice_rows(const Tensor& x, int r0, int r1) {
  if (x.rank() != 2 || r0 < 0 || r1 > x.dim(0) || r0 >= r1)
    throw std::invalid_argument("slice_rows: bad range [" +
                                std::to_string(r0) + ", " +
                                std::to_string(r1) + ") for " +
                                shape_str(x.shape()));
  const int cols = x.dim(1);
  Tensor out({r1 - r0, cols});
  std::copy_n(x.data() + r0 * cols, static_cast<size_t>(r1 - r0) * cols,
              out.data());
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, r0, r1, cols] {
      xn->ensure_grad();
      for (int r = r0; r < r1; ++r)
        for (int c = 0; c < cols; ++c)
          xn->grad[r * cols + c] += self->grad[(r - r0) * cols + c];
    });
  }
  return out;
}

Tensor slice_cols(const Tensor& x, int c0, int c1) {
  if (x.rank() != 2 || c0 < 0 || c1 > x.dim(1) || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range [" +
                                std::to_string(c0) + ", " +
                                std::to_string(c1) + ") for " +
                                shape_str(x.shape()));
  const int rows = x.dim(0), cols = x.dim(1), w = c1 - c0;
  Tensor out({rows, w});
  for (int r = 0; r < rows; ++r)
    std::copy_n(x.data() + r * cols + c0, w, out.data() + r * w);
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn, rows, cols, c0, w] {
      xn->ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < w; ++c)
          xn->grad[r * cols + c0 + c] += self->grad[r * w + c];
    });
  }
  return out;
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty())
    throw std::invalid_argument("concat_rows: no parts");
  const int cols = parts[0].dim(1);
  int rows = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.dim(1) != cols)
      throw std::invalid_argument("concat_rows: column mismatch at " +
                                  shape_str(p.shape()));
    rows += p.dim(0);
  }
  Tensor out({rows, cols});
  int r = 0;
  for (const Tensor& p : parts) {
    std::copy_n(p.data(), p.numel(), out.data() + r * cols);
    r += p.dim(0);
  }
  bool need = grad_enabled();
  bool any = false;
  if (need)
    for (const Tensor& p : parts) any = any || p.requires_grad();
  if (need && any) {
    TensorNode* self = out.node().get();
    std::vector<TensorNode*> ps;
    out.node()->requires_grad = true;
    for (const Tensor& p : parts) {
      out.node()->parents.push_back(p.node());
      ps.push_back(p.node().get());
    }
    out.node()->backward = [self, ps, cols] {
      int r0 = 0;
      for (TensorNode* p : ps) {
        const int pr = p->shape[0];
        if (p->requires_grad) {
          p->ensure_grad();
          for (int64_t i = 0; i < p->numel(); ++i)
            p->grad[i] += self->grad[r0 * cols + i];
        }
        r0 += pr;
      }
    };
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty())
    throw std::invalid_argument("concat_cols: no parts");
  const int rows = parts[0].dim(0);
  int cols = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != 2 || p.dim(0) != rows)
      throw std::invalid_argument("concat_cols: row mismatch at " +
                                  shape_str(p.shape()));
    cols += p.dim(1);
  }
  Tensor out({rows, cols});
  int c = 0;
  for (const Tensor& p : parts) {
    const int w = p.dim(1);
    for (int r = 0; r < rows; ++r)
      std::copy_n(p.data() + r * w, w, out.data() + r * cols + c);
    c += w;
  }
  bool any = false;
  if (grad_enabled())
    for (const Tensor& p : parts) any = any || p.requires_grad();
  if (any) {
    TensorNode* self = out.node().get();
    std::vector<TensorNode*> ps;
    out.node()->requires_grad = true;
    for (const Tensor& p : parts) {
      out.node()->parents.push_back(p.node());
      ps.push_back(p.node().get());
    }
    out.node()->backward = [self, ps, rows, cols] {
      int c0 = 0;
      for (TensorNode* p : ps) {
        const int w = p->shape[1];
        if (p->requires_grad) {
          p->ensure_grad();
          for (int r = 0; r < rows; ++r)
            for (int j = 0; j < w; ++j)
              p->grad[r * w + j] += self->grad[r * cols + c0 + j];
        }
        c0 += w;
      }
    };
  }
  return out;
}

Tensor reshape(const Tensor& x, std::vector<int> new_shape) {
  if (shape_numel(new_shape) != x.numel())
    throw std::invalid_argument("reshape: " + shape_str(x.shape()) +
                                " has different element count than " +
                                shape_str(new_shape));
  Tensor out(std::move(new_shape), x.vec());
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn] {
      xn->ensure_grad();
      for (int64_t i = 0; i < xn->numel(); ++i)
        xn->grad[i] += self->grad[i];
    });
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  double s = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) s += x.data()[i];
  Tensor out = Tensor::scalar(s);
  if (track({&x})) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    attach(out, {&x}, [self, xn] {
      xn->ensure_grad();
      for (int64_t i = 0; i < xn->numel(); ++i)
        xn->grad[i] += self->grad[0];
    });
  }
  return out;
}

Tensor mean_scalars(const std::vector<Tensor>& xs) {
  if (xs.empty())
    throw std::invalid_argument("mean_scalars: empty input");
  double s = 0.0;
  for (const Tensor& t : xs) s += t.value();
  const int n = static_cast<int>(xs.size());
  Tensor out = Tensor::scalar(s / n);
  bool any = false;
  if (grad_enabled())
    for (const Tensor& t : xs) any = any || t.requires_grad();
  if (any) {
    TensorNode* self = out.node().get();
    std::vector<TensorNode*> ps;
    out.node()->requires_grad = true;
    for (const Tensor& t : xs) {
      out.node()->parents.push_back(t.node());
      ps.push_back(t.node().get());
    }
    out.node()->backward = [self, ps, n] {
      for (TensorNode* p : ps)
        if (p->requires_grad) {
          p->ensure_grad();
          p->grad[0] += self->grad[0] / n;
        }
    };
  }
  return out;
}

}  // namespace svqa
