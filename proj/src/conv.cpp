#include <stdexcept>
#include <string>

#include "svqa/ops.hpp"

namespace svqa {

namespace {

int conv_out_len(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad) {
  if (x.rank() != 3 || w.rank() != 4 || x.dim(0) != w.dim(1))
    throw std::invalid_argument("conv2d: input " + shape_str(x.shape()) +
                                " incompatible with kernel " +
                                shape_str(w.shape()));
  const int cin = x.dim(0), h = x.dim(1), wd = x.dim(2);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (b.rank() != 1 || b.dim(0) != cout)
    throw std::invalid_argument("conv2d: bias " + shape_str(b.shape()) +
                                " incompatible with kernel " +
                                shape_str(w.shape()));
  const int oh = conv_out_len(h, kh, stride, pad);
  const int ow = conv_out_len(wd, kw, stride, pad);
  if (oh <= 0 || ow <= 0)
    throw std::invalid_argument("conv2d: kernel " + shape_str(w.shape()) +
                                " too large for input " +
                                shape_str(x.shape()));
  Tensor out({cout, oh, ow});
  for (int oc = 0; oc < cout; ++oc) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = b.data()[oc];
        for (int ic = 0; ic < cin; ++ic) {
          for (int ky = 0; ky < kh; ++ky) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= h) continue;
            const double* xrow = x.data() + (ic * h + iy) * wd;
            const double* wrow = w.data() + ((oc * cin + ic) * kh + ky) * kw;
            for (int kx = 0; kx < kw; ++kx) {
              const int ix = ox * stride + kx - pad;
              if (ix < 0 || ix >= wd) continue;
              acc += wrow[kx] * xrow[ix];
            }
          }
        }
        out.data()[(oc * oh + oy) * ow + ox] = acc;
      }
    }
  }
  bool need = grad_enabled() &&
              (x.requires_grad() || w.requires_grad() || b.requires_grad());
  if (need) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    TensorNode* wn = w.node().get();
    TensorNode* bn = b.node().get();
    out.node()->requires_grad = true;
    out.node()->parents = {x.node(), w.node(), b.node()};
    out.node()->backward = [self, xn, wn, bn, cin, h, wd, cout, kh, kw, oh,
                            ow, stride, pad] {
      const bool gx = xn->requires_grad, gw = wn->requires_grad,
                 gb = bn->requires_grad;
      if (gx) xn->ensure_grad();
      if (gw) wn->ensure_grad();
      if (gb) bn->ensure_grad();
      for (int oc = 0; oc < cout; ++oc) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            const double g = self->grad[(oc * oh + oy) * ow + ox];
            if (g == 0.0) continue;
            if (gb) bn->grad[oc] += g;
            for (int ic = 0; ic < cin; ++ic) {
              for (int ky = 0; ky < kh; ++ky) {
                const int iy = oy * stride + ky - pad;
                if (iy < 0 || iy >= h) continue;
                const int xbase = (ic * h + iy) * wd;
                const int wbase = ((oc * cin + ic) * kh + ky) * kw;
                for (int kx = 0; kx < kw; ++kx) {
                  const int ix = ox * stride + kx - pad;
                  if (ix < 0 || ix >= wd) continue;
                  if (gw) wn->grad[wbase + kx] += g * xn->data[xbase + ix];
                  if (gx) xn->grad[xbase + ix] += g * wn->data[wbase + kx];
                }
              }
            }
          }
        }
      }
    };
  }
  return out;
}

Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, int stride_t,
              int stride_s, int pad_t, int pad_s) {
  if (x.rank() != 4 || w.rank() != 5 || x.dim(0) != w.dim(1))
    throw std::invalid_argument("conv3d: input " + shape_str(x.shape()) +
                                " incompatible with kernel " +
                                shape_str(w.shape()));
  const int cin = x.dim(0), t = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kt = w.dim(2), kh = w.dim(3), kw = w.dim(4);
  if (b.rank() != 1 || b.dim(0) != cout)
    throw std::invalid_argument("conv3d: bias " + shape_str(b.shape()) +
                                " incompatible with kernel " +
                                shape_str(w.shape()));
  const int ot = conv_out_len(t, kt, stride_t, pad_t);
  const int oh = conv_out_len(h, kh, stride_s, pad_s);
  const int ow = conv_out_len(wd, kw, stride_s, pad_s);
  if (ot <= 0 || oh <= 0 || ow <= 0)
    throw std::invalid_argument("conv3d: kernel " + shape_str(w.shape()) +
                                " too large for input " +
                                shape_str(x.shape()));
  Tensor out({cout, ot, oh, ow});
  for (int oc = 0; oc < cout; ++oc)
    for (int oz = 0; oz < ot; ++oz)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b.data()[oc];
          for (int ic = 0; ic < cin; ++ic)
            for (int kz = 0; kz < kt; ++kz) {
              const int iz = oz * stride_t + kz - pad_t;
              if (iz < 0 || iz >= t) continue;
              for (int ky = 0; ky < kh; ++ky) {
                const int iy = oy * stride_s + ky - pad_s;
                if (iy < 0 || iy >= h) continue;
                const double* xrow = x.data() + ((ic * t + iz) * h + iy) * wd;
                const double* wrow =
                    w.data() + (((oc * cin + ic) * kt + kz) * kh + ky) * kw;
                for (int kx = 0; kx < kw; ++kx) {
                  const int ix = ox * stride_s + kx - pad_s;
                  if (ix < 0 || ix >= wd) continue;
                  acc += wrow[kx] * xrow[ix];
                }
              }
            }
          out.data()[((oc * ot + oz) * oh + oy) * ow + ox] = acc;
        }
  bool need = grad_enabled() &&
              (x.requires_grad() || w.requires_grad() || b.requires_grad());
  if (need) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    TensorNode* wn = w.node().get();
    TensorNode* bn = b.node().get();
    out.node()->requires_grad = true;
    out.node()->parents = {x.node(), w.node(), b.node()};
    out.node()->backward = [self, xn, wn, bn, cin, t, h, wd, cout, kt, kh, kw,
                            ot, oh, ow, stride_t, stride_s, pad_t, pad_s] {
      const bool gx = xn->requires_grad, gw = wn->requires_grad,
                 gb = bn->requires_grad;
      if (gx) xn->ensure_grad();
      if (gw) wn->ensure_grad();
      if (gb) bn->ensure_grad();
      for (int oc = 0; oc < cout; ++oc)
        for (int oz = 0; oz < ot; ++oz)
          for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
              const double g =
                  self->grad[((oc * ot + oz) * oh + oy) * ow + ox];
              if (g == 0.0) continue;
              if (gb) bn->grad[oc] += g;
              for (int ic = 0; ic < cin; ++ic)
                for (int kz = 0; kz < kt; ++kz) {
                  const int iz = oz * stride_t + kz - pad_t;
                  if (iz < 0 || iz >= t) continue;
                  for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy * stride_s + ky - pad_s;
                    if (iy < 0 || iy >= h) continue;
                    const int xbase = ((ic * t + iz) * h + iy) * wd;
                    const int wbase =
                        (((oc * cin + ic) * kt + kz) * kh + ky) * kw;
                    for (int kx = 0; kx < kw; ++kx) {
                      const int ix = ox * stride_s + kx - pad_s;
                      if (ix < 0 || ix >= wd) continue;
                      if (gw) wn->grad[wbase + kx] += g * xn->data[xbase + ix];
                      if (gx) xn->grad[xbase + ix] += g * wn->data[wbase + kx];
                    }
                  }
                }
            }
    };
  }
  return out;
}

Tensor adaptive_avg_pool2d(const Tensor& x, int n) {
  if (n <= 0)
    throw std::invalid_argument("adaptive_avg_pool2d: n must be positive");
  if (x.rank() != 3)
    throw std::invalid_argument("adaptive_avg_pool2d: need [C x H x W], got " +
                                shape_str(x.shape()));
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({c, n, n});
  // Bin (i, j): rows [floor(i*h/n), ceil((i+1)*h/n)), cols likewise.
  auto lo = [](int i, int len, int n_) { return (i * len) / n_; };
  auto hi = [](int i, int len, int n_) {
    return ((i + 1) * len + n_ - 1) / n_;
  };
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int y0 = lo(i, h, n), y1 = hi(i, h, n);
        const int x0 = lo(j, w, n), x1 = hi(j, w, n);
        double acc = 0.0;
        for (int y = y0; y < y1; ++y)
          for (int xx = x0; xx < x1; ++xx)
            acc += x.data()[(ch * h + y) * w + xx];
        out.data()[(ch * n + i) * n + j] =
            acc / ((y1 - y0) * (x1 - x0));
      }
  if (grad_enabled() && x.requires_grad()) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    out.node()->requires_grad = true;
    out.node()->parents = {x.node()};
    out.node()->backward = [self, xn, c, h, w, n, lo, hi] {
      xn->ensure_grad();
      for (int ch = 0; ch < c; ++ch)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const int y0 = lo(i, h, n), y1 = hi(i, h, n);
            const int x0 = lo(j, w, n), x1 = hi(j, w, n);
            const double g = self->grad[(ch * n + i) * n + j] /
                             ((y1 - y0) * (x1 - x0));
            for (int y = y0; y < y1; ++y)
              for (int xx = x0; xx < x1; ++xx)
                xn->grad[(ch * h + y) * w + xx] += g;
          }
    };
  }
  return out;
}

Tensor chw_to_rows(const Tensor& x) {
  if (x.rank() != 3)
    throw std::invalid_argument("chw_to_rows: need [C x H x W], got " +
                                shape_str(x.shape()));
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out({h * w, c});
  for (int ch = 0; ch < c; ++ch)
    for (int p = 0; p < h * w; ++p)
      out.data()[p * c + ch] = x.data()[ch * h * w + p];
  if (grad_enabled() && x.requires_grad()) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    out.node()->requires_grad = true;
    out.node()->parents = {x.node()};
    out.node()->backward = [self, xn, c, h, w] {
      xn->ensure_grad();
      for (int ch = 0; ch < c; ++ch)
        for (int p = 0; p < h * w; ++p)
          xn->grad[ch * h * w + p] += self->grad[p * c + ch];
    };
  }
  return out;
}

Tensor rows_to_chw(const Tensor& x, int channels, int h, int w) {
  if (x.rank() != 2 || x.dim(0) != h * w || x.dim(1) != channels)
    throw std::invalid_argument("rows_to_chw: " + shape_str(x.shape()) +
                                " does not match " + std::to_string(channels) +
                                "x" + std::to_string(h) + "x" +
                                std::to_string(w));
  Tensor out({channels, h, w});
  for (int ch = 0; ch < channels; ++ch)
    for (int p = 0; p < h * w; ++p)
      out.data()[ch * h * w + p] = x.data()[p * channels + ch];
  if (grad_enabled() && x.requires_grad()) {
    TensorNode* self = out.node().get();
    TensorNode* xn = x.node().get();
    out.node()->requires_grad = true;
    out.node()->parents = {x.node()};
    out.node()->backward = [self, xn, channels, h, w] {
      xn->ensure_grad();
      for (int ch = 0; ch < channels; ++ch)
        for (int p = 0; p < h * w; ++p)
          xn->grad[p * channels + ch] += self->grad[ch * h * w + p];
    };
  }
  return out;
}

}  // namespace svqa
