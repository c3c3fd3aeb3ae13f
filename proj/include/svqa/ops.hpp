#pragma once

#include <vector>

#include "svqa/tensor.hpp"

namespace svqa {

// Elementwise arithmetic (same-shape, plus scalar forms).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// Adds a constant buffer (no gradient w.r.t. the constant); used for masks.
Tensor add_const(const Tensor& a, const std::vector<double>& c);
// Multiplies row i of a [N x d] matrix by s[i]; used to zero pad rows.
Tensor scale_rows(const Tensor& x, const std::vector<double>& s);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }

// Exact row-major product of [m x k] by [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose2d(const Tensor& x);
// x [N x in] -> [N x out] with w [out x in], bias b [out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Exact-erf GeLU: 0.5 * x * (1 + erf(x / sqrt(2))).
Tensor gelu(const Tensor& x);
Tensor tanh_t(const Tensor& x);

// Standardizes the last axis then applies the gamma/beta affine map.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-12);

// Max-subtracted softmax along `axis` of a rank-1 or rank-2 tensor.
Tensor softmax(const Tensor& x, int axis = -1);

constexpr int kNoIgnore = -1;
// Mean negative log-softmax over the non-ignored rows of [B x K] logits.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     int ignore_index = kNoIgnore);

// Inverted-scaling dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

// Gathers rows of table [V x d] by id; backward scatter-adds.
Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids);

Tensor slice_rows(const Tensor& x, int r0, int r1);
Tensor slice_cols(const Tensor& x, int c0, int c1);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
inline Tensor row(const Tensor& x, int i) { return slice_rows(x, i, i + 1); }

Tensor reshape(const Tensor& x, std::vector<int> new_shape);

Tensor sum_all(const Tensor& x);
// Mean of scalar tensors; the usual reduction over a batch of losses.
Tensor mean_scalars(const std::vector<Tensor>& xs);

// Convolutions over channel-first layouts, zero padding.
// x [Cin x H x W], w [Cout x Cin x kh x kw], b [Cout].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
              int pad);
// x [Cin x T x H x W], w [Cout x Cin x kt x kh x kw], b [Cout].
Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b,
              int stride_t, int stride_s, int pad_t, int pad_s);

// Bin (i,j) of the n x n output averages rows [floor(i*h/n), ceil((i+1)*h/n))
// and the analogous column range, per channel. Bins may overlap when n > h.
Tensor adaptive_avg_pool2d(const Tensor& x, int n);

// [C x H x W] -> [H*W x C] raster-order rows, and the inverse.
Tensor chw_to_rows(const Tensor& x);
Tensor rows_to_chw(const Tensor& x, int channels, int h, int w);

}  // namespace svqa
