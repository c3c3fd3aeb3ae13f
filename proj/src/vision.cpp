#include "svqa/vision.hpp"

#include <cmath>
#include <stdexcept>

namespace svqa {

namespace {
const int kCnnChannels[] = {32, 64, 128, 256};

Tensor norm_gelu(const Tensor& conv_out, const Tensor& gamma,
                 const Tensor& beta) {
  const int c = conv_out.dim(0), h = conv_out.dim(1), w = conv_out.dim(2);
  Tensor rows = chw_to_rows(conv_out);
  rows = layer_norm(rows, gamma, beta);
  rows = gelu(rows);
  return rows_to_chw(rows, c, h, w);
}

ConvBlock make_block(int cin, int cout, Rng& rng) {
  ConvBlock blk;
  const double bound = 1.0 / std::sqrt(double(cin) * 3 * 3);
  blk.w = uniform_init({cout, cin, 3, 3}, -bound, bound, rng);
  blk.b = uniform_init({cout}, -bound, bound, rng);
  blk.gamma = full({cout}, 1.0);
  blk.beta = zeros({cout});
  blk.w.set_requires_grad();
  blk.b.set_requires_grad();
  blk.gamma.set_requires_grad();
  blk.beta.set_requires_grad();
  return blk;
}

void collect_block(const ConvBlock& blk, ParamMap& out,
                   const std::string& prefix) {
  out.emplace_back(prefix + ".w", blk.w);
  out.emplace_back(prefix + ".b", blk.b);
  out.emplace_back(prefix + ".gamma", blk.gamma);
  out.emplace_back(prefix + ".beta", blk.beta);
}

}  // namespace

Image::Image(int h, int w) : height(h), width(w) {
  if (h < 32 || w < 32)
    throw std::invalid_argument("image must be at least 32x32, got " +
                                std::to_string(h) + "x" + std::to_string(w));
  rgb.assign(static_cast<size_t>(h) * w * 3, 0.0);
}

void Image::clamp() {
  for (double& v : rgb) v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

void Cnn2d::init(Rng& rng) {
  blocks.clear();
  int cin = 3;
  for (int cout : kCnnChannels) {
    blocks.push_back(make_block(cin, cout, rng));
    cin = cout;
  }
}

Tensor Cnn2d::forward(const Tensor& chw) const {
  if (chw.rank() != 3 || chw.dim(0) != 3)
    throw std::invalid_argument("Cnn2d: need [3 x H x W], got " +
                                shape_str(chw.shape()));
  Tensor x = chw;
  for (const ConvBlock& blk : blocks) {
    x = conv2d(x, blk.w, blk.b, /*stride=*/2, /*pad=*/1);
    x = norm_gelu(x, blk.gamma, blk.beta);
  }
  return x;
}

void Cnn2d::collect(ParamMap& out, const std::string& prefix) const {
  for (size_t i = 0; i < blocks.size(); ++i)
    collect_block(blocks[i], out, prefix + ".block" + std::to_string(i));
}

void Cnn3d::init(Rng& rng) {
  const int c0 = kCnnChannels[0];
  const double bound = 1.0 / std::sqrt(double(3) * 3 * 3 * 3);
  front.w = uniform_init({c0, 3, 3, 3, 3}, -bound, bound, rng);
  front.b = uniform_init({c0}, -bound, bound, rng);
  front.gamma = full({c0}, 1.0);
  front.beta = zeros({c0});
  front.w.set_requires_grad();
  front.b.set_requires_grad();
  front.gamma.set_requires_grad();
  front.beta.set_requires_grad();
  blocks.clear();
  int cin = c0;
  for (size_t i = 1; i < std::size(kCnnChannels); ++i) {
    blocks.push_back(make_block(cin, kCnnChannels[i], rng));
    cin = kCnnChannels[i];
  }
}

Tensor Cnn3d::forward(const Tensor& cthw) const {
  if (cthw.rank() != 4 || cthw.dim(0) != 3 || cthw.dim(1) != 3)
    throw std::invalid_argument("Cnn3d: need [3 x 3 x H x W], got " +
                                shape_str(cthw.shape()));
  // Time collapses here: kernel depth 3, no temporal padding.
  Tensor x = conv3d(cthw, front.w, front.b, /*stride_t=*/1, /*stride_s=*/2,
                    /*pad_t=*/0, /*pad_s=*/1);
  const int c = x.dim(0), h = x.dim(2), w = x.dim(3);
  x = reshape(x, {c, h, w});
  x = norm_gelu(x, front.gamma, front.beta);
  for (const ConvBlock& blk : blocks) {
    x = conv2d(x, blk.w, blk.b, 2, 1);
    x = norm_gelu(x, blk.gamma, blk.beta);
  }
  return x;
}

void Cnn3d::collect(ParamMap& out, const std::string& prefix) const {
  out.emplace_back(prefix + ".front.w", front.w);
  out.emplace_back(prefix + ".front.b", front.b);
  out.emplace_back(prefix + ".front.gamma", front.gamma);
  out.emplace_back(prefix + ".front.beta", front.beta);
  for (size_t i = 0; i < blocks.size(); ++i)
    collect_block(blocks[i], out, prefix + ".block" + std::to_string(i));
}

Tensor image_to_tensor(const Image& img) {
  if (img.height < 32 || img.width < 32)
    throw std::invalid_argument("image must be at least 32x32, got " +
                                std::to_string(img.height) + "x" +
                                std::to_string(img.width));
  Tensor t({3, img.height, img.width});
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        t.data()[(c * img.height + y) * img.width + x] = img.at(y, x, c);
  return t;
}

Tensor clip_to_tensor(const std::vector<Image>& clip) {
  if (clip.size() != 3)
    throw std::invalid_argument("clip must have exactly 3 frames, got " +
                                std::to_string(clip.size()));
  const int h = clip[0].height, w = clip[0].width;
  for (const Image& f : clip)
    if (f.height != h || f.width != w)
      throw std::invalid_argument("clip frames must share one size");
  Tensor t({3, 3, h, w});
  for (int f = 0; f < 3; ++f)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          t.data()[((c * 3 + f) * h + y) * w + x] = clip[f].at(y, x, c);
  return t;
}

Tensor extract_features_2d(const Image& img, const Cnn2d& cnn) {
  return cnn.forward(image_to_tensor(img));
}

Tensor extract_features_3d(const std::vector<Image>& clip, const Cnn3d& cnn) {
  return cnn.forward(clip_to_tensor(clip));
}

VisualTokens to_visual_tokens(const Tensor& pooled) {
  if (pooled.rank() != 3 || pooled.dim(1) != pooled.dim(2))
    throw std::invalid_argument("to_visual_tokens: need [C x n x n], got " +
                                shape_str(pooled.shape()));
  VisualTokens vt;
  vt.n = pooled.dim(1);
  vt.features = chw_to_rows(pooled);
  return vt;
}

}  // namespace svqa
