#pragma once

#include <string>
#include <vector>

#include "svqa/ops.hpp"
#include "svqa/optim.hpp"
#include "svqa/tensor.hpp"

namespace svqa {

// RGB intensities in [0,1], row-major (y, x, channel).
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> rgb;

  Image() = default;
  Image(int h, int w);

  double& at(int y, int x, int c) { return rgb[(y * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return rgb[(y * width + x) * 3 + c]; }
  void clamp();
};

constexpr int kFeatureChannels = 256;

// Four stride-2 conv blocks (conv -> channel norm -> GeLU) ending in 256
// channels; trained end-to-end with the answering loss.
struct ConvBlock {
  Tensor w, b;          // [cout x cin x k x k], [cout]
  Tensor gamma, beta;   // channel norm affine
};

struct Cnn2d {
  std::vector<ConvBlock> blocks;

  void init(Rng& rng);
  Tensor forward(const Tensor& chw) const;  // [3 x H x W] -> [256 x h x w]
  void collect(ParamMap& out, const std::string& prefix) const;
};

// 3D front block collapses the 3-frame time axis, then the same kind of
// stride-2 spatial blocks as the 2D path.
struct Conv3dBlock {
  Tensor w, b;  // [cout x cin x 3 x k x k], [cout]
  Tensor gamma, beta;
};

struct Cnn3d {
  Conv3dBlock front;
  std::vector<ConvBlock> blocks;

  void init(Rng& rng);
  Tensor forward(const Tensor& cthw) const;  // [3 x 3 x H x W] -> [256 x h x w]
  void collect(ParamMap& out, const std::string& prefix) const;
};

// Unordered visual token bundle: n^2 raster-order rows of 256 features.
struct VisualTokens {
  int n = 0;
  Tensor features;  // [n^2 x 256], may be part of a live graph
};

Tensor image_to_tensor(const Image& img);              // constant [3 x H x W]
Tensor clip_to_tensor(const std::vector<Image>& clip);  // constant [3 x 3 x H x W]

Tensor extract_features_2d(const Image& img, const Cnn2d& cnn);
Tensor extract_features_3d(const std::vector<Image>& clip, const Cnn3d& cnn);

VisualTokens to_visual_tokens(const Tensor& pooled);  // [256 x n x n]

}  // namespace svqa
