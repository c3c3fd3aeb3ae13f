#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "svqa/tensor.hpp"

namespace svqa {

// Central-difference verification of reverse-mode gradients.
//
// f must be deterministic (dropout off) and return a scalar tensor. The
// reverse-mode gradient of f at x is compared against
// (f(x + h*e_i) - f(x - h*e_i)) / 2h coordinate by coordinate, and the
// difference is reported relative to the overall gradient magnitude:
//   max_i |ad_i - fd_i| / max(1e-6, ||ad||_inf, ||fd||_inf).
// `max_coords` > 0 limits the sweep to an evenly strided coordinate subset
// (large parameter blocks would otherwise need 2 forwards per scalar).
inline double grad_check(const std::function<Tensor(const Tensor&)>& f,
                         Tensor& x, double h = 1e-5, int max_coords = 0) {
  x.set_requires_grad(true);
  x.zero_grad();
  Tensor y = f(x);
  y.backward();
  std::vector<double> ad = x.grad();

  const int64_t n = x.numel();
  int64_t stride = 1;
  if (max_coords > 0 && n > max_coords) stride = n / max_coords;

  std::vector<double> fd(ad.size(), 0.0);
  std::vector<int64_t> checked;
  {
    NoGradGuard ng;
    for (int64_t i = 0; i < n; i += stride) {
      const double orig = x.data()[i];
      x.data()[i] = orig + h;
      const double fp = f(x).value();
      x.data()[i] = orig - h;
      const double fm = f(x).value();
      x.data()[i] = orig;
      fd[i] = (fp - fm) / (2.0 * h);
      checked.push_back(i);
    }
  }

  double scale = 1e-6;
  for (int64_t i : checked)
    scale = std::max({scale, std::fabs(ad[i]), std::fabs(fd[i])});
  double worst = 0.0;
  for (int64_t i : checked)
    worst = std::max(worst, std::fabs(ad[i] - fd[i]) / scale);
  return worst;
}

}  // namespace svqa
