#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "svqa/tensor.hpp"

namespace svqa {

using ParamMap = std::vector<std::pair<std::string, Tensor>>;

struct AdamState {
  int64_t step = 0;
  Tensor m, v;  // first/second moment, shaped like the owned parameter
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState for_param(const Tensor& param, double lr) {
    AdamState s;
    s.lr = lr;
    s.m = Tensor(param.shape());
    s.v = Tensor(param.shape());
    return s;
  }
};

// Bias-corrected Adam update in place. The caller clears grads afterwards.
inline void adam_step(Tensor& param, AdamState& state) {
  if (!param.has_grad())
    throw std::runtime_error("adam_step: parameter has no gradient");
  if (state.m.shape() != param.shape() || state.v.shape() != param.shape())
    throw std::invalid_argument("adam_step: moment shape " +
                                shape_str(state.m.shape()) +
                                " does not match parameter " +
                                shape_str(param.shape()));
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  const double* g = param.grad().data();
  double* m = state.m.data();
  double* v = state.v.data();
  double* p = param.data();
  const int64_t n = param.numel();
  for (int64_t i = 0; i < n; ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
}

// Convenience wrapper over a named parameter set.
class AdamOptimizer {
 public:
  AdamOptimizer(ParamMap params, double lr) : params_(std::move(params)) {
    for (auto& [name, p] : params_)
      states_.push_back(AdamState::for_param(p, lr));
  }

  void step() {
    for (size_t i = 0; i < params_.size(); ++i) {
      if (!params_[i].second.has_grad()) continue;  // unused this step
      adam_step(params_[i].second, states_[i]);
    }
  }

  void zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
  }

  const ParamMap& params() const { return params_; }

 private:
  ParamMap params_;
  std::vector<AdamState> states_;
};

}  // namespace svqa
