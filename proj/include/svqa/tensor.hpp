#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "svqa/rng.hpp"

namespace svqa {

std::string shape_str(const std::vector<int>& shape);
int64_t shape_numel(const std::vector<int>& shape);

// One node of the dynamic computation graph. Ops allocate an output node,
// fill data, and attach a backward closure that reads this node's grad and
// accumulates into the parents' grads.
struct TensorNode {
  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, same length as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void()> backward;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  bool is_leaf() const { return parents.empty(); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

// Value-semantics handle to a shared graph node. Copies alias the same
// storage; ops produce fresh nodes.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  int dim(int i) const { return node_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return node_->numel(); }

  double* data() { return node_->data.data(); }
  const double* data() const { return node_->data.data(); }
  std::vector<double>& vec() { return node_->data; }
  const std::vector<double>& vec() const { return node_->data; }

  // Scalar extraction; throws unless numel() == 1.
  double value() const;

  double at(std::initializer_list<int> idx) const;
  double& at(std::initializer_list<int> idx);

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool v = true) {
    node_->requires_grad = v;
    return *this;
  }

  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  const std::vector<double>& grad() const;
  double* grad_data();
  void zero_grad();

  // Reverse-mode sweep from a scalar root. Non-leaf grads are scratch per
  // call; leaf grads accumulate across calls until zero_grad().
  void backward();

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// Thread-local autograd switch; ops record no graph while disabled.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

Tensor zeros(std::vector<int> shape);
Tensor full(std::vector<int> shape, double v);
Tensor uniform_init(std::vector<int> shape, double lo, double hi, Rng& rng);
Tensor normal_init(std::vector<int> shape, double mean, double stddev,
                   Rng& rng);

}  // namespace svqa
