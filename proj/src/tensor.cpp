#include "svqa/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace svqa {

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

int64_t shape_numel(const std::vector<int>& shape) {
  int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<int> shape, double fill) {
  for (int d : shape) {
    if (d <= 0)
      throw std::invalid_argument("tensor dims must be positive, got " +
                                  shape_str(shape));
  }
  node_ = std::make_shared<TensorNode>();
  node_->data.assign(static_cast<size_t>(shape_numel(shape)), fill);
  node_->shape = std::move(shape);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size()))
    throw std::invalid_argument("tensor shape " + shape_str(shape) +
                                " does not match value count " +
                                std::to_string(values.size()));
  node_ = std::make_shared<TensorNode>();
  node_->shape = std::move(shape);
  node_->data = std::move(values);
}

double Tensor::value() const {
  if (numel() != 1)
    throw std::invalid_argument("value() requires a scalar, shape is " +
                                shape_str(shape()));
  return node_->data[0];
}

static size_t flat_index(const std::vector<int>& shape,
                         std::initializer_list<int> idx) {
  if (idx.size() != shape.size())
    throw std::invalid_argument("index rank mismatch for shape " +
                                shape_str(shape));
  size_t flat = 0;
  size_t axis = 0;
  for (int i : idx) {
    if (i < 0 || i >= shape[axis])
      throw std::out_of_range("index out of range for shape " +
                              shape_str(shape));
    flat = flat * static_cast<size_t>(shape[axis]) + static_cast<size_t>(i);
    ++axis;
  }
  return flat;
}

double Tensor::at(std::initializer_list<int> idx) const {
  return node_->data[flat_index(node_->shape, idx)];
}

double& Tensor::at(std::initializer_list<int> idx) {
  return node_->data[flat_index(node_->shape, idx)];
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad())
    throw std::runtime_error("tensor has no gradient; run backward() first");
  return node_->grad;
}

double* Tensor::grad_data() {
  node_->ensure_grad();
  return node_->grad.data();
}

void Tensor::zero_grad() {
  if (has_grad()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

namespace {

// Iterative post-order DFS; graphs can be thousands of nodes deep.
std::vector<TensorNode*> topo_order(TensorNode* root) {
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      TensorNode* parent = node->parents[next_child++].get();
      if (visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

}  // namespace

void Tensor::backward() {
  if (numel() != 1)
    throw std::invalid_argument("backward() requires a scalar root, shape is " +
                                shape_str(shape()));
  std::vector<TensorNode*> order = topo_order(node_.get());
  for (TensorNode* n : order) {
    if (!n->requires_grad) continue;
    if (n->is_leaf()) {
      n->ensure_grad();  // keep accumulated values
    } else {
      n->grad.assign(n->data.size(), 0.0);
    }
  }
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->requires_grad && n->backward) n->backward();
  }
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape), 0.0); }

Tensor full(std::vector<int> shape, double v) {
  return Tensor(std::move(shape), v);
}

Tensor uniform_init(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = rng.uniform(lo, hi);
  return t;
}

Tensor normal_init(std::vector<int> shape, double mean, double stddev,
                   Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.vec()) v = rng.normal(mean, stddev);
  return t;
}

}  // namespace svqa
