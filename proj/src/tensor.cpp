#include "t3s/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace t3s {
namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local bool t_grad_enabled = true;

std::shared_ptr<TensorImpl> new_impl(Shape shape, std::vector<double> data,
                                     bool requires_grad) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  impl->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return impl;
}

// Post-order DFS; iterative so deep graphs cannot overflow the stack.
std::vector<TensorImpl*> topo_order(const Tensor& root) {
  std::vector<TensorImpl*> order;
  std::unordered_set<TensorImpl*> seen;
  struct Frame {
    TensorImpl* t;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root.impl().get(), 0});
  seen.insert(root.impl().get());
  while (!stack.empty()) {
    Frame& top = stack.back();
    Node* node = top.t->node.get();
    if (node != nullptr && top.next < node->inputs.size()) {
      TensorImpl* child = node->inputs[top.next++].impl().get();
      if (seen.insert(child).second) stack.push_back({child, 0});
      continue;
    }
    order.push_back(top.t);
    stack.pop_back();
  }
  return order;
}

}  // namespace

std::size_t numel_of(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  for (auto e : shape) {
    if (e == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (numel_of(shape) != data.size()) {
    throw ShapeError("shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  impl_ = new_impl(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::wrap(std::shared_ptr<TensorImpl> impl) {
  Tensor t;
  t.impl_ = std::move(impl);
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(numel_of(shape), value);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape shape{values.size()};
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

Tensor Tensor::grad_tensor() const {
  if (!has_grad()) return zeros(shape());
  return Tensor(shape(), impl_->grad);
}

Tensor Tensor::detach() const { return clone_leaf(false); }

Tensor Tensor::clone_leaf(bool requires_grad) const {
  return Tensor(shape(), impl_->data, requires_grad);
}

Tensor make_result(std::string_view op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs, BackwardFn backward) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NumericError(std::string(op) + ": non-finite value at index " + std::to_string(i));
    }
  }
  bool needs_grad = false;
  if (t_grad_enabled) {
    for (const auto& in : inputs) needs_grad = needs_grad || in.requires_grad();
  }
  auto impl = new_impl(std::move(shape), std::move(data), needs_grad);
  if (needs_grad) {
    auto node = std::make_shared<Node>();
    node->op = std::string(op);
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
    impl->node = std::move(node);
  }
  return Tensor::wrap(std::move(impl));
}

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }
bool grad_enabled() { return t_grad_enabled; }

Graph Graph::trace(const Tensor& root) {
  Graph g;
  for (TensorImpl* t : topo_order(root)) {
    if (!t->node) continue;
    GraphEntry e;
    e.op = t->node->op;
    e.output = t->id;
    for (const auto& in : t->node->inputs) e.inputs.push_back(in.id());
    g.entries_.push_back(std::move(e));
  }
  return g;
}

BackwardResult backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be scalar, got " +
                     (loss.defined() ? shape_str(loss.shape()) : std::string("undefined")));
  }
  BackwardResult result;
  if (!loss.requires_grad()) {
    result.detached = true;
    return result;
  }

  const std::vector<TensorImpl*> order = topo_order(loss);
  std::unordered_map<TensorImpl*, std::vector<double>> grads;
  grads[loss.impl().get()] = {1.0};

  std::vector<double*> sinks;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl* t = *it;
    auto found = grads.find(t);
    if (found == grads.end() || !t->node) continue;
    Node& node = *t->node;
    sinks.assign(node.inputs.size(), nullptr);
    for (std::size_t i = 0; i < node.inputs.size(); ++i) {
      TensorImpl* in = node.inputs[i].impl().get();
      if (!in->requires_grad) continue;
      auto& buf = grads[in];
      if (buf.empty()) buf.assign(in->data.size(), 0.0);
      sinks[i] = buf.data();
    }
    // `grads` may rehash on insertion above; look the upstream up again.
    node.backward.fn(grads.at(t), sinks);
  }

  for (TensorImpl* t : order) {
    auto found = grads.find(t);
    if (found == grads.end()) continue;
    if (!t->node) t->grad = found->second;
    result.grads.emplace(t->id, Tensor(t->shape, found->second));
  }
  return result;
}

}  // namespace t3s
