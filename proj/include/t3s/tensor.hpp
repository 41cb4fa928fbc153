#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace t3s {

using Shape = std::vector<std::size_t>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Raised when an operation would store a NaN or infinity.
class NumericError : public Error {
 public:
  using Error::Error;
};

std::size_t numel_of(const Shape& shape);
std::string shape_str(const Shape& shape);

struct Node;

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty when absent
  bool requires_grad = false;
  std::shared_ptr<Node> node;  // producing operation; null for leaves
  std::uint64_t id = 0;
};

/// Shared handle to a dense row-major array of doubles.
///
/// Copies of a Tensor alias the same storage. Operations on tensors that
/// require gradients record a node linking the result to its inputs; the
/// graph is rebuilt on every forward pass.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
  std::size_t numel() const { return impl_->data.size(); }
  std::uint64_t id() const { return impl_->id; }

  std::span<const double> data() const { return impl_->data; }
  /// Writable view, for optimizers and in-place initialisation of leaves.
  std::span<double> mutable_data() { return impl_->data; }
  double item() const;
  double at(std::size_t flat_index) const { return impl_->data.at(flat_index); }
  std::vector<double> to_vector() const { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool flag) { impl_->requires_grad = flag; }
  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const { return impl_->grad; }
  void zero_grad() { impl_->grad.clear(); }
  Tensor grad_tensor() const;

  /// Fresh leaf with a copy of the values and no history.
  Tensor detach() const;
  Tensor clone_leaf(bool requires_grad) const;

  const std::shared_ptr<Node>& node() const { return impl_->node; }
  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  static Tensor wrap(std::shared_ptr<TensorImpl> impl);

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Gradient callback of a recorded operation: receives the upstream
/// gradient and one accumulation buffer per input (null when the input does
/// not need a gradient).
struct BackwardFn {
  std::function<void(std::span<const double>, std::span<double* const>)> fn;
};

struct Node {
  std::string op;
  std::vector<Tensor> inputs;
  BackwardFn backward;
};

/// Builds an op result, checks finiteness, and records a node when any
/// input requires a gradient and recording is enabled.
Tensor make_result(std::string_view op, Shape shape, std::vector<double> data,
                   std::vector<Tensor> inputs, BackwardFn backward);

/// Disables graph recording on the current thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

/// Recorded operations reachable from a root, in topological order.
struct GraphEntry {
  std::string op;
  std::vector<std::uint64_t> inputs;
  std::uint64_t output = 0;
};

class Graph {
 public:
  static Graph trace(const Tensor& root);
  const std::vector<GraphEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<GraphEntry> entries_;
};

struct BackwardResult {
  std::unordered_map<std::uint64_t, Tensor> grads;  // tensor id -> gradient
  bool detached = false;  // loss had no path to any requires_grad input
};

/// Reverse-mode sweep from a scalar loss. Leaf tensors that require a
/// gradient get their grad overwritten with the value of this sweep.
BackwardResult backward(const Tensor& loss);

}  // namespace t3s
