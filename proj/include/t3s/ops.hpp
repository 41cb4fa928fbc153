#pragma once

#include <functional>
#include <string_view>
#include <vector>

#include "t3s/tensor.hpp"

namespace t3s {

// Binary elementwise ops accept equal shapes, a one-element operand on
// either side, or a rank-1 operand whose length equals the other operand's
// leading extent (per-channel broadcast along trailing axes).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

/// 3x3 convolution, stride 1, zero padding 1.
/// x: (Cin, H, W), weight: (Cout, Cin, 3, 3) -> (Cout, H, W).
Tensor conv2d(const Tensor& x, const Tensor& weight);

Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor sqrt(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor clamp_min(const Tensor& x, double floor);

Tensor sum(const Tensor& x);
Tensor sum(const Tensor& x, const std::vector<std::size_t>& axes);
Tensor mean(const Tensor& x);
Tensor mean(const Tensor& x, const std::vector<std::size_t>& axes);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor softmax(const Tensor& x, std::size_t axis);
Tensor log_softmax(const Tensor& x, std::size_t axis);
Tensor reshape(const Tensor& x, Shape shape);

/// 2x2 average pooling of a (C, H, W) map with even H, W.
Tensor avg_pool2(const Tensor& x);
/// x2 bilinear upsampling of a (C, H, W) map (half-pixel centres, edge clamp).
Tensor upsample2(const Tensor& x);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
inline Tensor operator*(const Tensor& a, double s) { return mul(a, Tensor::scalar(s)); }
inline Tensor operator*(double s, const Tensor& a) { return mul(Tensor::scalar(s), a); }
inline Tensor operator+(const Tensor& a, double s) { return add(a, Tensor::scalar(s)); }

struct OpAttrs {
  std::vector<std::size_t> axes;
  std::size_t axis = 0;
  Shape shape;
  double value = 0.0;
};

/// Name-based dispatch over the primitive set. Unknown names are rejected.
Tensor forward_op(std::string_view name, const std::vector<Tensor>& inputs,
                  const OpAttrs& attrs = {});
std::vector<std::string_view> op_names();

using ScalarFn = std::function<Tensor(const Tensor&)>;

/// Compares reverse-mode gradients of a scalar function against central
/// differences. Returns max |analytic - numeric| / max(1, |analytic|).
double grad_check(const ScalarFn& f, const Tensor& x, double step = 1e-4);

}  // namespace t3s
