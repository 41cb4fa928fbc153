#pragma once

#include <utility>

#include "t3s/tensor.hpp"

namespace t3s {

/// Variance floor under the square root of the per-channel deviation.
inline constexpr double kStyleEpsilon = 1e-5;

/// Per-channel style statistics of a (C, H, W) feature map. Both members are
/// rank-1 tensors of length C and stay attached to the graph.
struct StyleVector {
  Tensor mu;
  Tensor sigma;

  std::size_t channels() const { return mu.numel(); }
  /// mu followed by sigma, length 2C.
  std::vector<double> flat() const;
};

/// Instance-normalised residual: zero mean and unit deviation per channel.
struct ContentMap {
  Tensor data;
};

/// mu[c] = spatial mean, sigma[c] = sqrt(biased spatial variance + eps).
StyleVector style_stats(const Tensor& feature);

/// Splits a feature map into style and content; content = (f - mu) / sigma.
std::pair<StyleVector, ContentMap> decompose(const Tensor& feature);

/// Inverse of decompose: sigma * content + mu, per channel.
Tensor recompose(const StyleVector& style, const ContentMap& content);

}  // namespace t3s
