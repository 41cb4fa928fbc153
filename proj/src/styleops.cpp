#include "t3s/styleops.hpp"

#include "t3s/ops.hpp"

namespace t3s {
namespace {

void require_feature_map(const Tensor& f) {
  if (!f.defined() || f.rank() != 3) {
    throw ShapeError("style_stats: expected a (C, H, W) feature map, got " +
                     (f.defined() ? shape_str(f.shape()) : std::string("undefined")));
  }
  if (f.dim(1) * f.dim(2) == 0) throw ShapeError("style_stats: empty spatial extent");
}

}  // namespace

std::vector<double> StyleVector::flat() const {
  std::vector<double> v = mu.to_vector();
  auto s = sigma.data();
  v.insert(v.end(), s.begin(), s.end());
  return v;
}

StyleVector style_stats(const Tensor& feature) {
  return decompose(feature).first;
}

std::pair<StyleVector, ContentMap> decompose(const Tensor& feature) {
  require_feature_map(feature);
  Tensor mu = mean(feature, {1, 2});
  Tensor centred = sub(feature, mu);
  Tensor var = mean(mul(centred, centred), {1, 2});
  Tensor sigma = sqrt(add(var, Tensor::scalar(kStyleEpsilon)));
  Tensor content = div(centred, sigma);
  return {StyleVector{mu, sigma}, ContentMap{content}};
}

Tensor recompose(const StyleVector& style, const ContentMap& content) {
  const Tensor& c = content.data;
  if (c.rank() != 3 || style.mu.rank() != 1 || style.sigma.rank() != 1 ||
      style.mu.numel() != c.dim(0) || style.sigma.numel() != c.dim(0)) {
    throw ShapeError("recompose: channel mismatch between style " + shape_str(style.mu.shape()) +
                     " and content " + shape_str(c.shape()));
  }
  return add(mul(c, style.sigma), style.mu);
}

}  // namespace t3s
