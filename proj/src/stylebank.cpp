#include "t3s/stylebank.hpp"

#include <cmath>

#include "t3s/ops.hpp"
#include "t3s/rng.hpp"

namespace t3s {
namespace {

// Norms are floored at 1e-8; flooring the squared norm keeps sqrt's
// derivative finite at the floor.
constexpr double kSquaredNormFloor = 1e-16;

Tensor norm_of(const Tensor& v) { return sqrt(clamp_min(sum(mul(v, v)), kSquaredNormFloor)); }

Tensor row_norms(const Tensor& m) {
  return sqrt(clamp_min(sum(mul(m, m), {1}), kSquaredNormFloor));
}

Tensor cosine(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("cosine_affinity: channel mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  return div(div(sum(mul(a, b)), norm_of(a)), norm_of(b));
}

// Cosine of every row of `rows` (n, C) against `v` (C).
Tensor cosine_rows(const Tensor& rows, const Tensor& v) {
  if (v.rank() != 1 || rows.dim(1) != v.numel()) {
    throw ShapeError("project_style: channel mismatch between bank " + shape_str(rows.shape()) +
                     " and style " + shape_str(v.shape()));
  }
  const std::size_t n = rows.dim(0);
  Tensor dots = reshape(matmul(rows, reshape(v, {v.numel(), 1})), {n});
  return div(div(dots, row_norms(rows)), norm_of(v));
}

Tensor mix_rows(const Tensor& weights, const Tensor& rows) {
  const std::size_t n = rows.dim(0), c = rows.dim(1);
  return reshape(matmul(reshape(weights, {1, n}), rows), {c});
}

}  // namespace

double inverse_softplus(double y) { return std::log(std::expm1(y)); }

Tensor StyleBank::sigma() const { return softplus(raw_sigma); }

StyleVector StyleBank::basis(std::size_t i) const {
  NoGradGuard no_grad;
  const std::size_t c = channels();
  auto mu_all = raw_mu.data();
  Tensor sig = sigma();
  std::vector<double> mu(mu_all.begin() + i * c, mu_all.begin() + (i + 1) * c);
  std::vector<double> sg(sig.data().begin() + i * c, sig.data().begin() + (i + 1) * c);
  return {Tensor::vector(std::move(mu)), Tensor::vector(std::move(sg))};
}

StyleBank init_bank(std::size_t n, std::size_t channels, std::uint64_t seed) {
  if (n < 2) throw Error("init_bank: need at least 2 bases, got " + std::to_string(n));
  if (channels < 1) throw Error("init_bank: need at least 1 channel");
  Rng rng(derive_seed(seed, "stylebank"));
  std::vector<double> mu(n * channels), raw_sigma(n * channels);
  for (auto& v : mu) v = standard_normal(rng);
  const double base = inverse_softplus(1.0);
  for (auto& v : raw_sigma) v = base + 0.1 * standard_normal(rng);
  return {Tensor({n, channels}, std::move(mu), true),
          Tensor({n, channels}, std::move(raw_sigma), true)};
}

Affinity cosine_affinity(const StyleVector& style, const StyleVector& basis) {
  return {cosine(style.mu, basis.mu), cosine(style.sigma, basis.sigma)};
}

Affinity bank_affinities(const StyleVector& style, const StyleBank& bank) {
  return {cosine_rows(bank.raw_mu, style.mu), cosine_rows(bank.sigma(), style.sigma)};
}

Projection project_style(const StyleVector& style, const StyleBank& bank) {
  const Tensor sig = bank.sigma();
  const Tensor w_mu = softmax(cosine_rows(bank.raw_mu, style.mu), 0);
  const Tensor w_sigma = softmax(cosine_rows(sig, style.sigma), 0);
  return {StyleVector{mix_rows(w_mu, bank.raw_mu), mix_rows(w_sigma, sig)},
          ProjectionWeights{w_mu, w_sigma}};
}

Tensor orthogonality_loss(const StyleBank& bank, OrthoNormalization norm) {
  const std::size_t n = bank.bases();
  const Tensor v = concat({bank.raw_mu, bank.sigma()}, 1);
  const Tensor norms = row_norms(v);
  const Tensor gram = matmul(v, transpose(v));
  const Tensor outer = matmul(reshape(norms, {n, 1}), reshape(norms, {1, n}));
  const Tensor cos = div(gram, outer);
  std::vector<double> off_diagonal(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) off_diagonal[i * n + i] = 0.0;
  const Tensor masked = mul(mul(cos, cos), Tensor({n, n}, std::move(off_diagonal)));
  const double pairs = norm == OrthoNormalization::kOrderedPairs
                           ? static_cast<double>(n * (n - 1))
                           : static_cast<double>((n - 1) * (n - 1));
  return mul(sum(masked), Tensor::scalar(1.0 / pairs));
}

}  // namespace t3s
