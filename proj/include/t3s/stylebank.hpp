#pragma once

#include <cstdint>

#include "t3s/styleops.hpp"
#include "t3s/tensor.hpp"

namespace t3s {

/// Learnable style bases B_i = (mu_i, sigma_i). Deviations are stored
/// unconstrained and mapped through softplus, so every effective sigma is
/// strictly positive.
struct StyleBank {
  Tensor raw_mu;     // (n, C)
  Tensor raw_sigma;  // (n, C)

  std::size_t bases() const { return raw_mu.dim(0); }
  std::size_t channels() const { return raw_mu.dim(1); }
  Tensor sigma() const;
  /// Detached copy of basis i as a StyleVector.
  StyleVector basis(std::size_t i) const;
};

/// Normalisation of the orthogonality loss. kOrderedPairs divides the sum
/// over ordered pairs i != j by n(n-1) and is bounded by 1; kLiteral divides
/// the same sum by (n-1)^2.
enum class OrthoNormalization { kOrderedPairs, kLiteral };

StyleBank init_bank(std::size_t n, std::size_t channels, std::uint64_t seed);

double inverse_softplus(double y);

/// Cosine affinity pair (cos(mu_s, mu_b), cos(sigma_s, sigma_b)); both are
/// scalar tensors on the graph.
struct Affinity {
  Tensor d_mu;
  Tensor d_sigma;
};

Affinity cosine_affinity(const StyleVector& style, const StyleVector& basis);

/// Affinities of a style against every basis of the bank, length-n each.
Affinity bank_affinities(const StyleVector& style, const StyleBank& bank);

/// Softmax mixing weights, one simplex vector per style component.
struct ProjectionWeights {
  Tensor w_mu;
  Tensor w_sigma;
};

struct Projection {
  StyleVector style;
  ProjectionWeights weights;
};

/// Replaces a style with the softmax(affinity)-weighted combination of the
/// bank's bases, independently for mu and sigma.
Projection project_style(const StyleVector& style, const StyleBank& bank);

/// Mean squared cosine between distinct bases, each basis taken as the
/// concatenated 2C-vector (mu_i, sigma_i).
Tensor orthogonality_loss(const StyleBank& bank,
                          OrthoNormalization norm = OrthoNormalization::kOrderedPairs);

}  // namespace t3s
