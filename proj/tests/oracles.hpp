#pragma once

// Independent reference computations for the simplex-weight diagnostics.

#include <cmath>
#include <limits>
#include <vector>

#include "t3s/rng.hpp"
#include "t3s/shiftdiag.hpp"

namespace t3s::testing {

inline double mixture_distance(const std::vector<double>& target,
                               const std::vector<DomainStyleSummary>& sources,
                               const std::vector<double>& eta) {
  double s = 0.0;
  for (std::size_t j = 0; j < target.size(); ++j) {
    double r = target[j];
    for (std::size_t i = 0; i < sources.size(); ++i) r -= eta[i] * sources[i].centroid[j];
    s += r * r;
  }
  return std::sqrt(s);
}

struct GridResult {
  std::vector<double> eta;
  double gamma = std::numeric_limits<double>::infinity();
};

/// Exhaustive search over the 3-source simplex at the given resolution.
inline GridResult grid_search_eta(const std::vector<double>& target,
                                  const std::vector<DomainStyleSummary>& sources, int steps = 100) {
  GridResult best;
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; a + b <= steps; ++b) {
      const std::vector<double> eta = {a / double(steps), b / double(steps), (steps - a - b) / double(steps)};
      const double g = mixture_distance(target, sources, eta);
      if (g < best.gamma) best = {eta, g};
    }
  return best;
}

struct SimplexInstance {
  std::vector<DomainStyleSummary> sources;
  DomainStyleSummary target;
  std::vector<double> eta;  // exact minimiser, on the 0.01 grid
  double gamma = 0.0;       // exact minimum
};

// Three random centroids in 5-D and a minimiser eta* on the 0.01 grid.
// The target is C eta* plus a component orthogonal to the sources' affine
// plane, and, when eta* lies on an edge, an in-plane push perpendicular to
// that edge and away from the opposite vertex. Either way eta* stays the
// unique minimiser and gamma is the length of the added offset.
inline SimplexInstance random_simplex_instance(Rng& rng, bool on_edge) {
  constexpr std::size_t d = 5;
  SimplexInstance inst;
  for (int i = 0; i < 3; ++i) {
    DomainStyleSummary s;
    s.name = "s" + std::to_string(i);
    for (std::size_t j = 0; j < d; ++j) s.centroid.push_back(2.0 * standard_normal(rng));
    inst.sources.push_back(s);
  }
  const auto& c = inst.sources;
  auto sub = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> r(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) r[j] = a[j] - b[j];
    return r;
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
  };
  // Orthonormal basis (u1, u2) of the plane through the centroids.
  std::vector<double> u1 = sub(c[1].centroid, c[0].centroid);
  const double n1 = std::sqrt(dot(u1, u1));
  for (auto& x : u1) x /= n1;
  std::vector<double> u2 = sub(c[2].centroid, c[0].centroid);
  const double p = dot(u2, u1);
  for (std::size_t j = 0; j < d; ++j) u2[j] -= p * u1[j];
  const double n2 = std::sqrt(dot(u2, u2));
  for (auto& x : u2) x /= n2;

  int a = 0, b = 0;
  if (on_edge) {
    a = 10 + static_cast<int>(uniform_index(rng, 81));  // edge between sources 0 and 1
    b = 100 - a;
  } else {
    a = 10 + static_cast<int>(uniform_index(rng, 71));
    b = 10 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(81 - a)));
  }
  inst.eta = {a / 100.0, b / 100.0, (100 - a - b) / 100.0};

  std::vector<double> t(d, 0.0);
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < d; ++j) t[j] += inst.eta[i] * c[i].centroid[j];
  std::vector<double> normal(d);
  for (auto& x : normal) x = standard_normal(rng);
  for (const auto& u : {u1, u2}) {
    const double q = dot(normal, u);
    for (std::size_t j = 0; j < d; ++j) normal[j] -= q * u[j];
  }
  std::vector<double> offset = normal;
  if (on_edge) {
    // In-plane direction perpendicular to edge (c0, c1), away from c2.
    std::vector<double> edge = sub(c[1].centroid, c[0].centroid);
    std::vector<double> away = sub(c[0].centroid, c[2].centroid);
    const double q = dot(away, edge) / dot(edge, edge);
    for (std::size_t j = 0; j < d; ++j) away[j] -= q * edge[j];
    const double na = std::sqrt(dot(away, away));
    const double len = 0.5 + uniform_open(rng);
    for (std::size_t j = 0; j < d; ++j) offset[j] += len * away[j] / na;
  }
  for (std::size_t j = 0; j < d; ++j) t[j] += offset[j];
  inst.target.name = "target";
  inst.target.centroid = t;
  inst.gamma = std::sqrt(dot(offset, offset));
  return inst;
}

}  // namespace t3s::testing
