#include "t3s/shiftdiag.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace t3s {
namespace {

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("shiftdiag: centroid dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Largest eigenvalue of a small symmetric PSD matrix.
double power_iteration(const std::vector<std::vector<double>>& g, std::vector<double> v) {
  const std::size_t n = g.size();
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) w[i] += g[i][j] * v[j];
    const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    if (norm == 0.0) return 0.0;
    for (auto& x : w) x /= norm;
    v = std::move(w);
    if (std::abs(norm - lambda) <= 1e-12 * std::max(1.0, norm)) return norm;
    lambda = norm;
  }
  return lambda;
}

// Largest eigenvalue of a symmetric PSD matrix. A centred Gram matrix has
// the all-ones vector in its null space, so no single start vector is safe;
// starting from every basis vector guarantees one is not orthogonal to the
// top eigenvector.
double top_eigenvalue(const std::vector<std::vector<double>>& g) {
  double best = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    std::vector<double> e(g.size(), 0.0);
    e[k] = 1.0;
    best = std::max(best, power_iteration(g, std::move(e)));
  }
  return best;
}

}  // namespace

DomainStyleSummary summarize_domain(const std::string& name,
                                    const std::vector<std::vector<double>>& styles) {
  if (styles.empty()) throw Error("summarize_domain: no styles for domain " + name);
  const std::size_t d = styles.front().size();
  DomainStyleSummary s;
  s.name = name;
  s.count = styles.size();
  s.centroid.assign(d, 0.0);
  s.stddev.assign(d, 0.0);
  for (const auto& v : styles) {
    if (v.size() != d) throw ShapeError("summarize_domain: ragged style vectors");
    for (std::size_t j = 0; j < d; ++j) s.centroid[j] += v[j];
  }
  for (auto& c : s.centroid) c /= static_cast<double>(s.count);
  for (const auto& v : styles)
    for (std::size_t j = 0; j < d; ++j) s.stddev[j] += (v[j] - s.centroid[j]) * (v[j] - s.centroid[j]);
  for (auto& x : s.stddev) x = std::sqrt(x / static_cast<double>(s.count));
  return s;
}

DomainStyleSummary summarize_domain(const std::string& name, const std::vector<StyleVector>& styles) {
  std::vector<std::vector<double>> flat;
  flat.reserve(styles.size());
  for (const auto& s : styles) flat.push_back(s.flat());
  return summarize_domain(name, flat);
}

RhoProxy rho_proxy(const std::vector<DomainStyleSummary>& summaries) {
  if (summaries.size() < 2) throw Error("rho_proxy: need at least 2 domains");
  const std::size_t n = summaries.size();
  RhoProxy r;
  r.distances.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = distance(summaries[i].centroid, summaries[j].centroid);
      r.distances[i][j] = r.distances[j][i] = d;
      r.rho = std::max(r.rho, d);
    }
  return r;
}

std::vector<double> simplex_project(std::span<const double> v) {
  if (v.empty()) return {};
  std::vector<double> u(v.begin(), v.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - theta, 0.0);
  return w;
}

GammaEta gamma_eta(const DomainStyleSummary& target, const std::vector<DomainStyleSummary>& sources,
                   const GammaEtaOptions& options) {
  if (sources.empty()) throw Error("gamma_eta: need at least one source domain");
  if (!(options.step > 0.0 && options.step <= 1.0)) throw Error("gamma_eta: step must be in (0, 1]");
  const std::size_t n = sources.size();
  const std::size_t d = target.centroid.size();
  for (const auto& s : sources) {
    if (s.centroid.size() != d) throw ShapeError("gamma_eta: centroid dimensions differ");
  }

  // The objective is unchanged by a common translation of target and sources
  // (eta sums to one); centring on the source mean removes the shared
  // component that would otherwise dominate the curvature.
  std::vector<double> mean(d, 0.0);
  for (const auto& s : sources)
    for (std::size_t j = 0; j < d; ++j) mean[j] += s.centroid[j] / static_cast<double>(n);
  std::vector<std::vector<double>> c(n, std::vector<double>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) c[i][j] = sources[i].centroid[j] - mean[j];
  std::vector<double> t(d);
  for (std::size_t j = 0; j < d; ++j) t[j] = target.centroid[j] - mean[j];

  std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
  std::vector<double> ct(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < d; ++j) gram[i][k] += c[i][j] * c[k][j];
    for (std::size_t j = 0; j < d; ++j) ct[i] += c[i][j] * t[j];
  }
  // The step is taken in units of the curvature so that the rate does not
  // depend on the scale of the style coordinates.
  const double lipschitz = top_eigenvalue(gram);
  const double step = lipschitz > 0.0 ? options.step / lipschitz : options.step;

  auto objective = [&](const std::vector<double>& eta) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double r = t[j];
      for (std::size_t i = 0; i < n; ++i) r -= eta[i] * c[i][j];
      s += r * r;
    }
    return std::sqrt(s);
  };

  GammaEta out;
  std::vector<double> eta(n, 1.0 / static_cast<double>(n));
  if (options.record_objective) out.objective.push_back(objective(eta));
  std::vector<double> next(n);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    // grad of 0.5 * ||t - C eta||^2 is G eta - C^T t.
    for (std::size_t i = 0; i < n; ++i) {
      double g = -ct[i];
      for (std::size_t k = 0; k < n; ++k) g += gram[i][k] * eta[k];
      next[i] = eta[i] - step * g;
    }
    std::vector<double> projected = simplex_project(next);
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(projected[i] - eta[i]));
    eta = std::move(projected);
    out.iterations = it + 1;
    if (options.record_objective) out.objective.push_back(objective(eta));
    if (change < options.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.eta = eta;
  out.gamma = objective(eta);
  return out;
}

ShiftReport shift_report(const std::vector<DomainStyleSummary>& sources,
                         const std::vector<DomainStyleSummary>& targets) {
  ShiftReport r;
  for (const auto& s : sources) r.sources.push_back(s.name);
  if (sources.size() >= 2) {
    RhoProxy rp = rho_proxy(sources);
    r.rho = rp.rho;
    r.distances = std::move(rp.distances);
  } else {
    r.distances.assign(sources.size(), std::vector<double>(sources.size(), 0.0));
  }
  for (const auto& t : targets) {
    GammaEta ge = gamma_eta(t, sources);
    r.targets.push_back({t.name, ge.gamma, ge.eta, ge.converged});
  }
  return r;
}

void write_shift_csv(const ShiftReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << std::setprecision(10);
  out << "kind,name,value";
  for (const auto& s : report.sources) out << ",eta_" << s;
  out << ",converged\n";
  out << "rho_proxy,sources," << report.rho;
  for (std::size_t i = 0; i < report.sources.size(); ++i) out << ',';
  out << ",\n";
  for (std::size_t i = 0; i < report.sources.size(); ++i)
    for (std::size_t j = i + 1; j < report.sources.size(); ++j) {
      out << "distance_proxy," << report.sources[i] << '|' << report.sources[j] << ','
          << report.distances[i][j];
      for (std::size_t k = 0; k < report.sources.size(); ++k) out << ',';
      out << ",\n";
    }
  for (const auto& t : report.targets) {
    out << "gamma_proxy," << t.name << ',' << t.gamma;
    for (double e : t.eta) out << ',' << e;
    out << ',' << (t.converged ? 1 : 0) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

std::string format_shift_report(const ShiftReport& report) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6);
  os << "Domain-shift diagnostics (centroid-distance proxies, not H-divergence)\n";
  os << "rho (max pairwise source shift, proxy): " << report.rho << "\n";
  for (std::size_t i = 0; i < report.sources.size(); ++i)
    for (std::size_t j = i + 1; j < report.sources.size(); ++j)
      os << "  d(" << report.sources[i] << ", " << report.sources[j]
         << ") = " << report.distances[i][j] << "\n";
  for (const auto& t : report.targets) {
    os << "target " << t.name << ": gamma (proxy) = " << t.gamma << ", eta = [";
    for (std::size_t i = 0; i < t.eta.size(); ++i) {
      os << (i ? ", " : "") << report.sources[i] << "=" << t.eta[i];
    }
    os << "]" << (t.converged ? "" : " (not converged)") << "\n";
  }
  return os.str();
}

}  // namespace t3s
