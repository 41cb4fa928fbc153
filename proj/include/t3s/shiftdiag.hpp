#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "t3s/styleops.hpp"

namespace t3s {

// Domain-shift diagnostics. Distribution distances are proxied by the
// Euclidean distance between domain style centroids; every report labels
// its numbers as proxies.

struct DomainStyleSummary {
  std::string name;
  std::vector<double> centroid;
  std::vector<double> stddev;  // population deviation per coordinate
  std::size_t count = 0;
};

DomainStyleSummary summarize_domain(const std::string& name,
                                    const std::vector<std::vector<double>>& styles);
DomainStyleSummary summarize_domain(const std::string& name, const std::vector<StyleVector>& styles);

struct RhoProxy {
  double rho = 0.0;
  std::vector<std::vector<double>> distances;
};

/// Largest pairwise centroid distance among at least two domains.
RhoProxy rho_proxy(const std::vector<DomainStyleSummary>& summaries);

/// Euclidean projection onto the probability simplex (sort and threshold).
std::vector<double> simplex_project(std::span<const double> v);

struct GammaEtaOptions {
  double step = 0.1;  // fraction of 1 / largest Gram eigenvalue, in (0, 1]
  std::size_t max_iterations = 10000;
  double tolerance = 1e-10;
  bool record_objective = false;
};

struct GammaEta {
  double gamma = 0.0;
  std::vector<double> eta;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> objective;  // per iterate, when recorded
};

/// min over the simplex of || c_T - sum_i eta_i c_i ||, by projected
/// gradient descent on the squared objective.
GammaEta gamma_eta(const DomainStyleSummary& target, const std::vector<DomainStyleSummary>& sources,
                   const GammaEtaOptions& options = {});

struct TargetShift {
  std::string name;
  double gamma = 0.0;
  std::vector<double> eta;
  bool converged = false;
};

struct ShiftReport {
  double rho = 0.0;
  std::vector<std::string> sources;
  std::vector<std::vector<double>> distances;
  std::vector<TargetShift> targets;
};

ShiftReport shift_report(const std::vector<DomainStyleSummary>& sources,
                         const std::vector<DomainStyleSummary>& targets);

/// Rows "kind,name,value,..." covering rho, the distance matrix and every
/// target's gamma and eta.
void write_shift_csv(const ShiftReport& report, const std::filesystem::path& path);
std::string format_shift_report(const ShiftReport& report);

}  // namespace t3s
