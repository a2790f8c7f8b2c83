#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ergoprobe/hilbert.hpp"
#include "ergoprobe/models.hpp"

namespace ergoprobe {

/// Ascending energies with eigenvectors in the columns of `vectors`
/// (column mu belongs to energies[mu]). Each eigenvector's largest-magnitude
/// component is made positive so results do not depend on solver sign
/// conventions. `vectors` is empty for an eigenvalues-only decomposition.
struct EigenSystem {
  BasisPtr basis;
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;

  std::size_t dim() const { return static_cast<std::size_t>(energies.size()); }
  bool has_vectors() const { return vectors.size() != 0; }
  double width() const { return dim() ? energies[energies.size() - 1] - energies[0] : 0.0; }
};

/// Full decomposition. Takes H by value so callers can move a large matrix in
/// and let the solver reuse its storage.
EigenSystem diagonalize(HamiltonianMatrix h);
/// Eigenvalues only, ascending.
Eigen::VectorXd eigenvalues(HamiltonianMatrix h);
/// Eigensystem of a real symmetric matrix, with the same conventions.
EigenSystem diagonalize_matrix(Eigen::MatrixXd m, BasisPtr basis);

/// Eigensystem of h_z sigma^z_1 (x) I + I (x) H_bath where `bath` is the
/// eigensystem of an (N-1)-site bath block and the probe is site 1.
EigenSystem combine_probe_bath(double h_z, const EigenSystem& bath, BasisPtr full_basis);

/// Fraction-of-index interval of the sorted spectrum, [lo, hi).
struct SpectralWindow {
  double lo = 0.2;
  double hi = 0.8;
};

struct LevelStatistics {
  std::vector<double> spacings;  // unfolded, unit mean
  std::vector<double> r_values;
  double mean_r = 0.0;
};

struct SpacingAnalysis {
  LevelStatistics stats;
  std::vector<double> bin_centers;
  std::vector<double> density;
  double ks_poisson = 0.0;
  double ks_wigner_dyson = 0.0;
  std::size_t n_degenerate = 0;
};

struct SpacingOptions {
  SpectralWindow window{};
  int unfolding_levels = 20;
  int bins = 40;
  double s_max = 4.0;
  /// Spacings below this fraction of the spectral width count as degenerate.
  double degeneracy_tol = 1e-12;
};

inline constexpr std::size_t kMinLevelsForSpacings = 100;

SpacingAnalysis level_spacing_distribution(std::span<const double> energies,
                                           const SpacingOptions& opts = {});
SpacingAnalysis level_spacing_distribution(const EigenSystem& es, const SpacingOptions& opts = {});

struct RStatistic {
  double mean_r = 0.0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
  std::vector<double> r_values;
};

RStatistic r_statistic(std::span<const double> energies, SpectralWindow window = {},
                       double degeneracy_tol = 1e-12);
RStatistic r_statistic(const EigenSystem& es, SpectralWindow window = {},
                       double degeneracy_tol = 1e-12);

double poisson_cdf(double s);
double wigner_dyson_cdf(double s);
/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf);

struct DOSEstimate {
  double energy = 0.0;
  double value = 0.0;  // states per unit energy
  double bandwidth = 0.0;
};

/// Gaussian kernel density of levels at e0. The default bandwidth is
/// width / sqrt(dim).
DOSEstimate dos_at_energy(std::span<const double> energies, double e0,
                          std::optional<double> bandwidth = std::nullopt);
DOSEstimate dos_at_energy(const EigenSystem& es, double e0,
                          std::optional<double> bandwidth = std::nullopt);

inline std::span<const double> energy_span(const EigenSystem& es) {
  return {es.energies.data(), static_cast<std::size_t>(es.energies.size())};
}

// ---------------------------------------------------------------------------

template <class Cdf>
double ks_distance(std::vector<double> sample, Cdf cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace ergoprobe
