#pragma once

// Time evolution in the eigenbasis and the time-domain diagnostics built on
// it. States are expanded once, a_mu = <psi_mu|psi0>, and every quantity at
// time t is assembled from a_mu exp(-i E_mu t).

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergoprobe/hilbert.hpp"
#include "ergoprobe/models.hpp"
#include "ergoprobe/spectra.hpp"

namespace ergoprobe {

class TimeGrid {
public:
  TimeGrid() = default;
  /// Throws unless points are strictly increasing and start at t >= 0.
  explicit TimeGrid(std::vector<double> points);

  /// n points evenly spaced on [0, t_max].
  static TimeGrid uniform(double t_max, std::size_t n);
  /// n points evenly spaced on [t_min, t_max].
  static TimeGrid linspace(double t_min, double t_max, std::size_t n);
  /// n logarithmically spaced points on [t_min, t_max], t_min > 0.
  static TimeGrid logspace(double t_min, double t_max, std::size_t n);

  const std::vector<double>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  double back() const { return points_.back(); }

private:
  std::vector<double> points_;
};

struct ObservableTrace {
  TimeGrid grid;
  std::vector<double> values;
  std::string tag;
};

/// Matrix elements O_mu,nu = <psi_mu|O|psi_nu> of a Hermitian operator.
Eigen::MatrixXd to_eigenbasis(const EigenSystem& es, const HamiltonianMatrix& op);

/// a_mu = <psi_mu|psi>.
Eigen::VectorXcd eigen_coefficients(const EigenSystem& es, const StateVector& psi);

StateVector propagate(const EigenSystem& es, const StateVector& psi0, double t);

/// <psi|O|psi>; throws if the imaginary part exceeds 1e-10.
double expval(const StateVector& psi, const HamiltonianMatrix& op);

/// <O(t)> on the grid, from eigenbasis elements of O.
ObservableTrace observable_trace(const EigenSystem& es, const StateVector& psi0,
                                 const Eigen::MatrixXd& op_eigen, const TimeGrid& grid,
                                 std::string tag = "observable");

/// F(t) = |<psi0|psi(t)>|^2.
ObservableTrace survival_probability(const EigenSystem& es, const StateVector& psi0,
                                     const TimeGrid& grid);

/// Von Neumann entropy (natural log) of the reduced state on kept_sites.
double entanglement_entropy(const StateVector& psi, std::span<const int> kept_sites);
ObservableTrace entropy_trace(const EigenSystem& es, const StateVector& psi0, const TimeGrid& grid,
                              std::span<const int> kept_sites);

enum class FluctuationMode { TemporalVariance, QuantumVariance };

struct FluctuationResult {
  FluctuationMode mode = FluctuationMode::TemporalVariance;
  double value = 0.0;
  double horizon = 0.0;
  /// Infinite-time limit; only filled in TemporalVariance mode.
  double closed_form = 0.0;
};

struct FluctuationOptions {
  FluctuationMode mode = FluctuationMode::TemporalVariance;
  /// Averaging horizon; <= 0 selects 20 Heisenberg times.
  double horizon = 0.0;
  std::size_t n_samples = 4096;
};

/// Time average over [0, T] (trapezoidal, uniform grid).
FluctuationResult long_time_fluctuations(const EigenSystem& es, const StateVector& psi0,
                                         const Eigen::MatrixXd& op_eigen,
                                         const FluctuationOptions& opts = {});
FluctuationResult long_time_fluctuations(const EigenSystem& es, const StateVector& psi0,
                                         const HamiltonianMatrix& op,
                                         const FluctuationOptions& opts = {});

/// Exact infinite-time temporal variance of <O(t)>. Levels closer than
/// degeneracy_tol * width are merged, so degenerate blocks are treated as
/// one frequency; without degeneracies this is
/// sum_{mu != nu} |a_mu|^2 |a_nu|^2 |O_mu,nu|^2.
double temporal_variance_closed_form(const EigenSystem& es, const Eigen::VectorXcd& a,
                                     const Eigen::MatrixXd& op_eigen,
                                     double degeneracy_tol = 1e-10);

/// sum_mu |a_mu|^2 O_mu,mu.
double diagonal_ensemble_mean(const EigenSystem& es, const StateVector& psi0,
                              const Eigen::MatrixXd& op_eigen);
double diagonal_ensemble_mean(const EigenSystem& es, const StateVector& psi0,
                              const HamiltonianMatrix& op);

/// 2 pi D(E) at E = <psi0|H|psi0>.
double heisenberg_time(const EigenSystem& es, const StateVector& psi0);
double energy_expectation(const EigenSystem& es, const StateVector& psi0);

}  // namespace ergoprobe
