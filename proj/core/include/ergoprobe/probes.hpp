#pragma once

// Local-observable witnesses of ergodicity: quantum Fisher information
// dynamics with linear/quadratic regime fits, and the fluctuation-dissipation
// relation delta^2 = chi * dO^2 / (4 pi D(E) Gamma).

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergoprobe/evolve.hpp"
#include "ergoprobe/models.hpp"
#include "ergoprobe/spectra.hpp"

namespace ergoprobe {

/// d H / d lambda together with its eigenbasis elements.
struct GeneratorObservable {
  HamiltonianMatrix op;
  Eigen::MatrixXd elements;
};

GeneratorObservable make_generator(const EigenSystem& es, HamiltonianMatrix op);

struct QFITrace {
  TimeGrid grid;
  std::vector<double> values;
};

/// F_Q(t) = 4 (<v|v> - |<psi(t)|v>|^2) with v = d psi(t) / d lambda built in
/// the eigenbasis; O(dim^2) per time point.
QFITrace qfi_trace(const EigenSystem& es, const StateVector& psi0, const GeneratorObservable& gen,
                   const TimeGrid& grid);

struct LoschmidtComparison {
  QFITrace qfi;
  std::vector<double> loschmidt;  // 4 (1 - F_eps) / eps^2
  double max_relative_deviation = 0.0;
  double max_absolute_deviation = 0.0;
};

/// Compares qfi_trace at lambda against the finite-difference fidelity
/// between evolutions under H(lambda) and H(lambda + eps). The generator is
/// taken from a central difference of the builder.
LoschmidtComparison loschmidt_qfi_check(const std::function<HamiltonianMatrix(double)>& builder,
                                        double lambda, double eps, const StateVector& psi0,
                                        const TimeGrid& grid);

enum class FitModel { LinearPlusQuadratic, QuadraticOnly };

struct FitReport {
  FitModel model = FitModel::LinearPlusQuadratic;
  double alpha = 0.0;  // linear coefficient (LinearPlusQuadratic)
  double beta = 0.0;   // quadratic coefficient; gamma for QuadraticOnly
  double r2 = 0.0;
  double r2_adjusted = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t n_points = 0;
};

struct RegimeFits {
  FitReport linear_quadratic;  // alpha t + beta t^2, alpha >= 0
  FitReport quadratic;         // gamma t^2
  /// R2_adj(alpha t + beta t^2) - R2_adj(gamma t^2).
  double r2_gap() const { return linear_quadratic.r2_adjusted - quadratic.r2_adjusted; }
};

inline constexpr std::size_t kMinFitPoints = 10;

/// Least-squares fits through the origin on [t_lo, t_hi].
RegimeFits fit_qfi_regimes(std::span<const double> t, std::span<const double> y, double t_lo,
                           double t_hi);
/// Automatic window: drop the first 1% of points, fit, then refit on
/// [t_min, 5 tau] with tau = alpha / beta from the first pass.
RegimeFits fit_qfi_regimes(const QFITrace& trace);

struct Crossover {
  bool defined = false;
  double tau = 0.0;
  double ratio_to_dos = 0.0;
};

/// tau = alpha / beta; undefined when either coefficient is not positive.
Crossover heisenberg_crossover(const FitReport& fit, const DOSEstimate& dos);

struct DecayFit {
  double gamma = 0.0;
  double o_inf = 0.0;
  double o_0 = 0.0;
  double t_fit = 0.0;
  double residual_rms = 0.0;
  int iterations = 0;
};

/// Fits O_inf + (O_0 - O_inf) exp(-Gamma t) on [0, t_fit], with O_0 the first
/// trace value and t_fit three times the first time the trace comes within 5%
/// of the seed equilibrium value. Throws if the trace does not decay, the fit
/// diverges or Gamma <= 0.
DecayFit decay_rate(const ObservableTrace& trace, double o_inf_seed);

enum class VarianceMode { InitialPopulation, EnergyShell };

struct MicrocanonicalOptions {
  VarianceMode mode = VarianceMode::InitialPopulation;
  /// EnergyShell half-width; nullopt uses the energy spread of psi0 under H.
  std::optional<double> shell_half_width;
  std::size_t min_shell_states = 20;
};

struct MicrocanonicalVariance {
  double delta_o2 = 0.0;
  double mean = 0.0;
  std::size_t n_states = 0;
  double shell_center = 0.0;
  double shell_half_width = 0.0;
};

/// Variance of the uncoupled diagonal elements O_aa, weighted either by the
/// initial populations |<phi_a|psi0>|^2 or uniformly over an uncoupled
/// energy shell centred on <psi0|H0|psi0>.
MicrocanonicalVariance microcanonical_variance(const EigenSystem& es0, const EigenSystem& es,
                                               const StateVector& psi0, const HamiltonianMatrix& op,
                                               const MicrocanonicalOptions& opts = {});

/// chi * dO^2 / (4 pi D Gamma).
double fdt_predict(double delta_o2, double dos, double gamma, double chi = 1.0);

struct FDTRecord {
  std::string scenario;
  int N = 0;
  double scan_value = 0.0;
  std::uint64_t seed = 0;
  double delta2 = 0.0;
  double gamma = 0.0;
  double dos = 0.0;
  double delta_o2 = 0.0;
  double chi = 1.0;

  double rmt_scale() const { return fdt_predict(delta_o2, dos, gamma, 1.0); }
  double predicted() const { return fdt_predict(delta_o2, dos, gamma, chi); }
};

struct ChiFit {
  double chi = 0.0;
  double residual_rms = 0.0;     // of delta2 - chi * x
  double max_log_residual = 0.0; // max |ln(delta2 / (chi x))|
  std::size_t n = 0;
};

/// Least-squares slope of delta2 against dO^2 / (4 pi D Gamma) through the
/// origin.
ChiFit fit_chi(std::span<const FDTRecord> records);

/// Slope of ln delta2 against ln(dO^2 / (4 pi D Gamma)).
double loglog_slope(std::span<const FDTRecord> records);

}  // namespace ergoprobe
