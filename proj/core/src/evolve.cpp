#include "ergoprobe/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ergoprobe {

namespace {

constexpr Eigen::Index kTimeBlock = 64;

void require_same_basis(const EigenSystem& es, const StateVector& psi) {
  if (!es.has_vectors()) throw std::invalid_argument("eigensystem has no eigenvectors");
  if (!psi.basis || !(*psi.basis == *es.basis) || psi.dim() != es.dim()) {
    throw std::invalid_argument("state and eigensystem live on different bases");
  }
}

void require_normalized(const StateVector& psi) {
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw std::invalid_argument("state is not normalized");
}

double trapezoid_mean(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() < 2) return y.empty() ? 0.0 : y.front();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) acc += 0.5 * (y[i] + y[i + 1]) * (t[i + 1] - t[i]);
  return acc / (t.back() - t.front());
}

// Re(b^dagger O b) for a block of time points, b = a exp(-i E t).
void expectation_block(const Eigen::VectorXd& energies, const Eigen::VectorXcd& a,
                       const Eigen::MatrixXd& op_eigen, std::span<const double> times,
                       double* out) {
  const Eigen::Index n = a.size();
  const auto nt = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd br(n, nt), bi(n, nt);
  for (Eigen::Index j = 0; j < nt; ++j) {
    for (Eigen::Index mu = 0; mu < n; ++mu) {
      const complex b = a[mu] * std::polar(1.0, -energies[mu] * times[static_cast<std::size_t>(j)]);
      br(mu, j) = b.real();
      bi(mu, j) = b.imag();
    }
  }
  const Eigen::MatrixXd yr = op_eigen * br;
  const Eigen::MatrixXd yi = op_eigen * bi;
  for (Eigen::Index j = 0; j < nt; ++j) {
    out[j] = br.col(j).dot(yr.col(j)) + bi.col(j).dot(yi.col(j));
  }
}

std::vector<double> expectation_series(const EigenSystem& es, const Eigen::VectorXcd& a,
                                       const Eigen::MatrixXd& op_eigen,
                                       const std::vector<double>& times) {
  std::vector<double> values(times.size());
  for (std::size_t start = 0; start < times.size(); start += kTimeBlock) {
    const std::size_t len = std::min<std::size_t>(kTimeBlock, times.size() - start);
    expectation_block(es.energies, a, op_eigen, std::span(times).subspan(start, len),
                      values.data() + start);
  }
  return values;
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("time grid is empty");
  if (points_.front() < 0.0) throw std::invalid_argument("time grid starts before t = 0");
  for (std::size_t i = 1; i < points_.size(); ++i) {
    if (!(points_[i] > points_[i - 1])) throw std::invalid_argument("time grid is not increasing");
  }
}

TimeGrid TimeGrid::uniform(double t_max, std::size_t n) { return linspace(0.0, t_max, n); }

TimeGrid TimeGrid::linspace(double t_min, double t_max, std::size_t n) {
  if (n < 2 || !(t_max > t_min)) throw std::invalid_argument("linspace needs n >= 2 and t_max > t_min");
  std::vector<double> p(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return TimeGrid(std::move(p));
}

TimeGrid TimeGrid::logspace(double t_min, double t_max, std::size_t n) {
  if (n < 2 || !(t_min > 0.0) || !(t_max > t_min)) {
    throw std::invalid_argument("logspace needs n >= 2 and 0 < t_min < t_max");
  }
  std::vector<double> p(n);
  const double l0 = std::log(t_min), l1 = std::log(t_max);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  p.front() = t_min;
  p.back() = t_max;
  return TimeGrid(std::move(p));
}

Eigen::MatrixXd to_eigenbasis(const EigenSystem& es, const HamiltonianMatrix& op) {
  if (!es.has_vectors()) throw std::invalid_argument("eigensystem has no eigenvectors");
  if (!(*op.basis == *es.basis)) throw std::invalid_argument("operator basis mismatch");
  const auto& v = es.vectors;
  const bool diagonal = op.entries.isDiagonal(0.0);
  Eigen::MatrixXd out;
  if (diagonal) {
    const Eigen::VectorXd d = op.entries.diagonal();
    out.noalias() = v.transpose() * (d.asDiagonal() * v);
  } else {
    out.noalias() = v.transpose() * (op.entries * v);
  }
  return 0.5 * (out + out.transpose());
}

Eigen::VectorXcd eigen_coefficients(const EigenSystem& es, const StateVector& psi) {
  require_same_basis(es, psi);
  const Eigen::VectorXd re = es.vectors.transpose() * psi.amplitudes.real();
  const Eigen::VectorXd im = es.vectors.transpose() * psi.amplitudes.imag();
  Eigen::VectorXcd a(re.size());
  a.real() = re;
  a.imag() = im;
  return a;
}

StateVector propagate(const EigenSystem& es, const StateVector& psi0, double t) {
  require_normalized(psi0);
  if (t == 0.0) return psi0;
  Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  for (Eigen::Index mu = 0; mu < a.size(); ++mu) a[mu] *= std::polar(1.0, -es.energies[mu] * t);
  Eigen::VectorXcd out(a.size());
  out.real() = es.vectors * a.real();
  out.imag() = es.vectors * a.imag();
  return StateVector{psi0.basis, std::move(out)};
}

double expval(const StateVector& psi, const HamiltonianMatrix& op) {
  if (!(*psi.basis == *op.basis)) throw std::invalid_argument("expval: basis mismatch");
  const complex v = psi.amplitudes.dot(op.entries.cast<complex>() * psi.amplitudes);
  if (std::abs(v.imag()) > 1e-10) throw std::domain_error("expval: operator is not Hermitian");
  return v.real();
}

ObservableTrace observable_trace(const EigenSystem& es, const StateVector& psi0,
                                 const Eigen::MatrixXd& op_eigen, const TimeGrid& grid,
                                 std::string tag) {
  require_normalized(psi0);
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  return ObservableTrace{grid, expectation_series(es, a, op_eigen, grid.points()), std::move(tag)};
}

ObservableTrace survival_probability(const EigenSystem& es, const StateVector& psi0,
                                     const TimeGrid& grid) {
  require_normalized(psi0);
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  const Eigen::VectorXd p = a.cwiseAbs2();
  ObservableTrace trace{grid, std::vector<double>(grid.size()), "survival"};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    complex amp = 0.0;
    for (Eigen::Index mu = 0; mu < p.size(); ++mu) amp += p[mu] * std::polar(1.0, -es.energies[mu] * grid[j]);
    trace.values[j] = std::norm(amp);
  }
  return trace;
}

double entanglement_entropy(const StateVector& psi, std::span<const int> kept_sites) {
  const DensityMatrix rho = partial_trace(psi, kept_sites);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.entries, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (double lambda : solver.eigenvalues()) {
    if (lambda > 1e-14) s -= lambda * std::log(lambda);
  }
  return s;
}

ObservableTrace entropy_trace(const EigenSystem& es, const StateVector& psi0, const TimeGrid& grid,
                              std::span<const int> kept_sites) {
  require_normalized(psi0);
  ObservableTrace trace{grid, std::vector<double>(grid.size()), "entropy"};
  for (std::size_t j = 0; j < grid.size(); ++j) {
    trace.values[j] = entanglement_entropy(propagate(es, psi0, grid[j]), kept_sites);
  }
  return trace;
}

double temporal_variance_closed_form(const EigenSystem& es, const Eigen::VectorXcd& a,
                                     const Eigen::MatrixXd& op_eigen, double degeneracy_tol) {
  const Eigen::Index n = a.size();
  const double tol = degeneracy_tol * std::max(es.width(), 1e-300);
  // Group ascending energies into degenerate blocks.
  std::vector<Eigen::Index> group(static_cast<std::size_t>(n));
  Eigen::Index g = 0;
  for (Eigen::Index mu = 0; mu < n; ++mu) {
    if (mu > 0 && es.energies[mu] - es.energies[mu - 1] > tol) ++g;
    group[static_cast<std::size_t>(mu)] = g;
  }
  const Eigen::Index n_groups = g + 1;

  if (n_groups == n) {
    const Eigen::VectorXd p = a.cwiseAbs2();
    double acc = 0.0;
    for (Eigen::Index nu = 0; nu < n; ++nu) {
      const double col = op_eigen.col(nu).cwiseAbs2().dot(p) - op_eigen(nu, nu) * op_eigen(nu, nu) * p[nu];
      acc += p[nu] * col;
    }
    return acc;
  }

  // sum over block pairs G != G' of |sum_{mu in G, nu in G'} a*_mu O a_nu|^2
  double total = 0.0;
  std::vector<complex> block_sum(static_cast<std::size_t>(n_groups));
  Eigen::Index mu0 = 0;
  while (mu0 < n) {
    Eigen::Index mu1 = mu0;
    while (mu1 < n && group[static_cast<std::size_t>(mu1)] == group[static_cast<std::size_t>(mu0)]) ++mu1;
    std::fill(block_sum.begin(), block_sum.end(), complex(0.0));
    for (Eigen::Index nu = 0; nu < n; ++nu) {
      complex row = 0.0;
      for (Eigen::Index mu = mu0; mu < mu1; ++mu) row += std::conj(a[mu]) * op_eigen(mu, nu);
      block_sum[static_cast<std::size_t>(group[static_cast<std::size_t>(nu)])] += row * a[nu];
    }
    const auto own = static_cast<std::size_t>(group[static_cast<std::size_t>(mu0)]);
    for (std::size_t h = 0; h < block_sum.size(); ++h) {
      if (h != own) total += std::norm(block_sum[h]);
    }
    mu0 = mu1;
  }
  return total;
}

double energy_expectation(const EigenSystem& es, const StateVector& psi0) {
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  return a.cwiseAbs2().dot(es.energies);
}

double heisenberg_time(const EigenSystem& es, const StateVector& psi0) {
  const double e = std::clamp(energy_expectation(es, psi0), es.energies[0],
                              es.energies[es.energies.size() - 1]);
  return 2.0 * std::numbers::pi * dos_at_energy(es, e).value;
}

FluctuationResult long_time_fluctuations(const EigenSystem& es, const StateVector& psi0,
                                         const Eigen::MatrixXd& op_eigen,
                                         const FluctuationOptions& opts) {
  require_normalized(psi0);
  if (opts.n_samples < 2) throw std::invalid_argument("long_time_fluctuations: n_samples < 2");
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  const double horizon = opts.horizon > 0.0 ? opts.horizon : 20.0 * heisenberg_time(es, psi0);
  const TimeGrid grid = TimeGrid::uniform(horizon, opts.n_samples);
  const std::vector<double> mean_o = expectation_series(es, a, op_eigen, grid.points());

  FluctuationResult res;
  res.mode = opts.mode;
  res.horizon = horizon;
  std::vector<double> integrand(mean_o.size());
  if (opts.mode == FluctuationMode::TemporalVariance) {
    const double bar = trapezoid_mean(grid.points(), mean_o);
    for (std::size_t i = 0; i < mean_o.size(); ++i) integrand[i] = (mean_o[i] - bar) * (mean_o[i] - bar);
    res.closed_form = temporal_variance_closed_form(es, a, op_eigen);
  } else {
    const Eigen::MatrixXd op2 = op_eigen * op_eigen;
    const std::vector<double> mean_o2 = expectation_series(es, a, op2, grid.points());
    for (std::size_t i = 0; i < mean_o.size(); ++i) integrand[i] = mean_o2[i] - mean_o[i] * mean_o[i];
  }
  res.value = trapezoid_mean(grid.points(), integrand);
  return res;
}

FluctuationResult long_time_fluctuations(const EigenSystem& es, const StateVector& psi0,
                                         const HamiltonianMatrix& op,
                                         const FluctuationOptions& opts) {
  return long_time_fluctuations(es, psi0, to_eigenbasis(es, op), opts);
}

double diagonal_ensemble_mean(const EigenSystem& es, const StateVector& psi0,
                              const Eigen::MatrixXd& op_eigen) {
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  return a.cwiseAbs2().dot(op_eigen.diagonal());
}

double diagonal_ensemble_mean(const EigenSystem& es, const StateVector& psi0,
                              const HamiltonianMatrix& op) {
  return diagonal_ensemble_mean(es, psi0, to_eigenbasis(es, op));
}

}  // namespace ergoprobe
