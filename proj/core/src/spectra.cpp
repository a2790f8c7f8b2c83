#include "ergoprobe/spectra.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <lapacke.h>

extern "C" void openblas_set_num_threads(int);

namespace ergoprobe {

namespace {

// Parallelism lives in the runner's work pool; a single-threaded BLAS keeps
// results bitwise independent of how many workers are running.
void pin_blas_threads() {
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
}

void fix_phases(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    if (v(imax, j) < 0.0) v.col(j) = -v.col(j);
  }
}

struct Syevr {
  Eigen::VectorXd w;
  Eigen::MatrixXd z;
};

Syevr run_syevr(Eigen::MatrixXd& a, bool vectors) {
  pin_blas_threads();
  const auto n = static_cast<lapack_int>(a.rows());
  if (a.cols() != a.rows()) throw std::invalid_argument("diagonalize: matrix is not square");
  Syevr out;
  out.w.resize(n);
  if (n == 0) return out;
  if (vectors) out.z.resize(n, n);
  std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'A', 'U', n, a.data(), n, 0.0, 0.0, 0, 0, 0.0,
      &found, out.w.data(), vectors ? out.z.data() : nullptr, vectors ? n : 1, isuppz.data());
  if (info != 0 || found != n) {
    throw std::runtime_error("eigensolver failed to converge (dsyevr info=" +
                             std::to_string(info) + ")");
  }
  return out;
}

std::pair<std::size_t, std::size_t> window_range(std::size_t n, SpectralWindow w) {
  if (!(w.lo >= 0.0 && w.hi <= 1.0 && w.lo < w.hi)) {
    throw std::invalid_argument("spectral window must satisfy 0 <= lo < hi <= 1");
  }
  const auto lo = static_cast<std::size_t>(std::floor(w.lo * static_cast<double>(n)));
  const auto hi = static_cast<std::size_t>(std::ceil(w.hi * static_cast<double>(n)));
  return {lo, std::min(hi, n)};
}

void require_sorted(std::span<const double> e) {
  if (!std::is_sorted(e.begin(), e.end())) throw std::invalid_argument("energies must be ascending");
}

}  // namespace

EigenSystem diagonalize_matrix(Eigen::MatrixXd m, BasisPtr basis) {
  auto res = run_syevr(m, true);
  m.resize(0, 0);
  fix_phases(res.z);
  return EigenSystem{std::move(basis), std::move(res.w), std::move(res.z)};
}

EigenSystem diagonalize(HamiltonianMatrix h) {
  if (h.hermiticity_error() > 1e-12) throw std::invalid_argument("diagonalize: H is not Hermitian");
  return diagonalize_matrix(std::move(h.entries), std::move(h.basis));
}

Eigen::VectorXd eigenvalues(HamiltonianMatrix h) {
  if (h.hermiticity_error() > 1e-12) throw std::invalid_argument("eigenvalues: H is not Hermitian");
  return run_syevr(h.entries, false).w;
}

EigenSystem combine_probe_bath(double h_z, const EigenSystem& bath, BasisPtr full_basis) {
  const auto nb = static_cast<Eigen::Index>(bath.dim());
  if (!bath.has_vectors()) throw std::invalid_argument("combine_probe_bath: bath vectors required");
  if (static_cast<Eigen::Index>(full_basis->dim()) != 2 * nb) {
    throw std::invalid_argument("combine_probe_bath: dimension mismatch");
  }
  // Product states (probe s) x (bath k); config = (bath_config << 1) | s.
  struct Level {
    double e;
    int s;
    Eigen::Index k;
  };
  std::vector<Level> levels;
  levels.reserve(static_cast<std::size_t>(2 * nb));
  for (Eigen::Index k = 0; k < nb; ++k) {
    levels.push_back({bath.energies[k] - h_z, 0, k});
    levels.push_back({bath.energies[k] + h_z, 1, k});
  }
  std::stable_sort(levels.begin(), levels.end(),
                   [](const Level& a, const Level& b) { return a.e < b.e; });

  EigenSystem es{std::move(full_basis), Eigen::VectorXd(2 * nb), Eigen::MatrixXd::Zero(2 * nb, 2 * nb)};
  for (Eigen::Index mu = 0; mu < 2 * nb; ++mu) {
    const Level& l = levels[static_cast<std::size_t>(mu)];
    es.energies[mu] = l.e;
    for (Eigen::Index b = 0; b < nb; ++b) es.vectors(2 * b + l.s, mu) = bath.vectors(b, l.k);
  }
  return es;
}

double poisson_cdf(double s) { return s <= 0.0 ? 0.0 : 1.0 - std::exp(-s); }

double wigner_dyson_cdf(double s) {
  return s <= 0.0 ? 0.0 : 1.0 - std::exp(-std::numbers::pi * s * s / 4.0);
}

SpacingAnalysis level_spacing_distribution(std::span<const double> energies,
                                           const SpacingOptions& opts) {
  require_sorted(energies);
  const std::size_t n = energies.size();
  const auto [lo, hi] = window_range(n, opts.window);
  if (hi - lo < kMinLevelsForSpacings) {
    throw std::invalid_argument("level_spacing_distribution: fewer than " +
                                std::to_string(kMinLevelsForSpacings) + " levels in window");
  }
  const double width = energies.back() - energies.front();
  const double tol = opts.degeneracy_tol * width;

  // Raw spacings over the whole spectrum; degenerate ones are dropped.
  std::vector<double> raw;
  std::vector<std::size_t> lower_level;
  SpacingAnalysis out;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double s = energies[i + 1] - energies[i];
    if (s <= tol) {
      if (i >= lo && i + 1 < hi) ++out.n_degenerate;
      continue;
    }
    raw.push_back(s);
    lower_level.push_back(i);
  }

  // Local mean over a sliding block of `unfolding_levels` spacings centred
  // on each one; blocks near the ends are shifted to stay inside.
  const std::size_t m = raw.size();
  const auto block = std::min<std::size_t>(static_cast<std::size_t>(std::max(opts.unfolding_levels, 1)), m);
  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t i = 0; i < m; ++i) prefix[i + 1] = prefix[i] + raw[i];

  std::vector<double>& sp = out.stats.spacings;
  for (std::size_t i = 0; i < m; ++i) {
    if (lower_level[i] < lo || lower_level[i] + 1 >= hi) continue;
    std::size_t start = i >= block / 2 ? i - block / 2 : 0;
    start = std::min(start, m - block);
    const double local = (prefix[start + block] - prefix[start]) / static_cast<double>(block);
    sp.push_back(raw[i] / local);
  }
  if (sp.empty()) throw std::invalid_argument("level_spacing_distribution: no spacings in window");
  const double mean = std::accumulate(sp.begin(), sp.end(), 0.0) / static_cast<double>(sp.size());
  for (double& s : sp) s /= mean;

  auto r = r_statistic(energies, opts.window, opts.degeneracy_tol);
  out.stats.r_values = std::move(r.r_values);
  out.stats.mean_r = r.mean_r;

  const double dbin = opts.s_max / opts.bins;
  out.bin_centers.resize(static_cast<std::size_t>(opts.bins));
  out.density.assign(static_cast<std::size_t>(opts.bins), 0.0);
  for (int b = 0; b < opts.bins; ++b) out.bin_centers[static_cast<std::size_t>(b)] = (b + 0.5) * dbin;
  for (double s : sp) {
    const auto b = static_cast<std::size_t>(s / dbin);
    if (b < out.density.size()) out.density[b] += 1.0;
  }
  for (double& d : out.density) d /= static_cast<double>(sp.size()) * dbin;

  out.ks_poisson = ks_distance(sp, poisson_cdf);
  out.ks_wigner_dyson = ks_distance(sp, wigner_dyson_cdf);
  return out;
}

SpacingAnalysis level_spacing_distribution(const EigenSystem& es, const SpacingOptions& opts) {
  return level_spacing_distribution(energy_span(es), opts);
}

RStatistic r_statistic(std::span<const double> energies, SpectralWindow window,
                       double degeneracy_tol) {
  require_sorted(energies);
  const auto [lo, hi] = window_range(energies.size(), window);
  if (hi - lo < 3) throw std::invalid_argument("r_statistic: need at least 3 levels in window");
  const double tol = degeneracy_tol * (energies.back() - energies.front());

  RStatistic out;
  double sum = 0.0;
  for (std::size_t i = lo + 1; i + 1 < hi; ++i) {
    const double s_prev = energies[i] - energies[i - 1];
    const double s_next = energies[i + 1] - energies[i];
    if (s_prev <= tol || s_next <= tol) {
      ++out.n_excluded;
      continue;
    }
    const double r = std::min(s_prev, s_next) / std::max(s_prev, s_next);
    out.r_values.push_back(r);
    sum += r;
  }
  out.n_used = out.r_values.size();
  if (out.n_used == 0) throw std::domain_error("r_statistic: every triplet is degenerate");
  out.mean_r = sum / static_cast<double>(out.n_used);
  return out;
}

RStatistic r_statistic(const EigenSystem& es, SpectralWindow window, double degeneracy_tol) {
  return r_statistic(energy_span(es), window, degeneracy_tol);
}

DOSEstimate dos_at_energy(std::span<const double> energies, double e0,
                          std::optional<double> bandwidth) {
  if (energies.empty()) throw std::invalid_argument("dos_at_energy: empty spectrum");
  const auto [emin, emax] = std::minmax_element(energies.begin(), energies.end());
  if (e0 < *emin || e0 > *emax) throw std::domain_error("dos_at_energy: energy outside spectrum");
  const double width = *emax - *emin;
  const double sigma = bandwidth.value_or(width / std::sqrt(static_cast<double>(energies.size())));
  if (!(sigma > 0.0)) throw std::invalid_argument("dos_at_energy: bandwidth must be positive");

  const double norm = 1.0 / (std::sqrt(2.0 * std::numbers::pi) * sigma);
  double value = 0.0;
  for (double e : energies) {
    const double x = (e0 - e) / sigma;
    if (std::abs(x) < 40.0) value += std::exp(-0.5 * x * x);
  }
  return DOSEstimate{e0, value * norm, sigma};
}

DOSEstimate dos_at_energy(const EigenSystem& es, double e0, std::optional<double> bandwidth) {
  return dos_at_energy(energy_span(es), e0, bandwidth);
}

}  // namespace ergoprobe
