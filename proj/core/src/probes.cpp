#include "ergoprobe/probes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace ergoprobe {

namespace {

constexpr Eigen::Index kQfiTimeBlock = 32;
// Eigenvalue pairs closer than this fraction of the bandwidth use the exact
// divided difference instead of the 1 / (E_mu - E_nu) kernel.
constexpr double kNearPairTol = 1e-6;

struct NearPair {
  Eigen::Index mu, nu;
};

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

double r_squared(std::span<const double> y, std::span<const double> fit) {
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    ss_res += (y[i] - fit[i]) * (y[i] - fit[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

double adjusted(double r2, std::size_t n, int p) {
  const double dn = static_cast<double>(n);
  return 1.0 - (1.0 - r2) * (dn - 1.0) / (dn - p - 1.0);
}

}  // namespace

GeneratorObservable make_generator(const EigenSystem& es, HamiltonianMatrix op) {
  if (op.hermiticity_error() > 1e-12) throw std::invalid_argument("generator is not Hermitian");
  Eigen::MatrixXd elements = to_eigenbasis(es, op);
  return GeneratorObservable{std::move(op), std::move(elements)};
}

QFITrace qfi_trace(const EigenSystem& es, const StateVector& psi0, const GeneratorObservable& gen,
                   const TimeGrid& grid) {
  if (std::abs(psi0.norm() - 1.0) > 1e-10) throw std::invalid_argument("qfi_trace: state is not normalized");
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  const Eigen::Index n = a.size();
  const Eigen::VectorXd& e = es.energies;
  const Eigen::MatrixXd& o = gen.elements;
  if (o.rows() != n) throw std::invalid_argument("qfi_trace: generator dimension mismatch");

  // v_mu(t) = sum_nu O_mu,nu a_nu (p_mu - p_nu) / (E_mu - E_nu), p = exp(-i E t),
  // split as p_mu (K a)_mu - (K (a p))_mu with K = O / (E_mu - E_nu) off the
  // near-degenerate pairs, which are summed exactly.
  const double tol = kNearPairTol * std::max(es.width(), 1e-300);
  Eigen::MatrixXd kernel(n, n);
  std::vector<NearPair> near;
  for (Eigen::Index nu = 0; nu < n; ++nu) {
    for (Eigen::Index mu = 0; mu < n; ++mu) {
      const double gap = e[mu] - e[nu];
      if (std::abs(gap) > tol) {
        kernel(mu, nu) = o(mu, nu) / gap;
      } else {
        kernel(mu, nu) = 0.0;
        if (mu != nu && o(mu, nu) != 0.0) near.push_back({mu, nu});
      }
    }
  }
  Eigen::VectorXcd ka(n);
  ka.real() = kernel * a.real();
  ka.imag() = kernel * a.imag();

  QFITrace out{grid, std::vector<double>(grid.size())};
  const auto& times = grid.points();
  for (std::size_t start = 0; start < times.size(); start += kQfiTimeBlock) {
    const auto nt = static_cast<Eigen::Index>(std::min<std::size_t>(kQfiTimeBlock, times.size() - start));
    Eigen::MatrixXcd phase(n, nt);
    Eigen::MatrixXd cr(n, nt), ci(n, nt);
    for (Eigen::Index j = 0; j < nt; ++j) {
      const double t = times[start + static_cast<std::size_t>(j)];
      for (Eigen::Index mu = 0; mu < n; ++mu) {
        phase(mu, j) = std::polar(1.0, -e[mu] * t);
        const complex c = a[mu] * phase(mu, j);
        cr(mu, j) = c.real();
        ci(mu, j) = c.imag();
      }
    }
    const Eigen::MatrixXd kcr = kernel * cr;
    const Eigen::MatrixXd kci = kernel * ci;

    for (Eigen::Index j = 0; j < nt; ++j) {
      const double t = times[start + static_cast<std::size_t>(j)];
      Eigen::VectorXcd v(n);
      for (Eigen::Index mu = 0; mu < n; ++mu) {
        const complex p = phase(mu, j);
        v[mu] = p * ka[mu] - complex(kcr(mu, j), kci(mu, j)) +
                o(mu, mu) * a[mu] * complex(0.0, -t) * p;
      }
      for (const NearPair& q : near) {
        const double mean_e = 0.5 * (e[q.mu] + e[q.nu]);
        const double half_gap = 0.5 * (e[q.mu] - e[q.nu]);
        const complex dd = complex(0.0, -t) * std::polar(1.0, -mean_e * t) * sinc(half_gap * t);
        v[q.mu] += o(q.mu, q.nu) * a[q.nu] * dd;
      }
      complex overlap = 0.0;
      for (Eigen::Index mu = 0; mu < n; ++mu) overlap += std::conj(complex(cr(mu, j), ci(mu, j))) * v[mu];
      out.values[start + static_cast<std::size_t>(j)] = 4.0 * (v.squaredNorm() - std::norm(overlap));
    }
  }
  return out;
}

LoschmidtComparison loschmidt_qfi_check(const std::function<HamiltonianMatrix(double)>& builder,
                                        double lambda, double eps, const StateVector& psi0,
                                        const TimeGrid& grid) {
  if (!(eps > 0.0)) throw std::invalid_argument("loschmidt_qfi_check: eps must be positive");
  const double h = 1e-3;
  HamiltonianMatrix derivative = builder(lambda + h);
  derivative.entries = (derivative.entries - builder(lambda - h).entries) / (2.0 * h);
  derivative.model = "dH/dlambda";

  const EigenSystem es = diagonalize(builder(lambda));
  const EigenSystem es_eps = diagonalize(builder(lambda + eps));
  LoschmidtComparison cmp;
  cmp.qfi = qfi_trace(es, psi0, make_generator(es, std::move(derivative)), grid);
  cmp.loschmidt.resize(grid.size());

  for (std::size_t j = 0; j < grid.size(); ++j) {
    const StateVector psi = propagate(es, psi0, grid[j]);
    const StateVector psi_eps = propagate(es_eps, psi0, grid[j]);
    // 1 - |<psi|psi + d>|^2 = |d|^2 - |<psi|d>|^2 for unit vectors, which
    // avoids subtracting two numbers close to one.
    const Eigen::VectorXcd d = psi_eps.amplitudes - psi.amplitudes;
    const double infidelity = d.squaredNorm() - std::norm(psi.amplitudes.dot(d));
    cmp.loschmidt[j] = 4.0 * infidelity / (eps * eps);

    const double diff = std::abs(cmp.loschmidt[j] - cmp.qfi.values[j]);
    cmp.max_absolute_deviation = std::max(cmp.max_absolute_deviation, diff);
    if (std::abs(cmp.qfi.values[j]) > 1e-8) {
      cmp.max_relative_deviation = std::max(cmp.max_relative_deviation, diff / std::abs(cmp.qfi.values[j]));
    }
  }
  return cmp;
}

RegimeFits fit_qfi_regimes(std::span<const double> t, std::span<const double> y, double t_lo,
                           double t_hi) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_qfi_regimes: size mismatch");
  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] >= t_lo && t[i] <= t_hi) {
      ts.push_back(t[i]);
      ys.push_back(y[i]);
    }
  }
  const std::size_t n = ts.size();
  if (n < kMinFitPoints) {
    throw std::invalid_argument("fit_qfi_regimes: fewer than " + std::to_string(kMinFitPoints) +
                                " points in window");
  }

  double s2 = 0, s3 = 0, s4 = 0, sy1 = 0, sy2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = ts[i];
    s2 += u * u;
    s3 += u * u * u;
    s4 += u * u * u * u;
    sy1 += u * ys[i];
    sy2 += u * u * ys[i];
  }
  if (s4 <= 0.0) throw std::domain_error("fit_qfi_regimes: degenerate design matrix");

  RegimeFits fits;
  FitReport& quad = fits.quadratic;
  quad.model = FitModel::QuadraticOnly;
  quad.beta = sy2 / s4;

  FitReport& lq = fits.linear_quadratic;
  lq.model = FitModel::LinearPlusQuadratic;
  const double det = s2 * s4 - s3 * s3;
  if (!(std::abs(det) > 1e-12 * s2 * s4)) throw std::domain_error("fit_qfi_regimes: degenerate design matrix");
  lq.alpha = (sy1 * s4 - sy2 * s3) / det;
  lq.beta = (s2 * sy2 - s3 * sy1) / det;
  if (lq.alpha < 0.0) {
    lq.alpha = 0.0;
    lq.beta = quad.beta;
  }

  std::vector<double> f_lq(n), f_q(n);
  for (std::size_t i = 0; i < n; ++i) {
    f_lq[i] = lq.alpha * ts[i] + lq.beta * ts[i] * ts[i];
    f_q[i] = quad.beta * ts[i] * ts[i];
  }
  lq.r2 = r_squared(ys, f_lq);
  quad.r2 = r_squared(ys, f_q);
  lq.r2_adjusted = adjusted(lq.r2, n, 2);
  quad.r2_adjusted = adjusted(quad.r2, n, 1);
  for (FitReport* f : {&lq, &quad}) {
    f->t_lo = ts.front();
    f->t_hi = ts.back();
    f->n_points = n;
  }
  return fits;
}

RegimeFits fit_qfi_regimes(const QFITrace& trace) {
  const auto& t = trace.grid.points();
  const std::size_t skip = t.size() / 100;
  if (t.size() - skip < kMinFitPoints) throw std::invalid_argument("fit_qfi_regimes: trace too short");
  const double t_min = t[skip];
  RegimeFits fits = fit_qfi_regimes(t, trace.values, t_min, t.back());
  const FitReport& first = fits.linear_quadratic;
  if (first.alpha > 0.0 && first.beta > 0.0) {
    const double t_hi = std::min(5.0 * first.alpha / first.beta, t.back());
    const auto in_window = std::count_if(t.begin(), t.end(),
                                         [&](double u) { return u >= t_min && u <= t_hi; });
    if (static_cast<std::size_t>(in_window) >= kMinFitPoints) {
      fits = fit_qfi_regimes(t, trace.values, t_min, t_hi);
    }
  }
  return fits;
}

Crossover heisenberg_crossover(const FitReport& fit, const DOSEstimate& dos) {
  Crossover c;
  if (!(fit.alpha > 0.0) || !(fit.beta > 0.0)) return c;
  c.defined = true;
  c.tau = fit.alpha / fit.beta;
  c.ratio_to_dos = dos.value > 0.0 ? c.tau / dos.value : 0.0;
  return c;
}

DecayFit decay_rate(const ObservableTrace& trace, double o_inf_seed) {
  const auto& t = trace.grid.points();
  const auto& y = trace.values;
  if (t.size() < 5) throw std::invalid_argument("decay_rate: trace too short");
  DecayFit fit;
  fit.o_0 = y.front();
  const double amp0 = fit.o_0 - o_inf_seed;
  const double scale = std::max(1.0, std::abs(fit.o_0));
  if (std::abs(amp0) <= 1e-9 * scale) throw std::domain_error("decay_rate: trace does not decay");

  std::size_t settle = t.size() - 1;
  std::size_t e_fold = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double dist = std::abs(y[i] - o_inf_seed);
    if (e_fold == 0 && dist <= std::exp(-1.0) * std::abs(amp0)) e_fold = i;
    if (dist <= 0.05 * std::abs(amp0)) {
      settle = i;
      break;
    }
  }
  fit.t_fit = std::min(3.0 * t[settle], t.back());
  std::size_t n = 0;
  while (n < t.size() && t[n] <= fit.t_fit) ++n;
  if (n < 5) throw std::domain_error("decay_rate: too few points before the trace settles");

  // Levenberg-Marquardt on (O_inf, Gamma) with O_0 pinned to the data.
  double oi = o_inf_seed;
  double g = e_fold > 0 ? 1.0 / t[e_fold] : 1.0 / t[n - 1];
  auto cost = [&](double oi_, double g_) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (oi_ + (fit.o_0 - oi_) * std::exp(-g_ * t[i]));
      c += r * r;
    }
    return c;
  };
  double c = cost(oi, g);
  double damping = 1e-3;
  int it = 0;
  for (; it < 500; ++it) {
    Eigen::Matrix2d jtj = Eigen::Matrix2d::Zero();
    Eigen::Vector2d jtr = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      const double ex = std::exp(-g * t[i]);
      const double r = y[i] - (oi + (fit.o_0 - oi) * ex);
      const Eigen::Vector2d j(1.0 - ex, -(fit.o_0 - oi) * t[i] * ex);
      jtj += j * j.transpose();
      jtr += j * r;
    }
    bool improved = false;
    while (damping < 1e12) {
      Eigen::Matrix2d a = jtj;
      a.diagonal() *= 1.0 + damping;
      const Eigen::Vector2d step = a.ldlt().solve(jtr);
      const double oi_new = oi + step[0];
      const double g_new = g + step[1];
      const double c_new = g_new > 0.0 ? cost(oi_new, g_new) : std::numeric_limits<double>::infinity();
      if (c_new < c) {
        const double rel = (c - c_new) / std::max(c, 1e-300);
        oi = oi_new;
        g = g_new;
        c = c_new;
        damping = std::max(damping / 10.0, 1e-12);
        improved = true;
        if (rel < 1e-14 || step.norm() < 1e-14 * (std::abs(oi) + std::abs(g))) it = 1000;
        break;
      }
      damping *= 10.0;
    }
    if (!improved) break;
  }
  if (!std::isfinite(g) || !std::isfinite(oi)) throw std::runtime_error("decay_rate: fit diverged");
  if (!(g > 0.0)) throw std::domain_error("decay_rate: fitted Gamma is not positive");
  fit.gamma = g;
  fit.o_inf = oi;
  fit.residual_rms = std::sqrt(c / static_cast<double>(n));
  fit.iterations = std::min(it, 500);
  return fit;
}

MicrocanonicalVariance microcanonical_variance(const EigenSystem& es0, const EigenSystem& es,
                                               const StateVector& psi0, const HamiltonianMatrix& op,
                                               const MicrocanonicalOptions& opts) {
  if (!(*es0.basis == *es.basis) || !(*op.basis == *es0.basis) || es0.dim() != es.dim()) {
    throw std::invalid_argument("microcanonical_variance: basis mismatch");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(es0.dim());
  const Eigen::MatrixXd& v0 = es0.vectors;

  Eigen::VectorXd diag(n);
  if (op.entries.isDiagonal(0.0)) {
    const Eigen::VectorXd d = op.entries.diagonal();
    for (Eigen::Index k = 0; k < n; ++k) diag[k] = v0.col(k).cwiseAbs2().dot(d);
  } else {
    const Eigen::MatrixXd ov = op.entries * v0;
    for (Eigen::Index k = 0; k < n; ++k) diag[k] = v0.col(k).dot(ov.col(k));
  }

  const Eigen::VectorXd pop = eigen_coefficients(es0, psi0).cwiseAbs2();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  MicrocanonicalVariance out;
  out.shell_center = pop.dot(es0.energies);

  if (opts.mode == VarianceMode::InitialPopulation) {
    w = pop;
  } else {
    double hw = 0.0;
    if (opts.shell_half_width) {
      hw = *opts.shell_half_width;
    } else {
      const Eigen::VectorXd p = eigen_coefficients(es, psi0).cwiseAbs2();
      const double e1 = p.dot(es.energies);
      const double e2 = p.dot(es.energies.cwiseAbs2());
      hw = std::sqrt(std::max(e2 - e1 * e1, 0.0));
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) {
      return std::abs(es0.energies[x] - out.shell_center) < std::abs(es0.energies[y] - out.shell_center);
    });
    std::size_t count = 0;
    for (Eigen::Index k : order) {
      const double dist = std::abs(es0.energies[k] - out.shell_center);
      if (dist > hw && count >= opts.min_shell_states) break;
      w[k] = 1.0;
      ++count;
      hw = std::max(hw, dist);
    }
    w /= static_cast<double>(count);
    out.shell_half_width = hw;
  }
  out.n_states = static_cast<std::size_t>((w.array() > 0.0).count());
  out.mean = w.dot(diag);
  const double second = w.dot(diag.cwiseAbs2());
  out.delta_o2 = std::max(second - out.mean * out.mean, 0.0);
  return out;
}

double fdt_predict(double delta_o2, double dos, double gamma, double chi) {
  if (!(delta_o2 > 0.0) || !(dos > 0.0) || !(gamma > 0.0) || !(chi > 0.0)) {
    throw std::invalid_argument("fdt_predict: inputs must be positive");
  }
  return chi * delta_o2 / (4.0 * std::numbers::pi * dos * gamma);
}

ChiFit fit_chi(std::span<const FDTRecord> records) {
  if (records.size() < 3) throw std::invalid_argument("fit_chi: need at least 3 records");
  double sxy = 0.0, sxx = 0.0;
  for (const FDTRecord& r : records) {
    const double x = r.rmt_scale();
    sxy += x * r.delta2;
    sxx += x * x;
  }
  if (!(sxx > 0.0)) throw std::domain_error("fit_chi: degenerate data");
  ChiFit fit;
  fit.n = records.size();
  fit.chi = sxy / sxx;
  double ss = 0.0;
  for (const FDTRecord& r : records) {
    const double x = r.rmt_scale();
    ss += (r.delta2 - fit.chi * x) * (r.delta2 - fit.chi * x);
    fit.max_log_residual = std::max(fit.max_log_residual, std::abs(std::log(r.delta2 / (fit.chi * x))));
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(records.size()));
  return fit;
}

double loglog_slope(std::span<const FDTRecord> records) {
  if (records.size() < 2) throw std::invalid_argument("loglog_slope: need at least 2 records");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(records.size());
  for (const FDTRecord& r : records) {
    const double x = std::log(r.rmt_scale());
    const double y = std::log(r.delta2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double var = sxx - sx * sx / n;
  if (!(var > 0.0)) throw std::domain_error("loglog_slope: abscissae coincide");
  return (sxy - sx * sy / n) / var;
}

}  // namespace ergoprobe
