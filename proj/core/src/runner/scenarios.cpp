#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "ergoprobe/runner.hpp"

namespace ergoprobe {

namespace {

struct Uncoupled {
  EigenSystem bath;
  EigenSystem es0;
};

Uncoupled uncoupled_system(const SpinChainParams& p, BasisPtr basis) {
  Uncoupled u{diagonalize(build_bath_block(p)), {}};
  u.es0 = combine_probe_bath(probe_field(p), u.bath, std::move(basis));
  return u;
}

bool needs_uncoupled(const InitialStateSpec& spec) {
  return spec.kind == InitialKind::ProbeUpX_BathEigenstate ||
         spec.kind == InitialKind::ProbeUpZ_BathEigenstate ||
         (spec.kind == InitialKind::EigenstateIndex && spec.reference == ReferenceHamiltonian::Uncoupled);
}

void require_chain(const ScenarioConfig& cfg) {
  if (cfg.scenario == Scenario::PXPScars) throw std::invalid_argument("command needs a spin-chain scenario");
}

StateVector chain_initial_state(const ScenarioConfig& cfg, const EigenSystem& es, const Uncoupled* u) {
  InitialStateContext ctx{es.basis, &es, nullptr, &es};
  if (u) {
    ctx.bath = &u->bath;
    if (cfg.initial.reference == ReferenceHamiltonian::Uncoupled) ctx.reference = &u->es0;
  }
  return make_initial_state(cfg.initial, ctx);
}

TimeGrid explicit_grid(const TimeGridSpec& g) {
  if (g.kind == GridKind::Log) return TimeGrid::logspace(g.t_min, g.t_max, g.n);
  return TimeGrid::linspace(g.t_min, g.t_max, g.n);
}

/// Uniform grid to `heisenberg_multiple` Heisenberg times unless the config
/// pins one.
TimeGrid qfi_grid(const ScenarioConfig& cfg, const EigenSystem& es, const StateVector& psi0) {
  if (cfg.grid.kind != GridKind::Auto) return explicit_grid(cfg.grid);
  return TimeGrid::uniform(cfg.grid.heisenberg_multiple * heisenberg_time(es, psi0), cfg.grid.n);
}

double settle_time(const ObservableTrace& tr, double o_inf) {
  const double amp = std::abs(tr.values.front() - o_inf);
  for (std::size_t i = 0; i < tr.values.size(); ++i) {
    if (std::abs(tr.values[i] - o_inf) <= 0.05 * amp) return tr.grid[i];
  }
  return std::numeric_limits<double>::infinity();
}

/// Doubles the horizon until the trace settles within the first third.
ObservableTrace decay_trace(const ScenarioConfig& cfg, const EigenSystem& es, const StateVector& psi0,
                            const Eigen::MatrixXd& op_eigen, double o_inf) {
  double t_max = cfg.decay_t0;
  ObservableTrace tr;
  for (int doubling = 0; doubling <= 14; ++doubling) {
    tr = observable_trace(es, psi0, op_eigen, TimeGrid::uniform(t_max, cfg.decay_points), "sigma_z");
    if (3.0 * settle_time(tr, o_inf) <= t_max) break;
    t_max *= 2.0;
  }
  return tr;
}

EigenSystem computational_eigensystem(const HamiltonianMatrix& h0) {
  const auto n = static_cast<Eigen::Index>(h0.dim());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXd d = h0.entries.diagonal();
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return d[a] < d[b]; });
  EigenSystem es{h0.basis, Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    es.energies[k] = d[order[static_cast<std::size_t>(k)]];
    es.vectors(order[static_cast<std::size_t>(k)], k) = 1.0;
  }
  return es;
}

InitialStateSpec seeded(const InitialStateSpec& spec, const TaskKey& key) {
  InitialStateSpec s = spec;
  s.seed = spec.seed + key.seed;
  return s;
}

}  // namespace

std::size_t task_dimension(const ScenarioConfig& cfg, int N) {
  if (cfg.scenario == Scenario::PXPScars) {
    if (N < 1 || N > kMaxConstrainedSites) throw std::invalid_argument("PXP size out of range");
    std::size_t a = 2, b = 3;  // dim(1), dim(2)
    if (N == 1) return a;
    for (int k = 2; k < N; ++k) {
      const std::size_t c = a + b;
      a = b;
      b = c;
    }
    return b;
  }
  if (N < 1 || N > kMaxFullSites) throw std::invalid_argument("spin-chain size out of range");
  return std::size_t{1} << N;
}

double task_memory_gb(const ScenarioConfig& cfg, int N) {
  // Dense n x n double matrices alive at the peak of each pipeline.
  double matrices = 2.0;
  switch (cfg.command) {
    case Command::Levels: matrices = 1.5; break;
    case Command::Dos: matrices = 2.0; break;
    case Command::Entropy: matrices = 3.5; break;
    case Command::Qfi: matrices = 4.5; break;
    case Command::Flucts: matrices = 4.5; break;
    case Command::Pxp: matrices = cfg.pxp_mode == PxpMode::FDT ? 4.5 : 4.0; break;
  }
  const double n = static_cast<double>(task_dimension(cfg, N));
  return matrices * n * n * 8.0 / (1024.0 * 1024.0 * 1024.0);
}

LevelsResult run_levels_task(const ScenarioConfig& cfg, const TaskKey& key) {
  require_chain(cfg);
  const Eigen::VectorXd e = eigenvalues(build_spin_chain(chain_params(cfg, key)));
  return {key, level_spacing_distribution(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())),
                                          cfg.spacing)};
}

TraceResult run_entropy_task(const ScenarioConfig& cfg, const TaskKey& key) {
  require_chain(cfg);
  const SpinChainParams p = chain_params(cfg, key);
  const EigenSystem es = diagonalize(build_spin_chain(p));
  StateVector psi0;
  {
    std::optional<Uncoupled> u;
    if (needs_uncoupled(cfg.initial)) u = uncoupled_system(p, es.basis);
    psi0 = chain_initial_state(cfg, es, u ? &*u : nullptr);
  }
  const TimeGrid grid = cfg.grid.kind == GridKind::Auto
                            ? TimeGrid::logspace(0.1, 10.0 * heisenberg_time(es, psi0), cfg.grid.n)
                            : explicit_grid(cfg.grid);
  return {key, entropy_trace(es, psi0, grid, cfg.entropy_sites)};
}

DosResult run_dos_task(const ScenarioConfig& cfg, const TaskKey& key) {
  require_chain(cfg);
  const SpinChainParams p = chain_params(cfg, key);
  HamiltonianMatrix h = build_spin_chain(p);
  DosResult out{key, 0.0, {}};
  if (cfg.initial.kind == InitialKind::EigenstateIndex && cfg.initial.reference == ReferenceHamiltonian::Full) {
    const EigenSystem es = diagonalize(std::move(h));
    out.energy = energy_expectation(es, chain_initial_state(cfg, es, nullptr));
    out.dos = dos_at_energy(es, out.energy);
    return out;
  }
  StateVector psi0;
  {
    const Uncoupled u = uncoupled_system(p, h.basis);
    InitialStateContext ctx{h.basis, &u.es0, &u.bath, nullptr};
    psi0 = make_initial_state(cfg.initial, ctx);
  }
  out.energy = expval(psi0, h);
  const Eigen::VectorXd e = eigenvalues(std::move(h));
  out.dos = dos_at_energy(std::span<const double>(e.data(), static_cast<std::size_t>(e.size())), out.energy);
  return out;
}

QfiResult run_qfi_task(const ScenarioConfig& cfg, const TaskKey& key) {
  require_chain(cfg);
  const SpinChainParams p = chain_params(cfg, key);
  const EigenSystem es = diagonalize(build_spin_chain(p));
  StateVector psi0;
  {
    std::optional<Uncoupled> u;
    if (needs_uncoupled(cfg.initial)) u = uncoupled_system(p, es.basis);
    psi0 = chain_initial_state(cfg, es, u ? &*u : nullptr);
  }
  QfiResult out{key, {}, {}, {}, {}};
  const TimeGrid grid = qfi_grid(cfg, es, psi0);
  out.trace = qfi_trace(es, psi0, make_generator(es, sigma_z_operator(es.basis, 1)), grid);
  out.fits = fit_qfi_regimes(out.trace);
  out.dos = dos_at_energy(es, energy_expectation(es, psi0));
  out.crossover = heisenberg_crossover(out.fits.linear_quadratic, out.dos);
  return out;
}

FdtResult run_fdt_task(const ScenarioConfig& cfg, const TaskKey& key, bool keep_trace) {
  FdtResult out{key, {}, {}, {}, {}, std::nullopt};
  EigenSystem es;
  StateVector psi0;
  HamiltonianMatrix op;
  std::string tag;

  if (cfg.scenario == Scenario::PXPScars) {
    const PXPParams p = pxp_params(cfg, key);
    es = diagonalize(build_qmbs(p));
    InitialStateSpec spec = seeded(cfg.initial, key);
    spec.probe_site = p.probe_site;
    psi0 = make_initial_state(spec, InitialStateContext{es.basis, &es, nullptr, &es});
    op = sigma_z_operator(es.basis, p.probe_site);
    HamiltonianMatrix h0 = sigma_z_operator(es.basis, p.probe_site);
    h0.entries *= p.B;
    out.variance = microcanonical_variance(computational_eigensystem(h0), es, psi0, op, cfg.variance);
    tag = "pxp";
  } else {
    const SpinChainParams p = chain_params(cfg, key);
    es = diagonalize(build_spin_chain(p));
    const Uncoupled u = uncoupled_system(p, es.basis);
    psi0 = chain_initial_state(cfg, es, &u);
    op = sigma_z_operator(es.basis, 1);
    out.variance = microcanonical_variance(u.es0, es, psi0, op, cfg.variance);
    tag = to_string(cfg.scenario);
  }

  const Eigen::MatrixXd op_eigen = to_eigenbasis(es, op);
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  const double closed = temporal_variance_closed_form(es, a, op_eigen);
  if (cfg.numeric_fluctuations || cfg.fluct_mode == FluctuationMode::QuantumVariance) {
    FluctuationOptions fo = cfg.fluct;
    fo.mode = cfg.fluct_mode;
    out.fluct = fo.mode == FluctuationMode::QuantumVariance ? long_time_fluctuations(es, psi0, op, fo)
                                                            : long_time_fluctuations(es, psi0, op_eigen, fo);
    out.fluct.closed_form = closed;
  } else {
    out.fluct = {FluctuationMode::TemporalVariance, closed, std::numeric_limits<double>::infinity(), closed};
  }

  const double o_inf = diagonal_ensemble_mean(es, psi0, op_eigen);
  ObservableTrace trace = decay_trace(cfg, es, psi0, op_eigen, o_inf);
  out.decay = decay_rate(trace, o_inf);
  if (keep_trace) out.trace = std::move(trace);

  const DOSEstimate dos = dos_at_energy(es, energy_expectation(es, psi0));
  FDTRecord& r = out.record;
  r.scenario = tag;
  r.N = key.N;
  r.scan_value = key.value;
  r.seed = key.seed;
  r.delta2 = out.fluct.value;
  r.gamma = out.decay.gamma;
  r.dos = dos.value;
  r.delta_o2 = out.variance.delta_o2;
  r.chi = cfg.chi;
  return out;
}

ScarResult run_scar_task(const ScenarioConfig& cfg, const TaskKey& key) {
  if (cfg.scenario != Scenario::PXPScars) throw std::invalid_argument("scar diagnostics need the pxp scenario");
  const PXPParams p = pxp_params(cfg, key);
  const EigenSystem es = diagonalize(build_qmbs(p));
  InitialStateSpec z2_spec = cfg.initial;
  z2_spec.kind = InitialKind::NeelZ2;
  InitialStateSpec random_spec = seeded(cfg.initial, key);
  random_spec.kind = InitialKind::RandomEigenSuperposition;
  const InitialStateContext ctx{es.basis, &es, nullptr, &es};
  const StateVector z2 = make_initial_state(z2_spec, ctx);
  const StateVector random = make_initial_state(random_spec, ctx);

  ScarResult out;
  out.key = key;
  out.energies.assign(es.energies.data(), es.energies.data() + es.energies.size());
  const Eigen::VectorXcd a = eigen_coefficients(es, z2);
  for (Eigen::Index m = 0; m < a.size(); ++m) out.z2_overlap.push_back(std::norm(a[m]));

  const TimeGrid survival_grid =
      cfg.grid.kind == GridKind::Auto ? TimeGrid::uniform(30.0, 601) : explicit_grid(cfg.grid);
  out.survival_z2 = survival_probability(es, z2, survival_grid);
  out.survival_random = survival_probability(es, random, survival_grid);

  const GeneratorObservable gen = make_generator(es, sigma_z_operator(es.basis, p.probe_site));
  const TimeGrid grid = qfi_grid(cfg, es, random);
  out.qfi_z2 = qfi_trace(es, z2, gen, grid);
  out.qfi_random = qfi_trace(es, random, gen, grid);
  out.fits_z2 = fit_qfi_regimes(out.qfi_z2);
  out.fits_random = fit_qfi_regimes(out.qfi_random);
  return out;
}

}  // namespace ergoprobe
