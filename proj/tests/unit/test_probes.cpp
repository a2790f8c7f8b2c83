#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ergoprobe/probes.hpp"
#include "ergoprobe/rng.hpp"
#include "test_util.hpp"

using namespace ergoprobe;
using testutil::goe;
using testutil::random_state;
using testutil::wrap;

namespace {

EigenSystem random_system(int n_sites, std::uint64_t seed) {
  auto basis = build_full_basis(n_sites);
  return diagonalize(wrap(basis, goe(static_cast<Eigen::Index>(basis->dim()), seed)));
}

// F_Q from d psi / d lambda = -i int_0^t e^{-iH(t-s)} O e^{-iHs} psi0 ds,
// evaluated term by term in the eigenbasis.
double qfi_oracle(const EigenSystem& es, const Eigen::VectorXcd& a, const Eigen::MatrixXd& o, double t) {
  const Eigen::Index n = a.size();
  Eigen::VectorXcd v(n), psi(n);
  for (Eigen::Index mu = 0; mu < n; ++mu) {
    complex acc = 0.0;
    for (Eigen::Index nu = 0; nu < n; ++nu) {
      const double d = es.energies[mu] - es.energies[nu];
      const complex integral = std::abs(d) < 1e-300 ? complex(t) : (std::exp(complex(0.0, d * t)) - 1.0) / complex(0.0, d);
      acc += o(mu, nu) * a[nu] * integral;
    }
    v[mu] = complex(0.0, -1.0) * std::exp(complex(0.0, -es.energies[mu] * t)) * acc;
    psi[mu] = std::exp(complex(0.0, -es.energies[mu] * t)) * a[mu];
  }
  return 4.0 * (v.squaredNorm() - std::norm(psi.dot(v)));
}

QFITrace synthetic(const std::vector<double>& t, double a, double b) {
  QFITrace tr{TimeGrid(t), {}};
  for (double x : t) tr.values.push_back(a * x + b * x * x);
  return tr;
}

SpinChainParams chain(int n) {
  SpinChainParams p;
  p.N = n;
  p.B = 0.01;
  p.B_x_bath = 0.3;
  p.J_z_sb = 0.2;
  p.J_x = 1.0;
  p.J_x_sb = 0.4;
  return p;
}

}  // namespace

TEST_CASE("QFI of the two-level example is 4 sin^2 t") {
  auto basis = build_full_basis(1);
  EigenSystem es{basis, Eigen::Vector2d(-1.0, 1.0), Eigen::Matrix2d::Identity()};
  const auto gen = make_generator(es, wrap(basis, Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}}));
  const auto grid = TimeGrid::uniform(10.0, 101);
  const auto tr = qfi_trace(es, StateVector::product(basis, 0), gen, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(tr.values[i] == doctest::Approx(4.0 * std::pow(std::sin(grid[i]), 2)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("QFI vanishes for a generator proportional to the identity") {
  const EigenSystem es = random_system(4, 1);
  const auto gen = make_generator(es, wrap(es.basis, 2.5 * Eigen::MatrixXd::Identity(16, 16)));
  const auto tr = qfi_trace(es, random_state(es.basis, 2), gen, TimeGrid::uniform(50.0, 51));
  for (double v : tr.values) CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("QFI agrees with the term-by-term oracle") {
  for (int n : {3, 5, 6}) {
    const EigenSystem es = random_system(n, 10 + n);
    const StateVector psi0 = random_state(es.basis, 20 + n);
    const auto gen = make_generator(es, sigma_z_operator(es.basis, 1));
    const auto grid = TimeGrid::linspace(0.0, 30.0, 61);
    const auto tr = qfi_trace(es, psi0, gen, grid);
    const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double ref = qfi_oracle(es, a, gen.elements, grid[i]);
      CHECK(std::abs(tr.values[i] - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("QFI with exact degeneracies uses the secular limit") {
  auto basis = build_full_basis(2);
  EigenSystem es{basis, Eigen::Vector4d(-1.0, 0.0, 0.0, 1.0), Eigen::Matrix4d::Identity()};
  const Eigen::MatrixXd o = goe(4, 3);
  const auto gen = make_generator(es, wrap(basis, o));
  const StateVector psi0 = random_state(basis, 4);
  const auto grid = TimeGrid::uniform(20.0, 41);
  const auto tr = qfi_trace(es, psi0, gen, grid);
  const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(tr.values[i] == doctest::Approx(qfi_oracle(es, a, gen.elements, grid[i])).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("QFI is non-negative, starts at zero and grows as t^2") {
  const EigenSystem es = random_system(6, 7);
  const StateVector psi0 = random_state(es.basis, 8);
  const auto op = sigma_z_operator(es.basis, 1);
  const auto gen = make_generator(es, op);
  const auto tr = qfi_trace(es, psi0, gen, TimeGrid::uniform(100.0, 401));
  CHECK(tr.values[0] == 0.0);
  for (double v : tr.values) CHECK(v >= -1e-12);

  // short times: F = 4 Var(O) t^2
  const double var = 1.0 - std::pow(expval(psi0, op), 2);
  const double t1 = 1e-3;
  const auto small = qfi_trace(es, psi0, gen, TimeGrid(std::vector<double>{t1}));
  CHECK(small.values[0] == doctest::Approx(4.0 * var * t1 * t1).epsilon(1e-4));

  // log-log slope on [1e-4, 1e-2] / width
  const double w = es.width();
  const auto lo_hi = qfi_trace(es, psi0, gen, TimeGrid(std::vector<double>{1e-4 / w, 1e-2 / w}));
  const double slope = std::log(lo_hi.values[1] / lo_hi.values[0]) / std::log(100.0);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("QFI matches the Loschmidt-echo expansion") {
  const auto builder = [](double lambda) {
    SpinChainParams p = chain(8);
    p.J_x_sb = lambda;
    return build_spin_chain(p);
  };
  const auto basis = build_full_basis(8);
  const StateVector psi0 = random_state(basis, 5);
  const auto cmp = loschmidt_qfi_check(builder, 0.4, 1e-5, psi0, TimeGrid::uniform(50.0, 50));
  REQUIRE(cmp.loschmidt.size() == 50);
  CHECK(cmp.max_relative_deviation < 1e-3);
  CHECK(cmp.loschmidt[0] == 0.0);
}

namespace {

// max(1e-3 relative, 1e-8 absolute) pointwise
bool loschmidt_agrees(const LoschmidtComparison& c) {
  for (std::size_t i = 0; i < c.loschmidt.size(); ++i) {
    const double q = c.qfi.values[i];
    if (std::abs(c.loschmidt[i] - q) > std::max(1e-3 * std::abs(q), 1e-8)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("Loschmidt agreement in every scenario, generator d/dB") {
  const auto grid = TimeGrid::uniform(40.0, 50);
  SUBCASE("two-level") {
    const auto builder = [](double b) {
      auto basis = build_full_basis(1);
      return wrap(basis, Eigen::Matrix2d{{-1.0, b}, {b, 1.0}});
    };
    const auto c = loschmidt_qfi_check(builder, 0.0, 1e-5, StateVector::product(build_full_basis(1), 0), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(c.loschmidt[i] == doctest::Approx(4.0 * std::pow(std::sin(grid[i]), 2)).epsilon(1e-4).scale(1.0));
    }
  }
  SUBCASE("integrable transition, N = 9") {
    const auto builder = [](double b) {
      SpinChainParams p = chain(9);
      p.J_x_sb = 0.01;
      p.B = b;
      return build_spin_chain(p);
    };
    CHECK(loschmidt_agrees(loschmidt_qfi_check(builder, 0.01, 1e-5, random_state(build_full_basis(9), 1), grid)));
  }
  SUBCASE("MBL, N = 10") {
    const auto builder = [](double b) {
      SpinChainParams p = chain(10);
      p.W = 5.0;
      p.disorder_seed = 3;
      p.B = b;
      return build_spin_chain(p);
    };
    CHECK(loschmidt_agrees(loschmidt_qfi_check(builder, 0.01, 1e-5, random_state(build_full_basis(10), 2), grid)));
  }
  SUBCASE("PXP, N = 10") {
    const auto builder = [](double b) {
      PXPParams p;
      p.N = 10;
      p.B = b;
      return build_qmbs(p);
    };
    Config z2 = 0;
    for (int s = 1; s <= 10; s += 2) z2 |= Config{1} << (s - 1);
    const auto basis = build_constrained_basis(10);
    CHECK(loschmidt_agrees(loschmidt_qfi_check(builder, 0.4, 1e-5, StateVector::product(basis, z2), grid)));
  }
}

TEST_CASE("regime fits recover exact coefficients") {
  std::vector<double> t;
  for (int i = 0; i <= 100; ++i) t.push_back(0.1 * i);
  std::vector<double> y;
  for (double x : t) y.push_back(3.0 * x + 0.5 * x * x);
  const RegimeFits f = fit_qfi_regimes(t, y, 0.0, 10.0);
  CHECK(f.linear_quadratic.alpha == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.linear_quadratic.beta == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(f.linear_quadratic.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.r2_gap() > 0.0);

  y.clear();
  for (double x : t) y.push_back(0.1 * x * x);
  const RegimeFits q = fit_qfi_regimes(t, y, 0.0, 10.0);
  CHECK(std::abs(q.linear_quadratic.alpha) < 1e-9);
  CHECK(q.quadratic.beta == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(std::abs(q.r2_gap()) < 1e-9);
}

TEST_CASE("linear coefficient is clamped at zero") {
  std::vector<double> t, y;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(i);
    y.push_back(-0.5 * i + 0.2 * i * i);
  }
  const RegimeFits f = fit_qfi_regimes(t, y, 0.0, 50.0);
  CHECK(f.linear_quadratic.alpha == 0.0);
  CHECK(f.linear_quadratic.beta == doctest::Approx(f.quadratic.beta));
}

TEST_CASE("regime fits need enough points") {
  std::vector<double> t{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  std::vector<double> y(t.size(), 1.0);
  CHECK_THROWS(fit_qfi_regimes(t, y, 0.0, 5.0));
  CHECK_NOTHROW(fit_qfi_regimes(t, y, 0.0, 12.0));
}

TEST_CASE("automatic window refits around the crossover") {
  std::vector<double> t;
  for (int i = 0; i <= 1000; ++i) t.push_back(i);
  const auto tr = synthetic(t, 10.0, 0.1);
  const RegimeFits f = fit_qfi_regimes(tr);
  CHECK(f.linear_quadratic.alpha == doctest::Approx(10.0).epsilon(1e-8));
  CHECK(f.linear_quadratic.beta == doctest::Approx(0.1).epsilon(1e-8));
  CHECK(f.linear_quadratic.t_hi <= 500.0 + 1e-9);
  CHECK(f.linear_quadratic.t_lo > 0.0);
}

TEST_CASE("Heisenberg crossover") {
  FitReport r;
  r.alpha = 10.0;
  r.beta = 0.1;
  const Crossover c = heisenberg_crossover(r, DOSEstimate{0.0, 50.0, 1.0});
  CHECK(c.defined);
  CHECK(c.tau == doctest::Approx(100.0));
  CHECK(c.ratio_to_dos == doctest::Approx(2.0));
  r.alpha = 0.0;
  CHECK_FALSE(heisenberg_crossover(r, DOSEstimate{}).defined);
}

TEST_CASE("decay rate of an exact exponential") {
  const auto grid = TimeGrid::uniform(80.0, 801);
  ObservableTrace tr{grid, {}, "x"};
  for (double t : grid.points()) tr.values.push_back(0.3 + 0.7 * std::exp(-0.25 * t));
  const DecayFit f = decay_rate(tr, 0.3);
  CHECK(f.gamma == doctest::Approx(0.25).epsilon(1e-6));
  CHECK(f.o_inf == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(f.o_0 == doctest::Approx(1.0));

  // wrong seed still converges
  CHECK(decay_rate(tr, 0.0).gamma == doctest::Approx(0.25).epsilon(1e-6));

  ObservableTrace flat{grid, std::vector<double>(grid.size(), 0.4), "flat"};
  CHECK_THROWS(decay_rate(flat, 0.4));
  ObservableTrace shortt{TimeGrid::uniform(1.0, 3), {1.0, 0.5, 0.2}, "short"};
  CHECK_THROWS(decay_rate(shortt, 0.0));
}

TEST_CASE("decay rate with oscillating noise") {
  const auto grid = TimeGrid::uniform(200.0, 2001);
  ObservableTrace tr{grid, {}, "noisy"};
  for (double t : grid.points()) tr.values.push_back(std::exp(-0.1 * t) + 0.01 * std::sin(7.3 * t));
  CHECK(decay_rate(tr, 0.0).gamma == doctest::Approx(0.1).epsilon(0.03));
}

TEST_CASE("microcanonical variance examples") {
  const EigenSystem es = random_system(4, 50);
  const StateVector psi0 = random_state(es.basis, 51);
  const auto id = identity_operator(es.basis);
  CHECK(microcanonical_variance(es, es, psi0, id).delta_o2 == doctest::Approx(0.0).scale(1.0));

  // product basis as es0: sigma^z_1 diagonal is +-1, equal weights -> variance 1
  const auto basis = es.basis;
  EigenSystem es0{basis, Eigen::VectorXd::LinSpaced(16, 0.0, 15.0), Eigen::MatrixXd::Identity(16, 16)};
  StateVector flat = StateVector::zero(basis);
  flat.amplitudes.setConstant(0.25);
  const auto v = microcanonical_variance(es0, es0, flat, sigma_z_operator(basis, 1));
  CHECK(v.delta_o2 == doctest::Approx(1.0));
  CHECK(v.mean == doctest::Approx(0.0).scale(1.0));

  const StateVector eig{basis, es.vectors.col(3).cast<complex>()};
  CHECK(microcanonical_variance(es, es, eig, sigma_z_operator(basis, 2)).delta_o2 < 1e-14);
}

TEST_CASE("energy shell collects at least min_shell_states levels") {
  const auto basis = build_full_basis(6);
  const Eigen::Index n = 64;
  EigenSystem es0{basis, Eigen::VectorXd::LinSpaced(n, 0.0, 63.0), Eigen::MatrixXd::Identity(n, n)};
  const StateVector psi0 = StateVector::product(basis, 32);
  MicrocanonicalOptions opts;
  opts.mode = VarianceMode::EnergyShell;
  opts.shell_half_width = 0.5;
  opts.min_shell_states = 20;
  const auto v = microcanonical_variance(es0, es0, psi0, sigma_z_operator(basis, 1), opts);
  CHECK(v.shell_center == doctest::Approx(32.0));
  CHECK(v.n_states >= 20);
  CHECK(v.n_states <= 21);
  CHECK(v.delta_o2 == doctest::Approx(1.0).epsilon(0.02));

  opts.shell_half_width = 100.0;
  CHECK(microcanonical_variance(es0, es0, psi0, sigma_z_operator(basis, 1), opts).n_states == 64);
}

TEST_CASE("FDT prediction arithmetic") {
  CHECK(fdt_predict(1.0, 100.0, 0.1) == doctest::Approx(1.0 / (40.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(fdt_predict(2.0, 100.0, 0.1) == doctest::Approx(2.0 * fdt_predict(1.0, 100.0, 0.1)));
  CHECK(fdt_predict(1.0, 100.0, 0.1, 5.5) == doctest::Approx(5.5 * fdt_predict(1.0, 100.0, 0.1)));
  CHECK(fdt_predict(1.0, 200.0, 0.1) == doctest::Approx(0.5 * fdt_predict(1.0, 100.0, 0.1)));
  CHECK_THROWS(fdt_predict(1.0, 0.0, 0.1));
  CHECK_THROWS(fdt_predict(1.0, 1.0, -0.1));

  FDTRecord r;
  r.delta_o2 = 0.5;
  r.dos = 10.0;
  r.gamma = 0.2;
  r.chi = 3.0;
  CHECK(r.predicted() == doctest::Approx(3.0 * r.rmt_scale()));
}

TEST_CASE("chi fit and log-log slope") {
  std::vector<FDTRecord> recs;
  for (int k = 0; k < 6; ++k) {
    FDTRecord r;
    r.delta_o2 = 1.0;
    r.dos = std::pow(2.0, k) * 10.0;
    r.gamma = 0.1 + 0.05 * k;
    r.delta2 = 5.5 * r.rmt_scale();
    recs.push_back(r);
  }
  const ChiFit exact = fit_chi(recs);
  CHECK(exact.chi == doctest::Approx(5.5).epsilon(1e-12));
  CHECK(exact.max_log_residual < 1e-12);
  CHECK(loglog_slope(recs) == doctest::Approx(1.0).epsilon(1e-10));

  // round trip: predictions from the fitted chi reproduce the data
  for (auto& r : recs) r.chi = exact.chi;
  for (const auto& r : recs) CHECK(r.predicted() == doctest::Approx(r.delta2).epsilon(1e-10));

  const CounterRng rng(4);
  std::vector<FDTRecord> noisy;
  for (int k = 0; k < 40; ++k) {
    FDTRecord r;
    r.delta_o2 = 1.0;
    r.dos = 10.0 * (1.0 + k);
    r.gamma = 0.2;
    r.delta2 = 5.5 * r.rmt_scale() * (1.0 + 0.05 * rng.normal(static_cast<std::uint64_t>(k)));
    noisy.push_back(r);
  }
  CHECK(std::abs(fit_chi(noisy).chi - 5.5) < 0.3);
}

TEST_CASE("long-time QFI grows quadratically for an ergodic system") {
  const EigenSystem es = random_system(8, 60);
  const StateVector psi0 = random_state(es.basis, 61);
  const auto gen = make_generator(es, sigma_z_operator(es.basis, 1));
  const double th = heisenberg_time(es, psi0);
  // F / t^2 settles past the Heisenberg time; compare two decades
  // average over a short window to remove the residual oscillation
  const auto window = [&](double t0) {
    std::vector<double> pts;
    for (int k = 0; k < 200; ++k) pts.push_back(t0 * (1.0 + 0.002 * k));
    const auto w = qfi_trace(es, psi0, gen, TimeGrid(pts));
    double acc = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) acc += w.values[k] / (pts[k] * pts[k]);
    return acc / static_cast<double>(pts.size());
  };
  const double r1 = window(100 * th), r2 = window(1000 * th);
  CHECK(std::abs(r2 / r1 - 1.0) < 0.05);
}
