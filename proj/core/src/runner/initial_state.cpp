#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ergoprobe/rng.hpp"
#include "ergoprobe/runner.hpp"

namespace ergoprobe {

namespace {

const EigenSystem& require(const EigenSystem* es, const char* what) {
  if (!es || !es->has_vectors()) {
    throw std::invalid_argument(std::string("initial state needs the ") + what + " eigensystem");
  }
  return *es;
}

Config neel_config(int n, bool first_up) {
  Config c = 0;
  for (int site = first_up ? 1 : 2; site <= n; site += 2) c |= Config{1} << (site - 1);
  return c;
}

StateVector probe_times_bath(const InitialStateContext& ctx, const InitialStateSpec& spec, bool along_x) {
  const EigenSystem& bath = require(ctx.bath, "bath");
  const BasisPtr& basis = ctx.basis;
  if (!basis || basis->kind() != BasisKind::Full || basis->n_sites() != bath.basis->n_sites() + 1) {
    throw std::invalid_argument("probe x bath state needs a full basis one site larger than the bath");
  }
  const double target = bath.energies[0] + spec.bath_energy_fraction * bath.width();
  Eigen::Index k = 0;
  (bath.energies.array() - target).abs().minCoeff(&k);

  const double up = along_x ? 1.0 / std::sqrt(2.0) : 1.0;
  const double down = along_x ? 1.0 / std::sqrt(2.0) : 0.0;
  StateVector psi = StateVector::zero(basis);
  for (Eigen::Index b = 0; b < bath.vectors.rows(); ++b) {
    psi.amplitudes[2 * b] = down * bath.vectors(b, k);
    psi.amplitudes[2 * b + 1] = up * bath.vectors(b, k);
  }
  return psi;
}

StateVector random_superposition(const InitialStateContext& ctx, const InitialStateSpec& spec) {
  const EigenSystem& es = require(ctx.full, "full");
  const BasisPtr& basis = es.basis;
  if (basis->kind() != BasisKind::RydbergConstrained) {
    throw std::invalid_argument("random eigenstate superposition is defined on the constrained basis");
  }
  const auto n = static_cast<Eigen::Index>(es.dim());
  if (spec.count > es.dim()) throw std::invalid_argument("initial.count exceeds the Hilbert-space dimension");

  const auto z2 = basis->index_of(neel_config(basis->n_sites(), true));
  std::vector<double> overlap(static_cast<std::size_t>(n));
  for (Eigen::Index m = 0; m < n; ++m) overlap[static_cast<std::size_t>(m)] = std::abs(es.vectors(static_cast<Eigen::Index>(*z2), m));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return overlap[static_cast<std::size_t>(a)] < overlap[static_cast<std::size_t>(b)];
  });
  order.resize(spec.count);
  std::sort(order.begin(), order.end());

  const CounterRng rng(spec.seed);
  Eigen::VectorXcd coeff = Eigen::VectorXcd::Zero(n);
  std::uint64_t k = 0;
  for (Eigen::Index m : order) {
    coeff[m] = complex(rng.normal(k), rng.normal(k + 1));
    k += 2;
  }
  StateVector psi{basis, es.vectors * coeff};
  if (spec.project_probe_up) {
    if (spec.probe_site < 1 || spec.probe_site > basis->n_sites()) {
      throw std::invalid_argument("initial.probe_site out of range");
    }
    for (std::size_t i = 0; i < basis->dim(); ++i) {
      if (!site_up(basis->state(i), spec.probe_site)) psi.amplitudes[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }
  return normalized(psi);
}

}  // namespace

StateVector make_initial_state(const InitialStateSpec& spec, const InitialStateContext& ctx) {
  spec.validate();
  switch (spec.kind) {
    case InitialKind::ProbeUpX_BathEigenstate:
      return probe_times_bath(ctx, spec, true);
    case InitialKind::ProbeUpZ_BathEigenstate:
      return probe_times_bath(ctx, spec, false);
    case InitialKind::EigenstateIndex: {
      const EigenSystem& es = require(ctx.reference, "reference");
      if (spec.alpha0 >= es.dim()) {
        throw std::invalid_argument("initial.alpha0 = " + std::to_string(spec.alpha0) +
                                    " is outside a spectrum of " + std::to_string(es.dim()) + " levels");
      }
      StateVector psi{es.basis, es.vectors.col(static_cast<Eigen::Index>(spec.alpha0)).cast<complex>()};
      return psi;
    }
    case InitialKind::NeelZ2:
    case InitialKind::NeelZ2Prime: {
      if (!ctx.basis || ctx.basis->kind() != BasisKind::RydbergConstrained) {
        throw std::invalid_argument("Neel states are defined on the constrained basis");
      }
      return StateVector::product(ctx.basis, neel_config(ctx.basis->n_sites(), spec.kind == InitialKind::NeelZ2));
    }
    case InitialKind::RandomEigenSuperposition:
      return random_superposition(ctx, spec);
  }
  throw std::logic_error("unknown initial state kind");
}

}  // namespace ergoprobe
