#pragma once

// Hamiltonians of the probe + bulk scenarios: the spin chain with a probe
// spin on site 1 (optionally disordered) and the Rydberg-blockaded PXP chain.
//
// Every model here has real matrix elements in the sigma^z basis, so the
// matrices are stored as real symmetric. That halves memory and lets the
// eigensolver run in real arithmetic, which matters at dimension 8192.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ergoprobe/hilbert.hpp"

namespace ergoprobe {

struct SpinChainParams {
  int N = 13;
  double B = 0.01;           // probe field along z on site 1
  double B_x_bath = 0.3;     // transverse field on bath sites 2..N
  double J_x = 1.0;          // bath flip-flop amplitude
  double J_z_sb = 0.2;       // probe-bath zz coupling
  double J_x_sb = 0.4;       // probe-bath flip-flop coupling
  int r = 5;                 // bath site touched by the probe
  double W = 0.0;            // disorder half-width
  std::uint64_t disorder_seed = 0;

  /// Throws std::invalid_argument when N < 3, r outside [2, N] or W < 0.
  void validate() const;
};

enum class Boundary { Open };

struct PXPParams {
  int N = 16;
  double B = 0.4;
  int probe_site = 1;
  Boundary boundary = Boundary::Open;

  void validate() const;
};

struct HamiltonianMatrix {
  BasisPtr basis;
  Eigen::MatrixXd entries;
  std::string model;
  std::map<std::string, double> parameters;

  std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }
  /// Largest |H - H^T| entry.
  double hermiticity_error() const;
};

struct DisorderRealization {
  std::uint64_t seed = 0;
  std::vector<double> fields;  // D_1..D_N
};

/// D_i = W * u_i with u_i uniform on [-1, 1) drawn from CounterRng(seed) in
/// site order. Reusing a seed across W rescales one landscape.
DisorderRealization draw_disorder(int n_sites, double W, std::uint64_t seed);

HamiltonianMatrix build_probe(const SpinChainParams& p);
HamiltonianMatrix build_bath(const SpinChainParams& p);
HamiltonianMatrix build_coupling(const SpinChainParams& p);
struct DisorderTerm {
  DisorderRealization realization;
  HamiltonianMatrix hamiltonian;
};
DisorderTerm build_disorder(const SpinChainParams& p);

HamiltonianMatrix build_pxp(const PXPParams& p, BasisPtr basis);
HamiltonianMatrix build_pxp(const PXPParams& p);
HamiltonianMatrix build_qmbs(const PXPParams& p);

/// Elementwise sum of terms sharing one basis.
HamiltonianMatrix assemble(std::span<const HamiltonianMatrix> terms);

/// H_S + H_B + H_SB (+ H_D when W > 0).
HamiltonianMatrix build_spin_chain(const SpinChainParams& p);
/// H_S + H_B (+ H_D when W > 0): the uncoupled reference Hamiltonian.
HamiltonianMatrix build_uncoupled(const SpinChainParams& p);
/// The bath block of build_uncoupled on its own (N-1)-site chain: bath
/// site k of the full chain becomes site k-1 here, disorder included.
HamiltonianMatrix build_bath_block(const SpinChainParams& p);
/// Net z field on the probe in the uncoupled Hamiltonian, B + D_1.
double probe_field(const SpinChainParams& p);

/// Diagonal operator sigma^z on one site, usable as an observable.
HamiltonianMatrix sigma_z_operator(BasisPtr basis, int site);
HamiltonianMatrix identity_operator(BasisPtr basis);

}  // namespace ergoprobe
