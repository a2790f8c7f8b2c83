#include "ergoprobe/models.hpp"

#include <stdexcept>

#include "ergoprobe/rng.hpp"

namespace ergoprobe {

namespace {

constexpr double kHermitianTol = 1e-12;

Config bit(int site) { return Config{1} << (site - 1); }
double z_sign(Config c, int site) { return site_up(c, site) ? 1.0 : -1.0; }

HamiltonianMatrix empty_matrix(BasisPtr basis, std::string model) {
  const auto d = static_cast<Eigen::Index>(basis->dim());
  return HamiltonianMatrix{std::move(basis), Eigen::MatrixXd::Zero(d, d), std::move(model), {}};
}

void add_chain_parameters(HamiltonianMatrix& h, const SpinChainParams& p) {
  h.parameters = {{"N", p.N},       {"B", p.B},           {"B_x_bath", p.B_x_bath},
                  {"J_x", p.J_x},   {"J_z_sb", p.J_z_sb}, {"J_x_sb", p.J_x_sb},
                  {"r", p.r},       {"W", p.W},
                  {"disorder_seed", static_cast<double>(p.disorder_seed)}};
}

// <target|H|basis[col]> += amplitude.
void add_flip(HamiltonianMatrix& h, std::size_t col, Config target, double amplitude) {
  auto row = h.basis->index_of(target);
  if (!row) throw std::domain_error(h.model + ": term leaves the basis");
  h.entries(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(col)) += amplitude;
}

void add_flip_flop(HamiltonianMatrix& h, int a, int b, double amplitude) {
  if (amplitude == 0.0) return;
  const SpinBasis& basis = *h.basis;
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const Config c = basis.state(k);
    if (site_up(c, a) != site_up(c, b)) add_flip(h, k, c ^ bit(a) ^ bit(b), amplitude);
  }
}

void add_field_x(HamiltonianMatrix& h, int site, double amplitude) {
  if (amplitude == 0.0) return;
  const SpinBasis& basis = *h.basis;
  for (std::size_t k = 0; k < basis.dim(); ++k) add_flip(h, k, basis.state(k) ^ bit(site), amplitude);
}

void add_field_z(HamiltonianMatrix& h, int site, double amplitude) {
  if (amplitude == 0.0) return;
  const SpinBasis& basis = *h.basis;
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    h.entries(i, i) += amplitude * z_sign(basis.state(k), site);
  }
}

// Bath terms of H_B on `basis`, with bath site k mapped to k - shift.
void add_bath_terms(HamiltonianMatrix& h, const SpinChainParams& p, int shift) {
  for (int k = 2; k <= p.N; ++k) add_field_x(h, k - shift, p.B_x_bath);
  for (int k = 2; k <= p.N - 1; ++k) add_flip_flop(h, k - shift, k + 1 - shift, p.J_x);
}

}  // namespace

void SpinChainParams::validate() const {
  if (N < 3) throw std::invalid_argument("spin chain needs N >= 3");
  if (r < 2 || r > N) throw std::invalid_argument("contact site r must lie in [2, N]");
  if (!(W >= 0.0)) throw std::invalid_argument("disorder width W must be >= 0");
}

void PXPParams::validate() const {
  if (N < 3) throw std::invalid_argument("PXP chain needs N >= 3");
  if (probe_site < 1 || probe_site > N) throw std::invalid_argument("probe site outside chain");
}

double HamiltonianMatrix::hermiticity_error() const {
  if (entries.size() == 0) return 0.0;
  return (entries - entries.transpose()).cwiseAbs().maxCoeff();
}

DisorderRealization draw_disorder(int n_sites, double W, std::uint64_t seed) {
  DisorderRealization d{seed, std::vector<double>(static_cast<std::size_t>(n_sites), 0.0)};
  if (W == 0.0) return d;
  const CounterRng rng(seed);
  for (int i = 0; i < n_sites; ++i) d.fields[static_cast<std::size_t>(i)] = W * rng.symmetric(static_cast<std::uint64_t>(i));
  return d;
}

namespace {

void fill_probe(HamiltonianMatrix& h, const SpinChainParams& p) { add_field_z(h, 1, p.B); }

void fill_coupling(HamiltonianMatrix& h, const SpinChainParams& p) {
  if (p.J_z_sb != 0.0) {
    const SpinBasis& basis = *h.basis;
    for (std::size_t k = 0; k < basis.dim(); ++k) {
      const auto i = static_cast<Eigen::Index>(k);
      h.entries(i, i) += p.J_z_sb * z_sign(basis.state(k), 1) * z_sign(basis.state(k), p.r);
    }
  }
  add_flip_flop(h, 1, p.r, p.J_x_sb);
}

// Disorder on sites first..N, relabelled as site i - shift.
void fill_disorder(HamiltonianMatrix& h, const DisorderRealization& d, int first, int shift) {
  for (int i = first; i <= static_cast<int>(d.fields.size()); ++i) {
    add_field_z(h, i - shift, d.fields[static_cast<std::size_t>(i - 1)]);
  }
}

HamiltonianMatrix chain_matrix(const SpinChainParams& p, int n_sites, std::string model) {
  p.validate();
  auto h = empty_matrix(build_full_basis(n_sites), std::move(model));
  add_chain_parameters(h, p);
  return h;
}

}  // namespace

HamiltonianMatrix build_probe(const SpinChainParams& p) {
  auto h = chain_matrix(p, p.N, "probe");
  fill_probe(h, p);
  return h;
}

HamiltonianMatrix build_bath(const SpinChainParams& p) {
  auto h = chain_matrix(p, p.N, "bath");
  add_bath_terms(h, p, 0);
  return h;
}

HamiltonianMatrix build_coupling(const SpinChainParams& p) {
  auto h = chain_matrix(p, p.N, "coupling");
  fill_coupling(h, p);
  return h;
}

DisorderTerm build_disorder(const SpinChainParams& p) {
  DisorderTerm term{draw_disorder(p.N, p.W, p.disorder_seed), chain_matrix(p, p.N, "disorder")};
  fill_disorder(term.hamiltonian, term.realization, 1, 0);
  return term;
}

HamiltonianMatrix build_pxp(const PXPParams& p, BasisPtr basis) {
  p.validate();
  if (basis->kind() != BasisKind::RydbergConstrained || basis->n_sites() != p.N) {
    throw std::invalid_argument("PXP requires the Rydberg-constrained basis of N sites");
  }
  auto h = empty_matrix(std::move(basis), "pxp");
  h.parameters = {{"N", p.N}, {"B", p.B}, {"probe_site", p.probe_site}};
  const SpinBasis& b = *h.basis;
  // P_{i-1} sigma^x_i P_{i+1}; the boundary sites carry a single projector.
  for (std::size_t k = 0; k < b.dim(); ++k) {
    const Config c = b.state(k);
    for (int i = 1; i <= p.N; ++i) {
      const bool left_down = i == 1 || !site_up(c, i - 1);
      const bool right_down = i == p.N || !site_up(c, i + 1);
      if (left_down && right_down) add_flip(h, k, c ^ bit(i), 1.0);
    }
  }
  return h;
}

HamiltonianMatrix build_pxp(const PXPParams& p) {
  return build_pxp(p, build_constrained_basis(p.N));
}

HamiltonianMatrix build_qmbs(const PXPParams& p) {
  auto h = build_pxp(p);
  h.model = "qmbs";
  add_field_z(h, p.probe_site, p.B);
  return h;
}

HamiltonianMatrix assemble(std::span<const HamiltonianMatrix> terms) {
  if (terms.empty()) throw std::invalid_argument("assemble: no terms");
  HamiltonianMatrix sum = terms.front();
  std::string model = sum.model;
  for (std::size_t t = 1; t < terms.size(); ++t) {
    if (!(*terms[t].basis == *sum.basis)) throw std::invalid_argument("assemble: basis mismatch");
    sum.entries += terms[t].entries;
    model += "+" + terms[t].model;
    for (const auto& [k, v] : terms[t].parameters) sum.parameters.emplace(k, v);
  }
  sum.model = std::move(model);
  if (sum.hermiticity_error() > kHermitianTol) {
    throw std::domain_error("assemble: result is not Hermitian");
  }
  return sum;
}

HamiltonianMatrix build_spin_chain(const SpinChainParams& p) {
  auto h = chain_matrix(p, p.N, "probe+bath+coupling");
  fill_probe(h, p);
  add_bath_terms(h, p, 0);
  fill_coupling(h, p);
  if (p.W > 0.0) {
    h.model += "+disorder";
    fill_disorder(h, draw_disorder(p.N, p.W, p.disorder_seed), 1, 0);
  }
  return h;
}

HamiltonianMatrix build_uncoupled(const SpinChainParams& p) {
  auto h = chain_matrix(p, p.N, "probe+bath");
  fill_probe(h, p);
  add_bath_terms(h, p, 0);
  if (p.W > 0.0) {
    h.model += "+disorder";
    fill_disorder(h, draw_disorder(p.N, p.W, p.disorder_seed), 1, 0);
  }
  return h;
}

HamiltonianMatrix build_bath_block(const SpinChainParams& p) {
  auto h = chain_matrix(p, p.N - 1, "bath_block");
  add_bath_terms(h, p, 1);
  if (p.W > 0.0) fill_disorder(h, draw_disorder(p.N, p.W, p.disorder_seed), 2, 1);
  return h;
}

double probe_field(const SpinChainParams& p) {
  return p.B + draw_disorder(p.N, p.W, p.disorder_seed).fields.front();
}

HamiltonianMatrix sigma_z_operator(BasisPtr basis, int site) {
  if (site < 1 || site > basis->n_sites()) throw std::out_of_range("sigma_z_operator: bad site");
  auto h = empty_matrix(std::move(basis), "sigma_z_" + std::to_string(site));
  add_field_z(h, site, 1.0);
  return h;
}

HamiltonianMatrix identity_operator(BasisPtr basis) {
  auto h = empty_matrix(std::move(basis), "identity");
  h.entries.setIdentity();
  return h;
}

}  // namespace ergoprobe
