#include "ergoprobe/hilbert.hpp"

#include <algorithm>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ergoprobe {

namespace {

void require_site(const SpinBasis& basis, int site) {
  if (site < 1 || site > basis.n_sites()) {
    throw std::out_of_range("site " + std::to_string(site) + " outside chain of " +
                            std::to_string(basis.n_sites()) + " sites");
  }
}

// Gathers the bits of c selected by `sites` into a compact word.
Config gather_bits(Config c, std::span<const int> sites) {
  Config out = 0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    out |= ((c >> (sites[k] - 1)) & 1u) << k;
  }
  return out;
}

}  // namespace

std::optional<std::size_t> SpinBasis::index_of(Config c) const {
  if (kind_ == BasisKind::Full) {
    if (c >= states_.size()) return std::nullopt;
    return static_cast<std::size_t>(c);
  }
  auto it = std::lower_bound(states_.begin(), states_.end(), c);
  if (it == states_.end() || *it != c) return std::nullopt;
  return static_cast<std::size_t>(it - states_.begin());
}

BasisPtr build_full_basis(int n) {
  if (n < 1 || n > kMaxFullSites) {
    throw std::invalid_argument("full basis size must be in [1, " +
                                std::to_string(kMaxFullSites) + "], got " + std::to_string(n));
  }
  std::vector<Config> states(std::size_t{1} << n);
  for (std::size_t i = 0; i < states.size(); ++i) states[i] = i;
  return std::shared_ptr<const SpinBasis>(new SpinBasis(n, BasisKind::Full, std::move(states)));
}

BasisPtr build_constrained_basis(int n) {
  if (n < 1 || n > kMaxConstrainedSites) {
    throw std::invalid_argument("constrained basis size must be in [1, " +
                                std::to_string(kMaxConstrainedSites) + "], got " +
                                std::to_string(n));
  }
  // Grow valid words site by site; a new top bit may only be set when the
  // previous top bit is clear. Sorting afterwards gives ascending order.
  std::vector<Config> states{0, 1};
  for (int site = 2; site <= n; ++site) {
    const Config top = Config{1} << (site - 1);
    const std::size_t count = states.size();
    for (std::size_t i = 0; i < count; ++i) {
      if ((states[i] & (top >> 1)) == 0) states.push_back(states[i] | top);
    }
  }
  std::sort(states.begin(), states.end());
  return std::shared_ptr<const SpinBasis>(
      new SpinBasis(n, BasisKind::RydbergConstrained, std::move(states)));
}

Config config_from_string(std::string_view sites) {
  if (sites.empty() || sites.size() > 64) throw std::invalid_argument("bad configuration string");
  Config c = 0;
  for (std::size_t j = 0; j < sites.size(); ++j) {
    if (sites[j] == '1') {
      c |= Config{1} << j;
    } else if (sites[j] != '0') {
      throw std::invalid_argument("configuration string must be 0/1: " + std::string(sites));
    }
  }
  return c;
}

std::string config_to_string(Config c, int n_sites) {
  std::string s(static_cast<std::size_t>(n_sites), '0');
  for (int j = 0; j < n_sites; ++j) {
    if ((c >> j) & 1u) s[static_cast<std::size_t>(j)] = '1';
  }
  return s;
}

StateVector StateVector::zero(BasisPtr basis) {
  const auto d = static_cast<Eigen::Index>(basis->dim());
  return StateVector{std::move(basis), Eigen::VectorXcd::Zero(d)};
}

StateVector StateVector::product(BasisPtr basis, Config c) {
  auto idx = basis->index_of(c);
  if (!idx) throw std::invalid_argument("configuration is not in the basis");
  StateVector psi = zero(std::move(basis));
  psi.amplitudes[static_cast<Eigen::Index>(*idx)] = 1.0;
  return psi;
}

StateVector normalized(const StateVector& psi) {
  const double n = psi.norm();
  if (n == 0.0) throw std::domain_error("cannot normalize the zero vector");
  return StateVector{psi.basis, psi.amplitudes / n};
}

bool DensityMatrix::is_valid(double tol) const {
  if (entries.rows() != entries.cols() || entries.rows() == 0) return false;
  if ((entries - entries.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  if (std::abs(entries.trace() - complex(1.0, 0.0)) > tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

StateVector apply_pauli(const StateVector& psi, int site, Pauli axis) {
  const SpinBasis& basis = *psi.basis;
  require_site(basis, site);
  const Config mask = Config{1} << (site - 1);
  StateVector out = StateVector::zero(psi.basis);
  const complex i1(0.0, 1.0);

  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const complex a = psi.amplitudes[static_cast<Eigen::Index>(k)];
    if (a == complex(0.0)) continue;
    const Config c = basis.state(k);
    const bool up = (c & mask) != 0;

    complex coeff;
    Config target = c ^ mask;
    switch (axis) {
      case Pauli::Z:
        out.amplitudes[static_cast<Eigen::Index>(k)] += up ? a : -a;
        continue;
      case Pauli::X:
        coeff = 1.0;
        break;
      case Pauli::Y:
        // sigma^y |up> = i|down>, sigma^y |down> = -i|up>
        coeff = up ? i1 : -i1;
        break;
      case Pauli::Plus:
        if (up) continue;
        coeff = 1.0;
        break;
      case Pauli::Minus:
        if (!up) continue;
        coeff = 1.0;
        break;
    }
    auto idx = basis.index_of(target);
    if (!idx) {
      throw std::domain_error("Pauli operator at site " + std::to_string(site) +
                              " leaves the constrained subspace");
    }
    out.amplitudes[static_cast<Eigen::Index>(*idx)] += coeff * a;
  }
  return out;
}

complex inner(const StateVector& a, const StateVector& b) {
  if (!(*a.basis == *b.basis)) throw std::invalid_argument("inner: basis mismatch");
  return a.amplitudes.dot(b.amplitudes);
}

Eigen::VectorXcd embed_full(const StateVector& psi) {
  const SpinBasis& basis = *psi.basis;
  if (basis.kind() == BasisKind::Full) return psi.amplitudes;
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(Eigen::Index{1} << basis.n_sites());
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    full[static_cast<Eigen::Index>(basis.state(k))] = psi.amplitudes[static_cast<Eigen::Index>(k)];
  }
  return full;
}

DensityMatrix partial_trace(const StateVector& psi, std::span<const int> kept_sites) {
  const SpinBasis& basis = *psi.basis;
  const int n = basis.n_sites();
  if (kept_sites.empty() || static_cast<int>(kept_sites.size()) >= n) {
    throw std::invalid_argument("kept sites must be a nonempty proper subset");
  }
  std::vector<int> kept(kept_sites.begin(), kept_sites.end());
  std::sort(kept.begin(), kept.end());
  if (std::adjacent_find(kept.begin(), kept.end()) != kept.end()) {
    throw std::invalid_argument("kept sites contain duplicates");
  }
  for (int s : kept) require_site(basis, s);

  std::vector<int> rest;
  for (int s = 1; s <= n; ++s) {
    if (!std::binary_search(kept.begin(), kept.end(), s)) rest.push_back(s);
  }

  // psi reshaped as M[kept][rest]; rho_S = M M^dagger.
  const Eigen::Index dk = Eigen::Index{1} << kept.size();
  const Eigen::Index dr = Eigen::Index{1} << rest.size();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dk, dr);
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const Config c = basis.state(k);
    m(static_cast<Eigen::Index>(gather_bits(c, kept)),
      static_cast<Eigen::Index>(gather_bits(c, rest))) = psi.amplitudes[static_cast<Eigen::Index>(k)];
  }
  DensityMatrix rho{m * m.adjoint()};
  // Exact Hermitian part; removes rounding asymmetry from the product.
  rho.entries = 0.5 * (rho.entries + rho.entries.adjoint()).eval();
  return rho;
}

}  // namespace ergoprobe
