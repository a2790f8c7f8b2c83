#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ergoprobe/hilbert.hpp"
#include "ergoprobe/models.hpp"
#include "ergoprobe/rng.hpp"

namespace testutil {

using namespace ergoprobe;

inline StateVector random_state(BasisPtr basis, std::uint64_t seed) {
  const CounterRng rng(seed);
  StateVector psi = StateVector::zero(basis);
  for (Eigen::Index i = 0; i < psi.amplitudes.size(); ++i) {
    psi.amplitudes[i] = complex(rng.normal(2 * i), rng.normal(2 * i + 1));
  }
  return normalized(psi);
}

/// Real symmetric matrix with N(0,1) off-diagonal and N(0,2) diagonal entries.
inline Eigen::MatrixXd goe(Eigen::Index n, std::uint64_t seed) {
  const CounterRng rng(seed);
  Eigen::MatrixXd m(n, n);
  std::uint64_t k = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double x = rng.normal(k++);
      m(i, j) = m(j, i) = i == j ? std::sqrt(2.0) * x : x;
    }
  }
  return m;
}

inline HamiltonianMatrix wrap(BasisPtr basis, Eigen::MatrixXd m, std::string tag = "test") {
  return HamiltonianMatrix{std::move(basis), std::move(m), std::move(tag), {}};
}

/// Dense embedding of a one-site operator on an n-site full basis.
inline Eigen::MatrixXcd site_operator(int n, int site, const Eigen::Matrix2cd& op) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    const int b = (c >> (site - 1)) & 1;
    for (int b2 = 0; b2 < 2; ++b2) {
      // basis order within the site: index 0 = down, 1 = up
      const Eigen::Index r = (c & ~(Eigen::Index{1} << (site - 1))) | (Eigen::Index{b2} << (site - 1));
      m(r, c) += op(b2, b);
    }
  }
  return m;
}

}  // namespace testutil
