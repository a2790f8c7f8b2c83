#pragma once

// Computational bases, state vectors and bipartite reduction for spin-1/2
// chains. Site j (1-based) lives in bit j-1 of the configuration word and a
// set bit means spin up (Rydberg-excited).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace ergoprobe {

using complex = std::complex<double>;
using Config = std::uint64_t;

enum class BasisKind { Full, RydbergConstrained };

inline constexpr int kMaxFullSites = 24;
inline constexpr int kMaxConstrainedSites = 32;

class SpinBasis {
public:
  int n_sites() const { return n_sites_; }
  BasisKind kind() const { return kind_; }
  std::size_t dim() const { return states_.size(); }
  const std::vector<Config>& states() const { return states_; }
  Config state(std::size_t index) const { return states_[index]; }

  /// Ordinal of a configuration, or nullopt if it is not a member.
  std::optional<std::size_t> index_of(Config c) const;

  /// True when c has no two adjacent excited sites (open boundaries).
  static bool is_rydberg_allowed(Config c) { return (c & (c >> 1)) == 0; }

  bool operator==(const SpinBasis& other) const {
    return n_sites_ == other.n_sites_ && kind_ == other.kind_;
  }

private:
  friend std::shared_ptr<const SpinBasis> build_full_basis(int n);
  friend std::shared_ptr<const SpinBasis> build_constrained_basis(int n);
  SpinBasis(int n, BasisKind kind, std::vector<Config> states)
      : n_sites_(n), kind_(kind), states_(std::move(states)) {}

  int n_sites_;
  BasisKind kind_;
  std::vector<Config> states_;
};

using BasisPtr = std::shared_ptr<const SpinBasis>;

BasisPtr build_full_basis(int n);
BasisPtr build_constrained_basis(int n);

/// Parses a site-ordered bitstring ("1010" means site 1 up, site 2 down...).
Config config_from_string(std::string_view sites);
/// Inverse of config_from_string for an n-site chain.
std::string config_to_string(Config c, int n_sites);

inline bool site_up(Config c, int site) { return (c >> (site - 1)) & 1u; }

struct StateVector {
  BasisPtr basis;
  Eigen::VectorXcd amplitudes;

  std::size_t dim() const { return static_cast<std::size_t>(amplitudes.size()); }
  double norm() const { return amplitudes.norm(); }

  static StateVector zero(BasisPtr basis);
  static StateVector product(BasisPtr basis, Config c);
};

/// Returns a copy scaled to unit norm; throws on the zero vector.
StateVector normalized(const StateVector& psi);

struct DensityMatrix {
  Eigen::MatrixXcd entries;

  std::size_t dim() const { return static_cast<std::size_t>(entries.rows()); }
  double trace() const { return entries.trace().real(); }
  /// Checks Hermiticity, unit trace and positivity to the given tolerance.
  bool is_valid(double tol = 1e-12) const;
};

enum class Pauli { X, Y, Z, Plus, Minus };

/// sigma^axis on `site` (1-based). Constrained bases reject amplitude that
/// would leave the allowed subspace.
StateVector apply_pauli(const StateVector& psi, int site, Pauli axis);

/// <a|b>, conjugate-linear in a.
complex inner(const StateVector& a, const StateVector& b);

/// Amplitudes of psi laid out on the full 2^N tensor space.
Eigen::VectorXcd embed_full(const StateVector& psi);

/// Tr_B |psi><psi| keeping `kept_sites` (1-based). The reduced basis orders
/// kept sites by increasing site index, lowest site in the lowest bit.
DensityMatrix partial_trace(const StateVector& psi, std::span<const int> kept_sites);

}  // namespace ergoprobe
