#include <doctest.h>

#include <algorithm>
#include <vector>

#include "ergoprobe/hilbert.hpp"
#include "test_util.hpp"

using namespace ergoprobe;
using testutil::random_state;

TEST_CASE("full basis enumeration") {
  CHECK(build_full_basis(1)->dim() == 2);
  const auto b2 = build_full_basis(2);
  CHECK(b2->states() == std::vector<Config>{0, 1, 2, 3});
  CHECK(build_full_basis(13)->dim() == 8192);
  CHECK_THROWS_AS(build_full_basis(0), std::invalid_argument);
  CHECK_THROWS_AS(build_full_basis(kMaxFullSites + 1), std::invalid_argument);
  for (std::size_t i = 0; i < b2->dim(); ++i) CHECK(b2->index_of(b2->state(i)) == i);
}

TEST_CASE("constrained basis enumeration") {
  CHECK(build_constrained_basis(1)->dim() == 2);
  CHECK(build_constrained_basis(2)->dim() == 3);
  CHECK(build_constrained_basis(3)->states() == std::vector<Config>{0b000, 0b001, 0b010, 0b100, 0b101});
  CHECK(build_constrained_basis(20)->dim() == 17711);
  CHECK(build_constrained_basis(22)->dim() == 46368);
  CHECK_THROWS_AS(build_constrained_basis(0), std::invalid_argument);

  for (int n = 1; n <= 12; ++n) {
    std::vector<Config> brute;
    for (Config c = 0; c < (Config{1} << n); ++c) {
      if ((c & (c >> 1)) == 0) brute.push_back(c);
    }
    const auto b = build_constrained_basis(n);
    CHECK(b->states() == brute);
    if (n >= 3) {
      CHECK(b->dim() == build_constrained_basis(n - 1)->dim() + build_constrained_basis(n - 2)->dim());
    }
    for (std::size_t i = 0; i < b->dim(); ++i) CHECK(b->index_of(b->state(i)) == i);
    CHECK_FALSE(b->index_of(0b11).has_value());
  }
}

TEST_CASE("configuration strings are site ordered") {
  CHECK(config_from_string("1010") == 0b0101);
  CHECK(config_to_string(0b0101, 4) == "1010");
  CHECK(site_up(config_from_string("100"), 1));
  CHECK_FALSE(site_up(config_from_string("100"), 2));
  CHECK_THROWS_AS(config_from_string("10x"), std::invalid_argument);
}

TEST_CASE("Pauli action on product states") {
  const auto b1 = build_full_basis(1);
  const auto down = StateVector::product(b1, 0);
  const auto z = apply_pauli(down, 1, Pauli::Z);
  CHECK(z.amplitudes[0] == complex(-1.0, 0.0));

  const auto b2 = build_full_basis(2);
  const auto x = apply_pauli(StateVector::product(b2, config_from_string("10")), 1, Pauli::X);
  CHECK(x.amplitudes[0] == complex(1.0, 0.0));
  CHECK(x.amplitudes.norm() == doctest::Approx(1.0));

  const auto up = StateVector::product(b1, 1);
  CHECK(apply_pauli(up, 1, Pauli::Plus).amplitudes.norm() == 0.0);
  CHECK(apply_pauli(down, 1, Pauli::Plus).amplitudes[1] == complex(1.0, 0.0));
  CHECK(apply_pauli(up, 1, Pauli::Minus).amplitudes[0] == complex(1.0, 0.0));
  CHECK_THROWS_AS(apply_pauli(up, 2, Pauli::X), std::out_of_range);
}

TEST_CASE("Pauli algebra on random states") {
  const auto b = build_full_basis(5);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto psi = random_state(b, seed);
    for (int site = 1; site <= 5; ++site) {
      const auto xy = apply_pauli(apply_pauli(psi, site, Pauli::Y), site, Pauli::X);
      const auto z = apply_pauli(psi, site, Pauli::Z);
      CHECK((xy.amplitudes - complex(0.0, 1.0) * z.amplitudes).norm() < 1e-12);
      const auto zz = apply_pauli(z, site, Pauli::Z);
      CHECK((zz.amplitudes - psi.amplitudes).norm() < 1e-12);
    }
  }
}

TEST_CASE("constrained Pauli action refuses to leave the space") {
  const auto b = build_constrained_basis(3);
  const auto psi = StateVector::product(b, config_from_string("100"));
  CHECK_THROWS_AS(apply_pauli(psi, 2, Pauli::X), std::domain_error);
  const auto z = apply_pauli(psi, 2, Pauli::Z);
  CHECK((z.amplitudes + psi.amplitudes).norm() < 1e-15);
  const auto flipped = apply_pauli(psi, 3, Pauli::X);
  CHECK(std::abs(flipped.amplitudes[static_cast<Eigen::Index>(*b->index_of(config_from_string("101")))]) == 1.0);
}

TEST_CASE("inner product") {
  const auto b = build_full_basis(4);
  const auto a = random_state(b, 1);
  const auto c = random_state(b, 2);
  CHECK(std::abs(inner(a, a) - 1.0) < 1e-14);
  CHECK(std::abs(inner(a, c) - std::conj(inner(c, a))) < 1e-14);
  CHECK(inner(StateVector::product(b, 1), StateVector::product(b, 2)) == complex(0.0, 0.0));
  CHECK_THROWS_AS(inner(a, random_state(build_full_basis(3), 1)), std::invalid_argument);
}

TEST_CASE("partial trace examples") {
  const auto b = build_full_basis(2);
  const std::vector<int> keep1{1};
  const auto prod = StateVector::product(b, config_from_string("10"));
  const auto rho = partial_trace(prod, keep1);
  CHECK(std::abs(rho.entries(1, 1) - 1.0) < 1e-15);
  CHECK(std::abs(rho.entries(0, 0)) < 1e-15);

  StateVector bell = StateVector::zero(b);
  bell.amplitudes[1] = bell.amplitudes[2] = 1.0 / std::sqrt(2.0);
  const auto half = partial_trace(bell, keep1);
  CHECK((half.entries - 0.5 * Eigen::Matrix2cd::Identity()).norm() < 1e-15);
  CHECK_THROWS_AS(partial_trace(bell, std::vector<int>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(partial_trace(bell, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("partial trace against dense reshaping for every bipartition") {
  for (int n = 2; n <= 8; ++n) {
    const auto b = build_full_basis(n);
    const auto psi = random_state(b, static_cast<std::uint64_t>(n));
    for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
      std::vector<int> kept, rest;
      for (int s = 1; s <= n; ++s) ((mask >> (s - 1)) & 1 ? kept : rest).push_back(s);
      const auto rho = partial_trace(psi, kept);
      CHECK(rho.is_valid(1e-12));
      CHECK(std::abs(rho.trace() - 1.0) < 1e-12);

      // Oracle: explicit double loop over configurations.
      const Eigen::Index dk = Eigen::Index{1} << kept.size();
      Eigen::MatrixXcd ref = Eigen::MatrixXcd::Zero(dk, dk);
      auto split = [&](Config c, Eigen::Index& k, Eigen::Index& r) {
        k = r = 0;
        for (std::size_t i = 0; i < kept.size(); ++i) k |= static_cast<Eigen::Index>(site_up(c, kept[i])) << i;
        for (std::size_t i = 0; i < rest.size(); ++i) r |= static_cast<Eigen::Index>(site_up(c, rest[i])) << i;
      };
      for (Config c1 = 0; c1 < b->dim(); ++c1) {
        for (Config c2 = 0; c2 < b->dim(); ++c2) {
          Eigen::Index k1, r1, k2, r2;
          split(c1, k1, r1);
          split(c2, k2, r2);
          if (r1 == r2) ref(k1, k2) += psi.amplitudes[c1] * std::conj(psi.amplitudes[c2]);
        }
      }
      CHECK((rho.entries - ref).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("constrained states embed into the full space") {
  const auto b = build_constrained_basis(4);
  const auto psi = random_state(b, 9);
  const Eigen::VectorXcd full = embed_full(psi);
  CHECK(full.size() == 16);
  CHECK(std::abs(full.norm() - 1.0) < 1e-12);
  CHECK(std::abs(full[0b0011]) == 0.0);
  const auto rho = partial_trace(psi, std::vector<int>{1, 2});
  CHECK(rho.is_valid(1e-12));
}
