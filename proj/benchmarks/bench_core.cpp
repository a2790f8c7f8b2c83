#include <benchmark/benchmark.h>

#include <array>

#include "ergoprobe/evolve.hpp"
#include "ergoprobe/probes.hpp"
#include "ergoprobe/spectra.hpp"

using namespace ergoprobe;

namespace {

SpinChainParams chain(int n) {
  SpinChainParams p;
  p.N = n;
  p.W = 2.0;
  p.disorder_seed = 1;
  return p;
}

StateVector neel_like(const BasisPtr& basis) {
  Config c = 0;
  for (int s = 1; s <= basis->n_sites(); s += 2) c |= Config{1} << (s - 1);
  return StateVector::product(basis, c);
}

void BM_BuildSpinChain(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(build_spin_chain(chain(n)));
}
BENCHMARK(BM_BuildSpinChain)->DenseRange(8, 12, 2)->Unit(benchmark::kMillisecond);

void BM_ConstrainedBasis(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(build_constrained_basis(n));
}
BENCHMARK(BM_ConstrainedBasis)->Arg(16)->Arg(20)->Arg(24)->Unit(benchmark::kMicrosecond);

void BM_Diagonalize(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto h = build_spin_chain(chain(n));
  for (auto _ : st) benchmark::DoNotOptimize(diagonalize(h));
}
BENCHMARK(BM_Diagonalize)->DenseRange(8, 11, 1)->Unit(benchmark::kMillisecond);

void BM_Eigenvalues(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto h = build_spin_chain(chain(n));
  for (auto _ : st) benchmark::DoNotOptimize(eigenvalues(h));
}
BENCHMARK(BM_Eigenvalues)->DenseRange(8, 11, 1)->Unit(benchmark::kMillisecond);

void BM_QfiTrace(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const EigenSystem es = diagonalize(build_spin_chain(chain(n)));
  const auto gen = make_generator(es, sigma_z_operator(es.basis, 1));
  const StateVector psi0 = neel_like(es.basis);
  const auto grid = TimeGrid::uniform(100.0, 128);
  for (auto _ : st) benchmark::DoNotOptimize(qfi_trace(es, psi0, gen, grid));
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(grid.size()));
}
BENCHMARK(BM_QfiTrace)->DenseRange(8, 10, 1)->Unit(benchmark::kMillisecond);

void BM_ObservableTrace(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const EigenSystem es = diagonalize(build_spin_chain(chain(n)));
  const Eigen::MatrixXd o = to_eigenbasis(es, sigma_z_operator(es.basis, 1));
  const StateVector psi0 = neel_like(es.basis);
  const auto grid = TimeGrid::uniform(100.0, 1024);
  for (auto _ : st) benchmark::DoNotOptimize(observable_trace(es, psi0, o, grid));
  st.SetItemsProcessed(st.iterations() * static_cast<int64_t>(grid.size()));
}
BENCHMARK(BM_ObservableTrace)->DenseRange(8, 10, 1)->Unit(benchmark::kMillisecond);

void BM_ClosedFormVariance(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const EigenSystem es = diagonalize(build_spin_chain(chain(n)));
  const Eigen::MatrixXd o = to_eigenbasis(es, sigma_z_operator(es.basis, 1));
  const Eigen::VectorXcd a = eigen_coefficients(es, neel_like(es.basis));
  for (auto _ : st) benchmark::DoNotOptimize(temporal_variance_closed_form(es, a, o));
}
BENCHMARK(BM_ClosedFormVariance)->DenseRange(8, 10, 1)->Unit(benchmark::kMicrosecond);

void BM_EntanglementEntropy(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const EigenSystem es = diagonalize(build_spin_chain(chain(n)));
  const StateVector psi = propagate(es, neel_like(es.basis), 5.0);
  const std::array<int, 1> probe{1};
  for (auto _ : st) benchmark::DoNotOptimize(entanglement_entropy(psi, probe));
}
BENCHMARK(BM_EntanglementEntropy)->DenseRange(8, 10, 1)->Unit(benchmark::kMicrosecond);

void BM_RStatistic(benchmark::State& st) {
  const EigenSystem es = diagonalize(build_spin_chain(chain(11)));
  for (auto _ : st) benchmark::DoNotOptimize(level_spacing_distribution(es));
}
BENCHMARK(BM_RStatistic)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
