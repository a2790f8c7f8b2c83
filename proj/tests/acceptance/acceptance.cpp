// Acceptance suite. One PASS/FAIL line per criterion; `--only k` runs one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergoprobe/rng.hpp"
#include "ergoprobe/runner.hpp"
#include "test_util.hpp"

using namespace ergoprobe;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

template <class Result>
std::vector<Result> run_all(const ScenarioConfig& cfg, Result (*task)(const ScenarioConfig&, const TaskKey&)) {
  const auto keys = expand_tasks(cfg);
  std::vector<Result> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(task(cfg, k));
  return out;
}

FdtResult fdt_task(const ScenarioConfig& cfg, const TaskKey& key) { return run_fdt_task(cfg, key); }

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// 1: r-statistic endpoints
Outcome r_endpoints() {
  const CounterRng rng(2024);
  std::vector<double> e(100000);
  double x = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    x += -std::log(1.0 - rng.uniform(i));
    e[i] = x;
  }
  const double r_p = r_statistic(e, {0.0, 1.0}).mean_r;

  const Eigen::Index dim = 2000;
  const auto goe = diagonalize_matrix(testutil::goe(dim, 7), nullptr);
  const auto levels = energy_span(goe);
  const double r_g = r_statistic(levels, {0.2, 0.8}).mean_r;
  return {std::abs(r_p - 0.386) <= 0.005 && std::abs(r_g - 0.530) <= 0.010,
          "Poisson <r> = " + fmt(r_p) + ", GOE <r> = " + fmt(r_g)};
}

// 2: MBL crossover of <r>
Outcome mbl_crossover() {
  const ScenarioConfig cfg = preset("fig1b");
  const auto keys = expand_tasks(cfg);
  const auto res = run_all(cfg, run_levels_task);
  std::map<double, std::vector<double>> by_w;
  for (std::size_t i = 0; i < keys.size(); ++i) by_w[keys[i].value].push_back(res[i].analysis.stats.mean_r);
  std::vector<std::pair<double, double>> curve;
  for (const auto& [w, rs] : by_w) curve.push_back({w, mean(rs)});
  double cross = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto [w0, r0] = curve[i - 1];
    const auto [w1, r1] = curve[i];
    if (r0 >= 0.46 && r1 < 0.46) {
      cross = w0 + (0.46 - r0) * (w1 - w0) / (r1 - r0);
      break;
    }
  }
  const double lo = by_w.count(0.5) ? mean(by_w[0.5]) : NAN;
  const double hi = by_w.count(6.0) ? mean(by_w[6.0]) : NAN;
  const bool ok = lo >= 0.50 && lo <= 0.56 && hi >= 0.37 && hi <= 0.42 && cross >= 1.5 && cross <= 3.5;
  return {ok, "<r>(W=0.5) = " + fmt(lo) + ", <r>(W=6) = " + fmt(hi) + ", crossing at W = " + fmt(cross)};
}

// 3: spacing-distribution crossover
Outcome spacing_crossover() {
  ScenarioConfig cfg = preset("fig1a");
  cfg.sizes = {11};
  const auto keys = expand_tasks(cfg);
  const auto res = run_all(cfg, run_levels_task);
  bool ok = keys.size() == 2;
  std::string detail;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& a = res[i].analysis;
    const bool poisson_closer = a.ks_poisson < a.ks_wigner_dyson;
    ok = ok && (keys[i].value < 0.01 ? poisson_closer : !poisson_closer);
    detail += "J_x_sb = " + fmt(keys[i].value) + ": KS_P = " + fmt(a.ks_poisson) + ", KS_WD = " + fmt(a.ks_wigner_dyson) + "; ";
  }
  return {ok, detail};
}

// F_Q from the literal eigenbasis triple sum
double qfi_triple_sum(const EigenSystem& es, const Eigen::VectorXcd& a, const Eigen::MatrixXd& o, double t) {
  const Eigen::Index n = a.size();
  auto integral = [t](double d) {
    return std::abs(d) < 1e-300 ? complex(t) : (std::exp(complex(0.0, d * t)) - 1.0) / complex(0.0, d);
  };
  double first = 0.0;
  complex second = 0.0;
  for (Eigen::Index mu = 0; mu < n; ++mu) {
    complex v = 0.0;
    for (Eigen::Index nu = 0; nu < n; ++nu) v += o(mu, nu) * a[nu] * integral(es.energies[mu] - es.energies[nu]);
    first += std::norm(v);
    second += std::conj(a[mu]) * v;
  }
  return 4.0 * (first - std::norm(second));
}

// 4: QFI exactness
Outcome qfi_exactness() {
  double worst = 0.0;
  for (int n : {3, 4, 5, 6}) {
    auto basis = build_full_basis(n);
    const EigenSystem es = diagonalize(testutil::wrap(basis, testutil::goe(static_cast<Eigen::Index>(basis->dim()), 40 + n)));
    const StateVector psi0 = testutil::random_state(basis, 50 + n);
    const auto gen = make_generator(es, sigma_z_operator(basis, 1));
    const auto grid = TimeGrid::uniform(40.0, 81);
    const auto tr = qfi_trace(es, psi0, gen, grid);
    const Eigen::VectorXcd a = eigen_coefficients(es, psi0);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const double ref = qfi_triple_sum(es, a, gen.elements, grid[i]);
      worst = std::max(worst, std::abs(tr.values[i] - ref) / std::abs(ref));
    }
  }
  SpinChainParams p;
  p.N = 8;
  const auto builder = [p](double lambda) {
    SpinChainParams q = p;
    q.J_x_sb = lambda;
    return build_spin_chain(q);
  };
  const StateVector psi0 = testutil::random_state(build_full_basis(8), 3);
  const auto cmp = loschmidt_qfi_check(builder, p.J_x_sb, 1e-5, psi0, TimeGrid::linspace(0.5, 50.0, 50));
  return {worst <= 1e-8 && cmp.max_relative_deviation <= 1e-3,
          "triple sum rel. error " + fmt(worst) + ", Loschmidt rel. deviation " + fmt(cmp.max_relative_deviation)};
}

// 5: QFI regime witness
Outcome qfi_regimes() {
  const ScenarioConfig erg = preset("fig2a");
  const QfiResult q = run_qfi_task(erg, expand_tasks(erg).front());

  ScenarioConfig mbl = preset("fig2b");
  mbl.sizes = {10};
  mbl.scan_values = {5.0};
  // same relative position in the spectrum as the N = 13 preset
  mbl.initial.alpha0 = static_cast<std::size_t>(std::lround(0.6714 * 1024));
  std::vector<double> gaps;
  for (const auto& r : run_all(mbl, run_qfi_task)) gaps.push_back(r.fits.r2_gap());
  const double g_mbl = mean(gaps);
  const double g_max = *std::max_element(gaps.begin(), gaps.end());
  const auto& f = q.fits.linear_quadratic;
  return {f.alpha > 0.0 && q.fits.r2_gap() > 1e-3 && g_mbl < 1e-3,
          "ergodic alpha = " + fmt(f.alpha) + ", beta = " + fmt(f.beta) + ", gap = " + fmt(q.fits.r2_gap()) +
              "; MBL mean gap = " + fmt(g_mbl) + " (max " + fmt(g_max) + ", " + std::to_string(gaps.size()) +
              " realizations)"};
}

// 6: fluctuation oracle
Outcome fluctuation_oracle() {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = 5 + k % 4;  // dim 32 .. 256
    auto basis = build_full_basis(n);
    const EigenSystem es = diagonalize(testutil::wrap(basis, testutil::goe(static_cast<Eigen::Index>(basis->dim()), 600 + k)));
    const StateVector psi0 = testutil::random_state(basis, 700 + k);
    const Eigen::VectorXd pop = eigen_coefficients(es, psi0).cwiseAbs2();
    double gap = std::numeric_limits<double>::infinity();
    Eigen::Index prev = -1;
    for (Eigen::Index i = 0; i < pop.size(); ++i) {
      if (pop[i] < 1e-12) continue;
      if (prev >= 0) gap = std::min(gap, es.energies[i] - es.energies[prev]);
      prev = i;
    }
    FluctuationOptions opts;
    opts.horizon = 100.0 / gap;
    opts.n_samples = 1 << 16;
    const auto f = long_time_fluctuations(es, psi0, sigma_z_operator(basis, 1 + k % n), opts);
    worst = std::max(worst, std::abs(f.value - f.closed_form) / f.closed_form);
  }
  return {worst <= 0.05, "max relative deviation " + fmt(worst) + " over 20 instances"};
}

// 7: FDT ergodic scaling
Outcome fdt_scaling() {
  const ScenarioConfig cfg = preset("fig3a");
  const auto res = run_all(cfg, fdt_task);
  std::vector<FDTRecord> erg;
  double min_dev = std::numeric_limits<double>::infinity();
  std::string detail;
  for (const auto& r : res) {
    const FDTRecord& rec = r.record;
    detail += "N=" + std::to_string(rec.N) + " J=" + fmt(rec.scan_value) + " d2/pred=" + fmt(rec.delta2 / rec.rmt_scale()) + "; ";
    if (rec.scan_value > 0.1) {
      erg.push_back(rec);
    } else {
      const double ratio = rec.delta2 / rec.rmt_scale();
      min_dev = std::min(min_dev, std::max(ratio, 1.0 / ratio));
    }
  }
  const double slope = loglog_slope(erg);
  return {std::abs(slope - 1.0) <= 0.3 && min_dev > 3.0,
          "slope at J_x_sb=0.4: " + fmt(slope) + ", smallest deviation at 0.01: " + fmt(min_dev) + "x; " + detail};
}

// 8: MBL fluctuation plateau
Outcome mbl_plateau() {
  const ScenarioConfig cfg = preset("fig4");
  const auto keys = expand_tasks(cfg);
  const auto res = run_all(cfg, fdt_task);
  std::map<std::pair<double, int>, std::vector<double>> d2;
  for (std::size_t i = 0; i < keys.size(); ++i) d2[{keys[i].value, keys[i].N}].push_back(res[i].record.delta2);
  const double drop_mbl = mean(d2[{5.0, 9}]) / mean(d2[{5.0, 12}]);
  const double drop_erg = mean(d2[{0.5, 9}]) / mean(d2[{0.5, 12}]);
  return {drop_mbl < 2.0 && drop_erg > 4.0,
          "delta2(N=9)/delta2(N=12): W=5 " + fmt(drop_mbl) + ", W=0.5 " + fmt(drop_erg)};
}

// 9: PXP scars
Outcome pxp_scars() {
  const ScenarioConfig cfg = preset("fig2c");
  const ScarResult s = run_scar_task(cfg, expand_tasks(cfg).front());
  const auto& fz = s.survival_z2.values;
  const auto& fr = s.survival_random.values;
  // after the first decay below 0.05, the maximum of the next lobe above 0.05
  const double floor = 0.05;
  std::size_t i = 0;
  while (i < fz.size() && fz[i] >= floor) ++i;
  std::size_t k = i;
  while (k < fz.size() && fz[k] < floor) ++k;
  if (k >= fz.size()) return {false, "no revival of the Z2 survival probability above " + fmt(floor)};
  std::size_t peak = k;
  for (std::size_t j = k; j < fz.size() && fz[j] >= floor; ++j) {
    if (fz[j] > fz[peak]) peak = j;
  }
  const double t_peak = s.survival_z2.grid[peak];
  const double ratio = fz[peak] / std::max(fr[peak], 1e-300);
  const double alpha = s.fits_random.linear_quadratic.alpha;
  const double gap_z2 = s.fits_z2.r2_gap();
  return {ratio >= 10.0 && alpha > 0.0 && gap_z2 < 1e-3,
          "revival at t = " + fmt(t_peak) + ": F_Z2 = " + fmt(fz[peak]) + ", F_random = " + fmt(fr[peak]) +
              " (ratio " + fmt(ratio) + "); random alpha = " + fmt(alpha) + ", Z2 gap = " + fmt(gap_z2)};
}

// 10: PXP chi
Outcome pxp_chi() {
  ScenarioConfig cfg = preset("fig3c");
  cfg.sizes = {14, 16, 18};
  std::vector<FDTRecord> recs;
  std::string detail;
  for (const auto& r : run_all(cfg, fdt_task)) {
    recs.push_back(r.record);
    detail += "N=" + std::to_string(r.record.N) + " d2/scale=" + fmt(r.record.delta2 / r.record.rmt_scale()) + "; ";
  }
  const ChiFit fit = fit_chi(recs);
  return {fit.chi >= 3.5 && fit.chi <= 7.5, "chi = " + fmt(fit.chi) + "; " + detail};
}

std::map<std::string, std::string> read_csvs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

// 11: determinism across worker counts
Outcome determinism() {
  ScenarioConfig levels = preset("fig1b");
  levels.sizes = {9};
  levels.scan_values = {0.5, 2.0, 5.0};
  levels.n_realizations = 4;
  ScenarioConfig flucts = preset("fig4");
  flucts.sizes = {8, 9};
  flucts.n_realizations = 3;
  ScenarioConfig qfi = preset("fig2b");
  qfi.sizes = {8};
  qfi.scan_values = {1.0, 5.0};
  qfi.n_realizations = 2;
  qfi.initial.alpha0 = 170;

  std::size_t compared = 0;
  std::string mismatch;
  const fs::path root = fs::temp_directory_path() / "ergoprobe_acceptance_determinism";
  for (const ScenarioConfig& base : {levels, flucts, qfi}) {
    std::map<std::string, std::string> ref;
    for (int threads : {1, 2, 8}) {
      ScenarioConfig cfg = base;
      cfg.output_dir = root / (to_string(cfg.command) + "_" + std::to_string(threads));
      fs::remove_all(cfg.output_dir);
      const RunSummary s = run_scenario(cfg, {threads, true});
      if (s.n_failed) return {false, "tasks failed under " + std::to_string(threads) + " threads"};
      const auto files = read_csvs(cfg.output_dir);
      if (threads == 1) {
        ref = files;
        continue;
      }
      for (const auto& [name, body] : ref) {
        ++compared;
        auto it = files.find(name);
        if (it == files.end() || it->second != body) mismatch += " " + to_string(cfg.command) + "/" + name;
      }
      if (files.size() != ref.size()) mismatch += " file-count";
    }
  }
  fs::remove_all(root);
  return {mismatch.empty() && compared > 0,
          std::to_string(compared) + " CSV comparisons" + (mismatch.empty() ? "" : ", differing:" + mismatch)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ergoprobe acceptance suite"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"r-statistic endpoints", r_endpoints},
      {"MBL crossover of <r>", mbl_crossover},
      {"spacing-distribution crossover", spacing_crossover},
      {"QFI exactness", qfi_exactness},
      {"QFI regime witness", qfi_regimes},
      {"fluctuation closed form", fluctuation_oracle},
      {"FDT ergodic scaling", fdt_scaling},
      {"MBL fluctuation plateau", mbl_plateau},
      {"PXP scar revivals and QFI", pxp_scars},
      {"PXP chi", pxp_chi},
      {"determinism across threads", determinism},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only && static_cast<std::size_t>(only) != k + 1) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << k + 1 << "] " << criteria[k].first << " (" << fmt(secs)
              << " s): " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
