// ergoprobe command-line front end.
//
//   ergoprobe levels  --preset fig1b --out out/fig1b --threads 2
//   ergoprobe flucts  --config my.ini --seed 7
//   ergoprobe selftest

#include <cmath>
#include <complex>
#include <functional>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ergoprobe/rng.hpp"
#include "ergoprobe/runner.hpp"

using namespace ergoprobe;

namespace {

struct Check {
  std::string name;
  std::function<bool(std::string&)> run;
};

// Small closed-form oracles; each returns true on success and fills `detail`.
std::vector<Check> selftest_checks() {
  return {
      {"two-level QFI equals 4 sin^2 t",
       [](std::string& detail) {
         auto basis = build_full_basis(1);
         EigenSystem es{basis, Eigen::Vector2d(-1.0, 1.0), Eigen::Matrix2d::Identity()};
         HamiltonianMatrix op{basis, Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}}, "sigma_x", {}};
         const auto grid = TimeGrid::uniform(3.0, 31);
         const auto tr = qfi_trace(es, StateVector::product(basis, 0), make_generator(es, op), grid);
         double err = 0.0;
         for (std::size_t i = 0; i < grid.size(); ++i) {
           err = std::max(err, std::abs(tr.values[i] - 4.0 * std::pow(std::sin(grid[i]), 2)));
         }
         detail = "max error " + std::to_string(err);
         return err < 1e-12;
       }},
      {"Poisson spectrum gives <r> near 0.386",
       [](std::string& detail) {
         const CounterRng rng(11);
         std::vector<double> e(100000);
         double x = 0.0;
         for (std::size_t i = 0; i < e.size(); ++i) {
           x += -std::log(1.0 - rng.uniform(i));
           e[i] = x;
         }
         const double r = r_statistic(e, {0.0, 1.0}).mean_r;
         detail = "<r> = " + std::to_string(r);
         return std::abs(r - 0.386) < 0.005;
       }},
      {"fluctuation-dissipation arithmetic",
       [](std::string& detail) {
         const double v = fdt_predict(1.0, 100.0, 0.1, 1.0);
         detail = "prediction " + std::to_string(v);
         return std::abs(v - 1.0 / (40.0 * std::numbers::pi)) < 1e-15;
       }},
      {"exponential decay fit recovers Gamma",
       [](std::string& detail) {
         const auto grid = TimeGrid::uniform(60.0, 400);
         ObservableTrace tr{grid, {}, "synthetic"};
         for (double t : grid.points()) tr.values.push_back(-0.2 + 1.2 * std::exp(-0.25 * t));
         const DecayFit fit = decay_rate(tr, -0.2);
         detail = "Gamma = " + std::to_string(fit.gamma);
         return std::abs(fit.gamma - 0.25) < 1e-6;
       }},
      {"PXP N=3 action on the empty configuration",
       [](std::string& detail) {
         PXPParams p;
         p.N = 3;
         p.B = 0.0;
         const auto h = build_pxp(p);
         const Eigen::VectorXd col = h.entries.col(0);
         detail = "column sum " + std::to_string(col.sum());
         return col.sum() == 3.0 && col[0] == 0.0;
       }},
      {"constrained dimension at N=20",
       [](std::string& detail) {
         const auto dim = build_constrained_basis(20)->dim();
         detail = "dim " + std::to_string(dim);
         return dim == 17711;
       }},
  };
}

int run_selftest() {
  int failed = 0;
  for (const Check& c : selftest_checks()) {
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = e.what();
    }
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS " : "FAIL ") << c.name << " (" << detail << ")\n";
  }
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ergodicity-breaking diagnostics by exact diagonalization"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir;
  std::uint64_t seed = 0;
  int threads = 1;
  bool quiet = false, dump = false, list_presets = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "INI config applied on top of the preset")->check(CLI::ExistingFile);
    sub->add_option("--preset", preset_name, "named parameter preset");
    sub->add_option("--seed", seed, "base seed (realization seed = base + index)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "suppress per-task progress");
    sub->add_flag("--dump-config", dump, "print the effective config and exit");
    sub->add_flag("--list-presets", list_presets, "print preset names and exit");
  };

  const std::vector<std::pair<Command, std::string>> commands{
      {Command::Levels, "level spacings and r-statistic"},
      {Command::Entropy, "probe entanglement entropy dynamics"},
      {Command::Dos, "density of states at the initial energy"},
      {Command::Qfi, "quantum Fisher information dynamics and regime fits"},
      {Command::Flucts, "long-time fluctuations and the fluctuation-dissipation relation"},
      {Command::Pxp, "PXP scars: overlaps, survival, QFI, or FDT scan"},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [cmd, help] : commands) {
    CLI::App* sub = app.add_subcommand(to_string(cmd), help);
    add_common(sub);
    subs.push_back({sub, cmd});
  }
  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");

  CLI11_PARSE(app, argc, argv);

  if (selftest->parsed()) return run_selftest();

  Command cmd = Command::Levels;
  CLI::App* active = nullptr;
  for (const auto& [sub, c] : subs) {
    if (sub->parsed()) {
      cmd = c;
      active = sub;
    }
  }
  if (list_presets) {
    for (const auto& name : preset_names()) {
      const ScenarioConfig p = preset(name);
      std::cout << name << "  " << to_string(p.command) << " / " << to_string(p.scenario) << "\n";
    }
    return 0;
  }

  try {
    ScenarioConfig cfg = preset(preset_name.empty() ? default_preset(cmd) : preset_name);
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (cfg.command != cmd) {
      throw std::invalid_argument("preset/config is for '" + to_string(cfg.command) + "', not '" +
                                  to_string(cmd) + "'");
    }
    if (active->count("--seed")) cfg.base_seed = seed;
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();
    if (dump) {
      std::cout << dump_config(cfg);
      return 0;
    }
    const RunSummary s = run_scenario(cfg, RunOptions{threads, quiet});
    std::cerr << "wrote " << s.files.size() << " files to " << cfg.output_dir.string() << "\n";
    if (s.n_failed > 0) {
      std::cerr << s.n_failed << " of " << s.n_tasks << " tasks failed:\n";
      for (const auto& e : s.errors) std::cerr << "  " << e << "\n";
      return 2;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
