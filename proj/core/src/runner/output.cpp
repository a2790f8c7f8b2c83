#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <unistd.h>

#include <json.hpp>

#include "ergoprobe/runner.hpp"

namespace ergoprobe {

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class Csv {
public:
  Csv(const std::filesystem::path& path, const std::string& header) : path_(path), out_(path) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    out_ << header << '\n';
  }
  template <class... Ts>
  void row(const Ts&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }
  const std::filesystem::path& path() const { return path_; }

private:
  static std::string cell(double x) { return num(x); }
  static std::string cell(int x) { return std::to_string(x); }
  static std::string cell(std::size_t x) { return std::to_string(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }

  std::filesystem::path path_;
  std::ofstream out_;
};

double physical_memory_gb() {
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long page = sysconf(_SC_PAGE_SIZE);
  if (pages <= 0 || page <= 0) return 0.0;
  return static_cast<double>(pages) * static_cast<double>(page) / (1024.0 * 1024.0 * 1024.0);
}

void check_resources(const ScenarioConfig& cfg, int threads, std::size_t n_tasks) {
  const double limit = cfg.max_memory_gb > 0.0 ? cfg.max_memory_gb : physical_memory_gb();
  const double workers = static_cast<double>(std::min<std::size_t>(static_cast<std::size_t>(threads), n_tasks));
  for (int n : cfg.sizes) {
    const std::size_t dim = task_dimension(cfg, n);
    if (dim > cfg.max_dim) {
      throw std::invalid_argument("N = " + std::to_string(n) + " needs a dense dimension of " +
                                  std::to_string(dim) + ", above the cap of " + std::to_string(cfg.max_dim) +
                                  " (raise run.max_dim to override)");
    }
    const double gb = task_memory_gb(cfg, n) * workers;
    if (limit > 0.0 && gb > limit) {
      throw std::invalid_argument("N = " + std::to_string(n) + " needs about " + num(gb) +
                                  " GiB of dense storage with " + num(workers) + " worker(s), above the " +
                                  num(limit) + " GiB limit (set run.max_memory_gb or use fewer threads)");
    }
  }
}

/// File-name fragment for one (N, value) group: N is included when the run
/// has several sizes, the value when a variable is scanned.
std::string group_tag(const ScenarioConfig& cfg, int N, double value, bool always_value) {
  std::string tag;
  if (always_value || cfg.scan_variable != "none") tag = num(value);
  if (cfg.sizes.size() > 1) tag = "N" + std::to_string(N) + (tag.empty() ? "" : "_" + tag);
  return tag;
}

std::string with_tag(const std::string& stem, const std::string& tag) {
  return stem + (tag.empty() ? "" : "_" + tag) + ".csv";
}

struct Group {
  int N;
  double value;
  std::vector<std::size_t> members;
};

template <class R>
std::vector<Group> groups_of(const std::vector<std::optional<R>>& results, const std::vector<TaskKey>& tasks) {
  std::vector<Group> groups;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (groups.empty() || groups.back().N != tasks[i].N || groups.back().value != tasks[i].value) {
      groups.push_back({tasks[i].N, tasks[i].value, {}});
    }
    if (results[i]) groups.back().members.push_back(i);
  }
  return groups;
}

/// Pointwise mean of equally sized value vectors; grids must coincide.
template <class R, class F>
std::vector<double> mean_values(const std::vector<std::optional<R>>& results, const Group& g, F values) {
  std::vector<double> mean;
  for (std::size_t i : g.members) {
    const std::vector<double>& v = values(*results[i]);
    if (mean.empty()) mean.assign(v.size(), 0.0);
    if (v.size() != mean.size()) throw std::runtime_error("traces of one group have different lengths");
    for (std::size_t k = 0; k < v.size(); ++k) mean[k] += v[k];
  }
  for (double& x : mean) x /= static_cast<double>(g.members.size());
  return mean;
}

void write_trace(Csv& csv, const std::vector<double>& t, const std::vector<double>& v) {
  for (std::size_t k = 0; k < t.size(); ++k) csv.row(t[k], v[k]);
}

template <class R, class F>
void run_tasks(const ScenarioConfig& cfg, const RunOptions& opts, const std::vector<TaskKey>& tasks,
               std::vector<std::optional<R>>& results, std::vector<std::string>& errors,
               std::vector<double>& seconds, F task) {
  results.assign(tasks.size(), std::nullopt);
  errors.assign(tasks.size(), "");
  seconds.assign(tasks.size(), 0.0);
  std::mutex log;
  std::atomic<std::size_t> done{0};
  parallel_for(tasks.size(), opts.threads, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      results[i] = task(cfg, tasks[i]);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
    seconds[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::size_t k = ++done;
    if (!opts.quiet) {
      std::lock_guard lock(log);
      std::cerr << "[" << k << "/" << tasks.size() << "] N=" << tasks[i].N << " " << cfg.scan_variable << "="
                << num(tasks[i].value) << " seed=" << tasks[i].seed << " " << num(seconds[i]) << " s"
                << (errors[i].empty() ? "" : " FAILED: " + errors[i]) << "\n";
    }
  });
}

void write_chi_fits(const std::vector<FDTRecord>& records, Csv& csv) {
  std::map<double, std::vector<FDTRecord>> by_value;
  for (const FDTRecord& r : records) by_value[r.scan_value].push_back(r);
  for (const auto& [value, recs] : by_value) {
    std::string chi = "nan", slope = "nan", max_res = "nan";
    if (recs.size() >= 3) {
      const ChiFit fit = fit_chi(recs);
      chi = num(fit.chi);
      max_res = num(fit.max_log_residual);
    }
    if (recs.size() >= 2) {
      try {
        slope = num(loglog_slope(recs));
      } catch (const std::domain_error&) {
      }
    }
    csv.row(value, chi, slope, max_res, recs.size());
  }
}

}  // namespace

std::string version() { return ERGOPROBE_VERSION; }

std::vector<GroupSummary> aggregate(const std::vector<std::pair<std::vector<double>, double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("aggregate: no records");
  std::vector<GroupSummary> out;
  std::vector<std::vector<double>> values;
  for (const auto& [key, v] : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const GroupSummary& g) { return g.key == key; });
    if (it == out.end()) {
      out.push_back({key, 0.0, 0.0, 0});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(v);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    const auto& v = values[g];
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out[g].mean = mean;
    out[g].n = v.size();
    out[g].stderr_mean = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  }
  return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

RunSummary run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const std::vector<TaskKey> tasks = expand_tasks(cfg);
  check_resources(cfg, opts.threads, tasks.size());
  std::filesystem::create_directories(cfg.output_dir);
  const auto start = std::chrono::steady_clock::now();

  RunSummary summary;
  summary.n_tasks = tasks.size();
  std::vector<std::string> errors;
  std::vector<double> seconds;
  auto path = [&](const std::string& name) {
    summary.files.push_back(name);
    return cfg.output_dir / name;
  };

  switch (cfg.command) {
    case Command::Levels: {
      std::vector<std::optional<LevelsResult>> res;
      run_tasks(cfg, opts, tasks, res, errors, seconds, run_levels_task);
      Csv per(path("levels.csv"), "N,W_or_J,seed,mean_r,n_spacings,ks_poisson,ks_wigner_dyson,n_degenerate");
      std::vector<std::pair<std::vector<double>, double>> rows;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!res[i]) continue;
        const SpacingAnalysis& a = res[i]->analysis;
        per.row(tasks[i].N, tasks[i].value, tasks[i].seed, a.stats.mean_r, a.stats.spacings.size(), a.ks_poisson,
                a.ks_wigner_dyson, a.n_degenerate);
        rows.push_back({{static_cast<double>(tasks[i].N), tasks[i].value}, a.stats.mean_r});
      }
      Csv ks(path("ks.csv"), "N,W_or_J,ks_poisson,ks_wigner_dyson,n_spacings");
      for (const Group& g : groups_of(res, tasks)) {
        if (g.members.empty()) continue;
        // Pooled spacings of every realization in the group.
        std::vector<double> pooled;
        for (std::size_t i : g.members) {
          const auto& s = res[i]->analysis.stats.spacings;
          pooled.insert(pooled.end(), s.begin(), s.end());
        }
        ks.row(g.N, g.value, ks_distance(pooled, poisson_cdf), ks_distance(pooled, wigner_dyson_cdf), pooled.size());
        const std::vector<double> density =
            mean_values(res, g, [](const LevelsResult& r) -> const std::vector<double>& { return r.analysis.density; });
        Csv hist(path(with_tag("spacing", group_tag(cfg, g.N, g.value, true))), "s_bin_center,density");
        write_trace(hist, res[g.members.front()]->analysis.bin_centers, density);
      }
      if (!rows.empty()) {
        std::map<int, std::unique_ptr<Csv>> files;
        for (const GroupSummary& s : aggregate(rows)) {
          const int n = static_cast<int>(s.key[0]);
          auto& f = files[n];
          if (!f) {
            const std::string tag = cfg.sizes.size() > 1 ? "N" + std::to_string(n) : "";
            f = std::make_unique<Csv>(path(with_tag("r_stat", tag)), "W_or_J,mean_r,stderr,n_realizations");
          }
          f->row(s.key[1], s.mean, s.stderr_mean, s.n);
        }
      }
      break;
    }
    case Command::Entropy: {
      std::vector<std::optional<TraceResult>> res;
      run_tasks(cfg, opts, tasks, res, errors, seconds, run_entropy_task);
      for (const Group& g : groups_of(res, tasks)) {
        if (g.members.empty()) continue;
        Csv csv(path(with_tag("entropy", group_tag(cfg, g.N, g.value, true))), "t,value");
        write_trace(csv, res[g.members.front()]->trace.grid.points(),
                    mean_values(res, g, [](const TraceResult& r) -> const std::vector<double>& { return r.trace.values; }));
      }
      break;
    }
    case Command::Dos: {
      std::vector<std::optional<DosResult>> res;
      run_tasks(cfg, opts, tasks, res, errors, seconds, run_dos_task);
      Csv per(path("dos_realizations.csv"), "N,W_or_J,seed,energy,dos,bandwidth");
      std::vector<std::pair<std::vector<double>, double>> rows;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!res[i]) continue;
        per.row(tasks[i].N, tasks[i].value, tasks[i].seed, res[i]->energy, res[i]->dos.value, res[i]->dos.bandwidth);
        rows.push_back({{static_cast<double>(tasks[i].N), tasks[i].value}, res[i]->dos.value});
      }
      if (!rows.empty()) {
        Csv csv(path("dos.csv"), "N,W_or_J,mean_dos,stderr,n_realizations");
        for (const GroupSummary& s : aggregate(rows)) csv.row(static_cast<int>(s.key[0]), s.key[1], s.mean, s.stderr_mean, s.n);
      }
      break;
    }
    case Command::Qfi: {
      std::vector<std::optional<QfiResult>> res;
      run_tasks(cfg, opts, tasks, res, errors, seconds, run_qfi_task);
      Csv fits(path("qfi_fits.csv"),
               "N,W_or_J,seed,alpha,beta,gamma,r2_adj_linear_quadratic,r2_adj_quadratic,r2_gap,tau,dos,tau_over_dos");
      auto fit_row = [&](int n, double v, const std::string& seed, const RegimeFits& f, const DOSEstimate& dos) {
        const Crossover c = heisenberg_crossover(f.linear_quadratic, dos);
        fits.row(n, v, seed, f.linear_quadratic.alpha, f.linear_quadratic.beta, f.quadratic.beta,
                 f.linear_quadratic.r2_adjusted, f.quadratic.r2_adjusted, f.r2_gap(), c.defined ? num(c.tau) : "nan",
                 dos.value, c.defined ? num(c.ratio_to_dos) : "nan");
      };
      for (const Group& g : groups_of(res, tasks)) {
        if (g.members.empty()) continue;
        for (std::size_t i : g.members) fit_row(g.N, g.value, std::to_string(tasks[i].seed), res[i]->fits, res[i]->dos);
        const auto& first = res[g.members.front()]->trace;
        bool same_grid = true;
        for (std::size_t i : g.members) same_grid &= res[i]->trace.grid.points() == first.grid.points();
        if (!same_grid) continue;  // auto grids differ between realizations
        QFITrace mean{first.grid, mean_values(res, g, [](const QfiResult& r) -> const std::vector<double>& { return r.trace.values; })};
        Csv csv(path(with_tag("qfi", group_tag(cfg, g.N, g.value, true))), "t,value");
        write_trace(csv, mean.grid.points(), mean.values);
        if (g.members.size() > 1) {
          DOSEstimate dos = res[g.members.front()]->dos;
          double d = 0.0;
          for (std::size_t i : g.members) d += res[i]->dos.value;
          dos.value = d / static_cast<double>(g.members.size());
          fit_row(g.N, g.value, "mean", fit_qfi_regimes(mean), dos);
        }
      }
      for (const Group& g : groups_of(res, tasks)) {
        for (std::size_t i : g.members) {
          const auto& tr = res[i]->trace;
          if (tr.grid.points() == res[g.members.front()]->trace.grid.points()) continue;
          Csv csv(path(with_tag("qfi", group_tag(cfg, g.N, g.value, true) + "_seed" + std::to_string(tasks[i].seed))), "t,value");
          write_trace(csv, tr.grid.points(), tr.values);
        }
      }
      break;
    }
    case Command::Flucts:
    case Command::Pxp: {
      if (cfg.command == Command::Pxp && cfg.pxp_mode == PxpMode::Scars) {
        std::vector<std::optional<ScarResult>> res;
        run_tasks(cfg, opts, tasks, res, errors, seconds, run_scar_task);
        Csv fits(path("qfi_fits.csv"), "N,B,seed,state,alpha,beta,gamma,r2_adj_linear_quadratic,r2_adj_quadratic,r2_gap");
        for (std::size_t i = 0; i < tasks.size(); ++i) {
          if (!res[i]) continue;
          const ScarResult& r = *res[i];
          std::string tag = group_tag(cfg, tasks[i].N, tasks[i].value, false);
          if (cfg.n_realizations > 1) tag += (tag.empty() ? "" : "_") + std::string("seed") + std::to_string(tasks[i].seed);
          Csv overlap(path(with_tag("overlap", tag)), "energy,overlap,log10_overlap");
          for (std::size_t k = 0; k < r.energies.size(); ++k) {
            overlap.row(r.energies[k], r.z2_overlap[k], std::log10(std::max(r.z2_overlap[k], 1e-300)));
          }
          Csv sz(path(with_tag("survival_Z2", tag)), "t,value");
          write_trace(sz, r.survival_z2.grid.points(), r.survival_z2.values);
          Csv sr(path(with_tag("survival_random", tag)), "t,value");
          write_trace(sr, r.survival_random.grid.points(), r.survival_random.values);
          Csv qz(path(with_tag("qfi_Z2", tag)), "t,value");
          write_trace(qz, r.qfi_z2.grid.points(), r.qfi_z2.values);
          Csv qr(path(with_tag("qfi_random", tag)), "t,value");
          write_trace(qr, r.qfi_random.grid.points(), r.qfi_random.values);
          const double b = pxp_params(cfg, tasks[i]).B;
          for (const auto& [state, f] : {std::pair{"Z2", &r.fits_z2}, std::pair{"random", &r.fits_random}}) {
            fits.row(tasks[i].N, b, tasks[i].seed, state, f->linear_quadratic.alpha, f->linear_quadratic.beta,
                     f->quadratic.beta, f->linear_quadratic.r2_adjusted, f->quadratic.r2_adjusted, f->r2_gap());
          }
        }
        break;
      }
      std::vector<std::optional<FdtResult>> res;
      run_tasks(cfg, opts, tasks, res, errors, seconds,
                [](const ScenarioConfig& c, const TaskKey& k) { return run_fdt_task(c, k, false); });
      Csv fdt(path("fdt.csv"), "scenario,N,W_or_J,seed,delta2,gamma,dos,delta_O2,predicted_delta2,chi_used");
      Csv fl(path("fluctuations.csv"), "N,W_or_J,seed,mode,T,value,closed_form");
      Csv dec(path("decay.csv"), "N,W_or_J,seed,gamma,o_inf,o_0,t_fit,residual_rms,shell_states,shell_half_width");
      std::vector<FDTRecord> records;
      std::vector<std::pair<std::vector<double>, double>> rows;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (!res[i]) continue;
        const FdtResult& r = *res[i];
        const FDTRecord& x = r.record;
        fdt.row(x.scenario, x.N, x.scan_value, x.seed, x.delta2, x.gamma, x.dos, x.delta_o2, x.predicted(), x.chi);
        fl.row(x.N, x.scan_value, x.seed,
               r.fluct.mode == FluctuationMode::TemporalVariance ? "temporal" : "quantum", r.fluct.horizon,
               r.fluct.value, r.fluct.closed_form);
        dec.row(x.N, x.scan_value, x.seed, r.decay.gamma, r.decay.o_inf, r.decay.o_0, r.decay.t_fit,
                r.decay.residual_rms, r.variance.n_states, r.variance.shell_half_width);
        records.push_back(x);
        rows.push_back({{static_cast<double>(x.N), x.scan_value}, x.delta2});
      }
      if (!rows.empty()) {
        Csv agg(path("delta2_summary.csv"), "N,W_or_J,mean_delta2,stderr,n_realizations");
        for (const GroupSummary& s : aggregate(rows)) agg.row(static_cast<int>(s.key[0]), s.key[1], s.mean, s.stderr_mean, s.n);
        Csv chi(path("chi_fit.csv"), "W_or_J,chi,loglog_slope,max_log_residual,n_records");
        write_chi_fits(records, chi);
      }
      break;
    }
  }

  nlohmann::json manifest;
  manifest["library_version"] = version();
  manifest["command"] = to_string(cfg.command);
  manifest["scenario"] = to_string(cfg.scenario);
  manifest["preset"] = cfg.preset;
  manifest["config"] = dump_config(cfg);
  manifest["threads"] = opts.threads;
  manifest["scan_variable"] = cfg.scan_variable;
  nlohmann::json tj = nlohmann::json::array();
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    nlohmann::json t{{"N", tasks[i].N},
                     {"W_or_J", tasks[i].value},
                     {"realization", tasks[i].realization},
                     {"seed", tasks[i].seed},
                     {"status", errors[i].empty() ? "ok" : "failed"},
                     {"wall_seconds", seconds[i]}};
    if (!errors[i].empty()) {
      t["error"] = errors[i];
      ++summary.n_failed;
      summary.errors.push_back("N=" + std::to_string(tasks[i].N) + " value=" + num(tasks[i].value) +
                               " seed=" + std::to_string(tasks[i].seed) + ": " + errors[i]);
    }
    tj.push_back(std::move(t));
  }
  manifest["tasks"] = std::move(tj);
  manifest["files"] = summary.files;
  manifest["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::ofstream(cfg.output_dir / "manifest.json") << manifest.dump(2) << '\n';
  summary.files.push_back("manifest.json");
  return summary;
}

}  // namespace ergoprobe
