#pragma once

// Scenario orchestration: configuration records, presets, initial states,
// per-task diagnostics and the on-disk result bundle.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ergoprobe/evolve.hpp"
#include "ergoprobe/hilbert.hpp"
#include "ergoprobe/models.hpp"
#include "ergoprobe/probes.hpp"
#include "ergoprobe/spectra.hpp"

namespace ergoprobe {

enum class Scenario { IntegrableTransition, MBL, PXPScars };
enum class Command { Levels, Entropy, Dos, Qfi, Flucts, Pxp };

std::string to_string(Scenario s);
std::string to_string(Command c);
Scenario parse_scenario(const std::string& s);
Command parse_command(const std::string& s);

enum class InitialKind {
  ProbeUpX_BathEigenstate,
  ProbeUpZ_BathEigenstate,
  EigenstateIndex,
  NeelZ2,
  NeelZ2Prime,
  RandomEigenSuperposition,
};

enum class ReferenceHamiltonian { Uncoupled, Full };

struct InitialStateSpec {
  InitialKind kind = InitialKind::ProbeUpX_BathEigenstate;
  /// Bath eigenstate target as a fraction of the bath spectrum (0 = bottom).
  double bath_energy_fraction = 0.5;
  std::size_t alpha0 = 0;
  ReferenceHamiltonian reference = ReferenceHamiltonian::Uncoupled;
  std::size_t count = 100;
  std::uint64_t seed = 0;
  /// RandomEigenSuperposition only: keep the component with `probe_site` up.
  bool project_probe_up = false;
  int probe_site = 1;

  void validate() const;
};

/// Eigensystems an initial state may be drawn from. `reference` is the
/// eigensystem EigenstateIndex indexes into; `bath` is the (N-1)-site bath
/// block for the probe (x) bath product kinds; `full` is the eigensystem of
/// the evolution Hamiltonian (RandomEigenSuperposition).
struct InitialStateContext {
  BasisPtr basis;
  const EigenSystem* reference = nullptr;
  const EigenSystem* bath = nullptr;
  const EigenSystem* full = nullptr;
};

StateVector make_initial_state(const InitialStateSpec& spec, const InitialStateContext& ctx);

enum class GridKind { Auto, Linear, Log };

struct TimeGridSpec {
  GridKind kind = GridKind::Auto;
  double t_min = 0.0;
  double t_max = 0.0;
  std::size_t n = 400;
  /// Auto QFI grids run to this many Heisenberg times.
  double heisenberg_multiple = 4.0;
};

enum class PxpMode { Scars, FDT };

struct ScenarioConfig {
  Command command = Command::Levels;
  Scenario scenario = Scenario::IntegrableTransition;
  std::string preset;
  SpinChainParams chain;
  PXPParams pxp;

  /// Parameter swept by scan_values: W, J_x_sb, J_z_sb, B or none.
  std::string scan_variable = "none";
  std::vector<double> scan_values{0.0};
  /// System sizes; every size runs the full scan.
  std::vector<int> sizes{13};
  int n_realizations = 1;
  std::uint64_t base_seed = 0;
  std::size_t max_dim = 50000;
  /// Estimated peak memory guard in GiB; <= 0 uses physical memory.
  double max_memory_gb = 0.0;

  TimeGridSpec grid;
  InitialStateSpec initial;
  SpacingOptions spacing;

  std::vector<int> entropy_sites{1};
  FluctuationMode fluct_mode = FluctuationMode::TemporalVariance;
  /// Also time-average <O(t)> numerically besides the closed form.
  bool numeric_fluctuations = false;
  FluctuationOptions fluct;
  MicrocanonicalOptions variance{VarianceMode::EnergyShell, std::nullopt, 20};
  std::size_t decay_points = 200;
  double decay_t0 = 50.0;
  double chi = 1.0;

  PxpMode pxp_mode = PxpMode::Scars;
  /// PXP FDT runs put the probe on the central site.
  bool pxp_central_probe = true;

  std::filesystem::path output_dir = "out";

  void validate() const;
};

std::vector<std::string> preset_names();
/// Throws std::invalid_argument for unknown names.
ScenarioConfig preset(const std::string& name);
/// Default preset for a CLI subcommand.
std::string default_preset(Command c);

/// Applies an INI-style file (sections [run], [chain], [pxp], [initial],
/// [grid], [levels], [entropy], [flucts]) on top of `base`. Unknown sections
/// or keys throw std::invalid_argument naming the offending entry.
ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base);
ScenarioConfig parse_config(const std::string& text, ScenarioConfig base);
/// Round-trippable INI echo of every configurable field.
std::string dump_config(const ScenarioConfig& cfg);

struct TaskKey {
  int N = 0;
  double value = 0.0;
  int realization = 0;
  std::uint64_t seed = 0;
};

/// sizes x scan_values x realizations, in that nesting order. Realization
/// seeds are base_seed + realization index and do not depend on the scan.
std::vector<TaskKey> expand_tasks(const ScenarioConfig& cfg);
SpinChainParams chain_params(const ScenarioConfig& cfg, const TaskKey& key);
PXPParams pxp_params(const ScenarioConfig& cfg, const TaskKey& key);

/// Hilbert-space dimension of one task and the dense-memory estimate for it.
std::size_t task_dimension(const ScenarioConfig& cfg, int N);
double task_memory_gb(const ScenarioConfig& cfg, int N);

struct LevelsResult {
  TaskKey key;
  SpacingAnalysis analysis;
};

struct TraceResult {
  TaskKey key;
  ObservableTrace trace;
};

struct DosResult {
  TaskKey key;
  double energy = 0.0;
  DOSEstimate dos;
};

struct QfiResult {
  TaskKey key;
  QFITrace trace;
  RegimeFits fits;
  DOSEstimate dos;
  Crossover crossover;
};

struct FdtResult {
  TaskKey key;
  FDTRecord record;
  DecayFit decay;
  FluctuationResult fluct;
  MicrocanonicalVariance variance;
  std::optional<ObservableTrace> trace;
};

struct ScarResult {
  TaskKey key;
  std::vector<double> energies;
  std::vector<double> z2_overlap;  // |<Z2|E_n>|^2
  ObservableTrace survival_z2;
  ObservableTrace survival_random;
  QFITrace qfi_z2;
  QFITrace qfi_random;
  RegimeFits fits_z2;
  RegimeFits fits_random;
};

LevelsResult run_levels_task(const ScenarioConfig& cfg, const TaskKey& key);
TraceResult run_entropy_task(const ScenarioConfig& cfg, const TaskKey& key);
DosResult run_dos_task(const ScenarioConfig& cfg, const TaskKey& key);
QfiResult run_qfi_task(const ScenarioConfig& cfg, const TaskKey& key);
FdtResult run_fdt_task(const ScenarioConfig& cfg, const TaskKey& key, bool keep_trace = false);
ScarResult run_scar_task(const ScenarioConfig& cfg, const TaskKey& key);

struct GroupSummary {
  std::vector<double> key;
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t n = 0;
};

/// Mean and sample standard error (sd / sqrt(n), n-1 normalization) per
/// distinct key, in order of first appearance. Throws on empty input.
std::vector<GroupSummary> aggregate(const std::vector<std::pair<std::vector<double>, double>>& rows);

/// Runs `body(i)` for i in [0, n) on `threads` workers. Tasks are claimed
/// dynamically; callers write results into slot i only.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

struct RunOptions {
  int threads = 1;
  bool quiet = false;
};

struct RunSummary {
  std::size_t n_tasks = 0;
  std::size_t n_failed = 0;
  std::vector<std::string> files;
  std::vector<std::string> errors;
};

/// Executes every task of the scenario and writes CSVs plus manifest.json to
/// cfg.output_dir. Task failures are recorded and the run continues.
RunSummary run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Library version string.
std::string version();

}  // namespace ergoprobe
