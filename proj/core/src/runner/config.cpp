#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ergoprobe/runner.hpp"

namespace ergoprobe {

namespace {

namespace pt = boost::property_tree;

template <class E, std::size_t K>
using NameTable = std::array<std::pair<E, const char*>, K>;

constexpr NameTable<Scenario, 3> kScenarioNames{{
    {Scenario::IntegrableTransition, "integrable"},
    {Scenario::MBL, "mbl"},
    {Scenario::PXPScars, "pxp"},
}};
constexpr NameTable<Command, 6> kCommandNames{{
    {Command::Levels, "levels"},
    {Command::Entropy, "entropy"},
    {Command::Dos, "dos"},
    {Command::Qfi, "qfi"},
    {Command::Flucts, "flucts"},
    {Command::Pxp, "pxp"},
}};
constexpr NameTable<InitialKind, 6> kInitialNames{{
    {InitialKind::ProbeUpX_BathEigenstate, "probe_up_x_bath"},
    {InitialKind::ProbeUpZ_BathEigenstate, "probe_up_z_bath"},
    {InitialKind::EigenstateIndex, "eigenstate"},
    {InitialKind::NeelZ2, "neel"},
    {InitialKind::NeelZ2Prime, "neel_prime"},
    {InitialKind::RandomEigenSuperposition, "random"},
}};
constexpr NameTable<ReferenceHamiltonian, 2> kReferenceNames{{
    {ReferenceHamiltonian::Uncoupled, "uncoupled"},
    {ReferenceHamiltonian::Full, "full"},
}};
constexpr NameTable<GridKind, 3> kGridNames{{
    {GridKind::Auto, "auto"},
    {GridKind::Linear, "linear"},
    {GridKind::Log, "log"},
}};
constexpr NameTable<FluctuationMode, 2> kFluctNames{{
    {FluctuationMode::TemporalVariance, "temporal"},
    {FluctuationMode::QuantumVariance, "quantum"},
}};
constexpr NameTable<VarianceMode, 2> kVarianceNames{{
    {VarianceMode::InitialPopulation, "initial_population"},
    {VarianceMode::EnergyShell, "energy_shell"},
}};
constexpr NameTable<PxpMode, 2> kPxpNames{{
    {PxpMode::Scars, "scars"},
    {PxpMode::FDT, "fdt"},
}};

template <class E, std::size_t K>
const char* name_of(const NameTable<E, K>& table, E value) {
  for (const auto& [e, name] : table) {
    if (e == value) return name;
  }
  throw std::logic_error("unnamed enum value");
}

template <class E, std::size_t K>
E value_of(const NameTable<E, K>& table, const std::string& name, const char* what) {
  for (const auto& [e, n] : table) {
    if (name == n) return e;
  }
  std::string allowed;
  for (const auto& entry : table) allowed += std::string(allowed.empty() ? "" : ", ") + entry.second;
  throw std::invalid_argument(std::string("unknown ") + what + " '" + name + "' (expected one of " +
                              allowed + ")");
}

const std::set<std::string> kScanVariables{"none", "W", "J_x_sb", "J_z_sb", "B"};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim(v.substr(used)) != "") {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return x;
}

long long to_integer(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x != std::floor(x)) throw std::invalid_argument("config key '" + key + "': expected an integer");
  return static_cast<long long>(x);
}

std::size_t to_count(const std::string& key, const std::string& v) {
  const long long x = to_integer(key, v);
  if (x < 0) throw std::invalid_argument("config key '" + key + "': must be non-negative");
  return static_cast<std::size_t>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (double x : to_list(key, v)) {
    if (x != std::floor(x)) throw std::invalid_argument("config key '" + key + "': expected integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

std::string fmt_double(double x) {
  // Shortest of 15 or 17 significant digits that reads back exactly.
  for (int digits : {15, 17}) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    if (digits == 17 || std::stod(os.str()) == x) return os.str();
  }
  return {};
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (const T& x : v) {
    if (!s.empty()) s += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      s += fmt_double(x);
    } else {
      s += std::to_string(x);
    }
  }
  return s;
}

using Setter = void (*)(ScenarioConfig&, const std::string& key, const std::string& value);
struct KeyHandler {
  const char* section;
  const char* key;
  Setter set;
};

// clang-format off
const KeyHandler kHandlers[] = {
  {"run", "command", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.command = parse_command(v); }},
  {"run", "scenario", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.scenario = parse_scenario(v); }},
  {"run", "preset", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.preset = v; }},
  {"run", "scan_variable", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.scan_variable = v; }},
  {"run", "scan_values", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.scan_values = to_list(k, v); }},
  {"run", "sizes", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.sizes = to_int_list(k, v); }},
  {"run", "n_realizations", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.n_realizations = static_cast<int>(to_integer(k, v)); }},
  {"run", "base_seed", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.base_seed = to_count(k, v); }},
  {"run", "max_dim", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.max_dim = to_count(k, v); }},
  {"run", "max_memory_gb", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.max_memory_gb = to_double(k, v); }},
  {"run", "output_dir", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }},

  {"chain", "B", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chain.B = to_double(k, v); }},
  {"chain", "B_x_bath", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chain.B_x_bath = to_double(k, v); }},
  {"chain", "J_x", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chain.J_x = to_double(k, v); }},
  {"chain", "J_z_sb", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chain.J_z_sb = to_double(k, v); }},
  {"chain", "J_x_sb", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chain.J_x_sb = to_double(k, v); }},
  {"chain", "r", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chain.r = static_cast<int>(to_integer(k, v)); }},
  {"chain", "W", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chain.W = to_double(k, v); }},

  {"pxp", "B", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.pxp.B = to_double(k, v); }},
  {"pxp", "probe_site", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.pxp.probe_site = static_cast<int>(to_integer(k, v)); }},
  {"pxp", "mode", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.pxp_mode = value_of(kPxpNames, v, "pxp mode"); }},
  {"pxp", "central_probe", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.pxp_central_probe = to_bool(k, v); }},

  {"initial", "kind", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.initial.kind = value_of(kInitialNames, v, "initial state kind"); }},
  {"initial", "bath_energy_fraction", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.initial.bath_energy_fraction = to_double(k, v); }},
  {"initial", "alpha0", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.initial.alpha0 = to_count(k, v); }},
  {"initial", "reference", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.initial.reference = value_of(kReferenceNames, v, "reference Hamiltonian"); }},
  {"initial", "count", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.initial.count = to_count(k, v); }},
  {"initial", "seed", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.initial.seed = to_count(k, v); }},
  {"initial", "project_probe_up", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.initial.project_probe_up = to_bool(k, v); }},
  {"initial", "probe_site", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.initial.probe_site = static_cast<int>(to_integer(k, v)); }},

  {"grid", "kind", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.grid.kind = value_of(kGridNames, v, "grid kind"); }},
  {"grid", "t_min", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.grid.t_min = to_double(k, v); }},
  {"grid", "t_max", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.grid.t_max = to_double(k, v); }},
  {"grid", "n", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.grid.n = to_count(k, v); }},
  {"grid", "heisenberg_multiple", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.grid.heisenberg_multiple = to_double(k, v); }},

  {"levels", "window_lo", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.spacing.window.lo = to_double(k, v); }},
  {"levels", "window_hi", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.spacing.window.hi = to_double(k, v); }},
  {"levels", "unfolding_levels", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.spacing.unfolding_levels = static_cast<int>(to_integer(k, v)); }},
  {"levels", "bins", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.spacing.bins = static_cast<int>(to_integer(k, v)); }},
  {"levels", "s_max", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.spacing.s_max = to_double(k, v); }},
  {"levels", "degeneracy_tol", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.spacing.degeneracy_tol = to_double(k, v); }},

  {"entropy", "sites", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.entropy_sites = to_int_list(k, v); }},

  {"flucts", "mode", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.fluct_mode = value_of(kFluctNames, v, "fluctuation mode"); }},
  {"flucts", "numeric", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.numeric_fluctuations = to_bool(k, v); }},
  {"flucts", "horizon", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.fluct.horizon = to_double(k, v); }},
  {"flucts", "n_samples", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.fluct.n_samples = to_count(k, v); }},
  {"flucts", "variance_mode", [](ScenarioConfig& c, const std::string&, const std::string& v) { c.variance.mode = value_of(kVarianceNames, v, "variance mode"); }},
  {"flucts", "shell_half_width", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.variance.shell_half_width = to_double(k, v); }},
  {"flucts", "min_shell_states", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.variance.min_shell_states = to_count(k, v); }},
  {"flucts", "decay_points", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.decay_points = to_count(k, v); }},
  {"flucts", "decay_t0", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.decay_t0 = to_double(k, v); }},
  {"flucts", "chi", [](ScenarioConfig& c, const std::string& k, const std::string& v) { c.chi = to_double(k, v); }},
};
// clang-format on

ScenarioConfig base_chain(Command cmd, Scenario sc) {
  ScenarioConfig c;
  c.command = cmd;
  c.scenario = sc;
  c.chain.B = 0.01;
  c.chain.B_x_bath = 0.3;
  c.chain.J_z_sb = 0.2;
  c.chain.J_x = 1.0;
  c.chain.J_x_sb = 0.4;
  return c;
}

}  // namespace

std::string to_string(Scenario s) { return name_of(kScenarioNames, s); }
std::string to_string(Command c) { return name_of(kCommandNames, c); }
Scenario parse_scenario(const std::string& s) { return value_of(kScenarioNames, s, "scenario"); }
Command parse_command(const std::string& s) { return value_of(kCommandNames, s, "command"); }

void InitialStateSpec::validate() const {
  if (!(bath_energy_fraction >= 0.0 && bath_energy_fraction <= 1.0)) {
    throw std::invalid_argument("initial.bath_energy_fraction must lie in [0, 1]");
  }
  if (kind == InitialKind::RandomEigenSuperposition && count < 1) {
    throw std::invalid_argument("initial.count must be >= 1");
  }
}

void ScenarioConfig::validate() const {
  if (n_realizations < 1) throw std::invalid_argument("n_realizations must be >= 1");
  if (scan_values.empty()) throw std::invalid_argument("scan_values must be nonempty");
  if (sizes.empty()) throw std::invalid_argument("sizes must be nonempty");
  if (!kScanVariables.count(scan_variable)) {
    throw std::invalid_argument("unknown scan_variable '" + scan_variable + "'");
  }
  const bool pxp_run = command == Command::Pxp;
  if (pxp_run != (scenario == Scenario::PXPScars)) {
    throw std::invalid_argument("the pxp command and the pxp scenario go together");
  }
  if (pxp_run && (scan_variable == "W" || scan_variable == "J_x_sb" || scan_variable == "J_z_sb")) {
    throw std::invalid_argument("scan_variable '" + scan_variable + "' does not apply to PXP");
  }
  if (grid.kind != GridKind::Auto) {
    if (grid.n < 2 || !(grid.t_max > grid.t_min) || grid.t_min < 0.0) {
      throw std::invalid_argument("grid needs n >= 2 and 0 <= t_min < t_max");
    }
    if (grid.kind == GridKind::Log && !(grid.t_min > 0.0)) {
      throw std::invalid_argument("log grid needs t_min > 0");
    }
  } else if (grid.n < 2) {
    throw std::invalid_argument("grid.n must be >= 2");
  }
  if (decay_points < 20) throw std::invalid_argument("flucts.decay_points must be >= 20");
  if (!(decay_t0 > 0.0)) throw std::invalid_argument("flucts.decay_t0 must be positive");
  if (!(chi > 0.0)) throw std::invalid_argument("flucts.chi must be positive");
  if (entropy_sites.empty()) throw std::invalid_argument("entropy.sites must be nonempty");
  initial.validate();
  for (int n : sizes) {
    for (double v : scan_values) {
      const TaskKey key{n, v, 0, base_seed};
      if (pxp_run) {
        pxp_params(*this, key).validate();
      } else {
        chain_params(*this, key).validate();
      }
    }
  }
}

std::vector<std::string> preset_names() {
  return {"fig1a", "fig1b", "fig1c", "fig1d", "fig1f", "fig2a", "fig2b",
          "fig2c", "fig3a", "fig3b", "fig3c", "fig4"};
}

std::string default_preset(Command c) {
  switch (c) {
    case Command::Levels: return "fig1a";
    case Command::Entropy: return "fig1c";
    case Command::Dos: return "fig1d";
    case Command::Qfi: return "fig2a";
    case Command::Flucts: return "fig3a";
    case Command::Pxp: return "fig2c";
  }
  throw std::logic_error("unknown command");
}

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig c;
  if (name == "fig1a") {
    c = base_chain(Command::Levels, Scenario::IntegrableTransition);
    c.sizes = {13};
    c.scan_variable = "J_x_sb";
    c.scan_values = {0.001, 0.4};
  } else if (name == "fig1b") {
    c = base_chain(Command::Levels, Scenario::MBL);
    c.sizes = {10};
    c.scan_variable = "W";
    c.scan_values = {0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0};
    c.n_realizations = 30;
  } else if (name == "fig1c") {
    c = base_chain(Command::Entropy, Scenario::MBL);
    c.sizes = {11};
    c.scan_variable = "W";
    c.scan_values = {0.5, 2.0, 5.0};
    c.n_realizations = 30;
    c.initial.kind = InitialKind::EigenstateIndex;
    c.initial.alpha0 = 1000;
    c.grid = {GridKind::Log, 0.1, 1e4, 200, 4.0};
  } else if (name == "fig1d") {
    c = base_chain(Command::Dos, Scenario::MBL);
    c.sizes = {11};
    c.scan_variable = "W";
    c.scan_values = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    c.n_realizations = 30;
  } else if (name == "fig1f" || name == "fig2c") {
    c.command = Command::Pxp;
    c.scenario = Scenario::PXPScars;
    c.sizes = {16};
    c.pxp.B = 0.4;
    c.pxp.probe_site = 1;
    c.pxp_mode = PxpMode::Scars;
    c.pxp_central_probe = false;
    c.initial.kind = InitialKind::RandomEigenSuperposition;
    c.initial.count = 100;
    c.grid = {GridKind::Auto, 0.0, 0.0, 400, 4.0};
  } else if (name == "fig2a") {
    c = base_chain(Command::Qfi, Scenario::IntegrableTransition);
    c.sizes = {11};
    c.scan_variable = "J_x_sb";
    c.scan_values = {0.4};
    c.initial.kind = InitialKind::ProbeUpX_BathEigenstate;
  } else if (name == "fig2b") {
    c = base_chain(Command::Qfi, Scenario::MBL);
    c.sizes = {13};
    c.scan_variable = "W";
    c.scan_values = {0.5, 1.0, 2.0, 3.0, 5.0};
    c.n_realizations = 30;
    c.initial.kind = InitialKind::EigenstateIndex;
    c.initial.alpha0 = 5500;
  } else if (name == "fig3a") {
    c = base_chain(Command::Flucts, Scenario::IntegrableTransition);
    c.sizes = {10, 11, 12, 13};
    c.scan_variable = "J_x_sb";
    c.scan_values = {0.01, 0.4};
    c.initial.kind = InitialKind::ProbeUpZ_BathEigenstate;
  } else if (name == "fig3b") {
    c = base_chain(Command::Flucts, Scenario::MBL);
    c.sizes = {12};
    c.scan_variable = "W";
    c.scan_values = {0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
    c.n_realizations = 30;
    c.initial.kind = InitialKind::ProbeUpZ_BathEigenstate;
  } else if (name == "fig4") {
    c = base_chain(Command::Flucts, Scenario::MBL);
    c.sizes = {9, 10, 11, 12};
    c.scan_variable = "W";
    c.scan_values = {0.5, 5.0};
    c.n_realizations = 10;
    c.initial.kind = InitialKind::ProbeUpZ_BathEigenstate;
  } else if (name == "fig3c") {
    c.command = Command::Pxp;
    c.scenario = Scenario::PXPScars;
    c.sizes = {14, 16, 18, 20, 22};
    c.pxp.B = 0.0;
    c.pxp_mode = PxpMode::FDT;
    c.pxp_central_probe = true;
    c.initial.kind = InitialKind::RandomEigenSuperposition;
    c.initial.count = 200;
    c.initial.project_probe_up = true;
  } else {
    std::string names;
    for (const auto& n : preset_names()) names += " " + n;
    throw std::invalid_argument("unknown preset '" + name + "'; available:" + names);
  }
  c.preset = name;
  c.output_dir = "out/" + name;
  return c;
}

ScenarioConfig parse_config(const std::string& text, ScenarioConfig base) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }

  // A preset named in the file replaces the base before the other keys apply.
  if (auto run = tree.get_child_optional("run")) {
    if (auto name = run->get_optional<std::string>("preset")) {
      if (*name != base.preset) base = preset(*name);
    }
  }

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw std::invalid_argument("config key '" + section + "' must be inside a section");
    }
    bool section_known = false;
    for (const auto& h : kHandlers) section_known |= section == h.section;
    if (!section_known) throw std::invalid_argument("unknown config section [" + section + "]");
    for (const auto& [key, node] : body) {
      const KeyHandler* handler = nullptr;
      for (const auto& h : kHandlers) {
        if (section == h.section && key == h.key) handler = &h;
      }
      if (!handler) throw std::invalid_argument("unknown config key '" + key + "' in [" + section + "]");
      handler->set(base, section + "." + key, trim(node.data()));
    }
  }
  base.validate();
  return base;
}

ScenarioConfig load_config(const std::filesystem::path& path, ScenarioConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string dump_config(const ScenarioConfig& c) {
  std::ostringstream os;
  os << "[run]\n"
     << "command = " << to_string(c.command) << "\n"
     << "scenario = " << to_string(c.scenario) << "\n";
  if (!c.preset.empty()) os << "preset = " << c.preset << "\n";
  os << "scan_variable = " << c.scan_variable << "\n"
     << "scan_values = " << join(c.scan_values) << "\n"
     << "sizes = " << join(c.sizes) << "\n"
     << "n_realizations = " << c.n_realizations << "\n"
     << "base_seed = " << c.base_seed << "\n"
     << "max_dim = " << c.max_dim << "\n"
     << "max_memory_gb = " << fmt_double(c.max_memory_gb) << "\n"
     << "output_dir = " << c.output_dir.string() << "\n\n"
     << "[chain]\n"
     << "B = " << fmt_double(c.chain.B) << "\n"
     << "B_x_bath = " << fmt_double(c.chain.B_x_bath) << "\n"
     << "J_x = " << fmt_double(c.chain.J_x) << "\n"
     << "J_z_sb = " << fmt_double(c.chain.J_z_sb) << "\n"
     << "J_x_sb = " << fmt_double(c.chain.J_x_sb) << "\n"
     << "r = " << c.chain.r << "\n"
     << "W = " << fmt_double(c.chain.W) << "\n\n"
     << "[pxp]\n"
     << "B = " << fmt_double(c.pxp.B) << "\n"
     << "probe_site = " << c.pxp.probe_site << "\n"
     << "mode = " << name_of(kPxpNames, c.pxp_mode) << "\n"
     << "central_probe = " << (c.pxp_central_probe ? "true" : "false") << "\n\n"
     << "[initial]\n"
     << "kind = " << name_of(kInitialNames, c.initial.kind) << "\n"
     << "bath_energy_fraction = " << fmt_double(c.initial.bath_energy_fraction) << "\n"
     << "alpha0 = " << c.initial.alpha0 << "\n"
     << "reference = " << name_of(kReferenceNames, c.initial.reference) << "\n"
     << "count = " << c.initial.count << "\n"
     << "seed = " << c.initial.seed << "\n"
     << "project_probe_up = " << (c.initial.project_probe_up ? "true" : "false") << "\n"
     << "probe_site = " << c.initial.probe_site << "\n\n"
     << "[grid]\n"
     << "kind = " << name_of(kGridNames, c.grid.kind) << "\n"
     << "t_min = " << fmt_double(c.grid.t_min) << "\n"
     << "t_max = " << fmt_double(c.grid.t_max) << "\n"
     << "n = " << c.grid.n << "\n"
     << "heisenberg_multiple = " << fmt_double(c.grid.heisenberg_multiple) << "\n\n"
     << "[levels]\n"
     << "window_lo = " << fmt_double(c.spacing.window.lo) << "\n"
     << "window_hi = " << fmt_double(c.spacing.window.hi) << "\n"
     << "unfolding_levels = " << c.spacing.unfolding_levels << "\n"
     << "bins = " << c.spacing.bins << "\n"
     << "s_max = " << fmt_double(c.spacing.s_max) << "\n"
     << "degeneracy_tol = " << fmt_double(c.spacing.degeneracy_tol) << "\n\n"
     << "[entropy]\n"
     << "sites = " << join(c.entropy_sites) << "\n\n"
     << "[flucts]\n"
     << "mode = " << name_of(kFluctNames, c.fluct_mode) << "\n"
     << "numeric = " << (c.numeric_fluctuations ? "true" : "false") << "\n"
     << "horizon = " << fmt_double(c.fluct.horizon) << "\n"
     << "n_samples = " << c.fluct.n_samples << "\n"
     << "variance_mode = " << name_of(kVarianceNames, c.variance.mode) << "\n";
  if (c.variance.shell_half_width) os << "shell_half_width = " << fmt_double(*c.variance.shell_half_width) << "\n";
  os << "min_shell_states = " << c.variance.min_shell_states << "\n"
     << "decay_points = " << c.decay_points << "\n"
     << "decay_t0 = " << fmt_double(c.decay_t0) << "\n"
     << "chi = " << fmt_double(c.chi) << "\n";
  return os.str();
}

std::vector<TaskKey> expand_tasks(const ScenarioConfig& cfg) {
  std::vector<TaskKey> tasks;
  for (int n : cfg.sizes) {
    for (double v : cfg.scan_values) {
      for (int r = 0; r < cfg.n_realizations; ++r) {
        tasks.push_back({n, v, r, cfg.base_seed + static_cast<std::uint64_t>(r)});
      }
    }
  }
  return tasks;
}

SpinChainParams chain_params(const ScenarioConfig& cfg, const TaskKey& key) {
  SpinChainParams p = cfg.chain;
  p.N = key.N;
  p.disorder_seed = key.seed;
  if (cfg.scan_variable == "W") p.W = key.value;
  if (cfg.scan_variable == "J_x_sb") p.J_x_sb = key.value;
  if (cfg.scan_variable == "J_z_sb") p.J_z_sb = key.value;
  if (cfg.scan_variable == "B") p.B = key.value;
  return p;
}

PXPParams pxp_params(const ScenarioConfig& cfg, const TaskKey& key) {
  PXPParams p = cfg.pxp;
  p.N = key.N;
  if (cfg.scan_variable == "B") p.B = key.value;
  if (cfg.pxp_mode == PxpMode::FDT && cfg.pxp_central_probe) p.probe_site = (key.N + 1) / 2;
  return p;
}

}  // namespace ergoprobe
