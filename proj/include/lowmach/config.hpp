#pragma once

// Sectioned key/value experiment configuration (INI syntax, read with
// boost::property_tree). Every key has a default; unknown keys are rejected so
// typos do not silently fall back to defaults.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/nsf.hpp"
#include "lowmach/ob.hpp"
#include "lowmach/scenario.hpp"

namespace lowmach {

struct GridSettings {
  double r1 = 0.5, r2 = 1.0;
  int nr = 64, nphi = 128;
};

struct ExperimentConfig {
  GridSettings grid;

  // [thermo]; transport scales are small so the diffusive limit does not
  // dominate the explicit step on the 64 x 128 grid
  std::string gas = "default";
  double p_inf = 1.0, a = 1.0;
  double mu0 = 0.005, eta0 = 0.005, kappa0 = 0.02, beta = 7.0;
  double rho_bar = 1.0, theta_bar = 1.0;

  // [scaling]
  double epsilon = 0.2;
  double g0 = 0.5;  // G = -g0 / r, mean removed

  InitialProfile initial;

  // [boundary]: T_B = t_inner / t_outer on the rings plus outer_mode1 cos(phi) on the outer ring
  double t_inner = 0.25, t_outer = -0.25, outer_mode1 = 0.0;

  // [nsf]
  CflNumbers cfl{0.8, 0.5, 0.8};
  TimeScheme scheme = TimeScheme::ssprk3;
  bool well_balanced = true;

  // [ob]
  std::optional<double> lambda;
  bool nonlocal_bc = true;
  Theta0Form theta0_form = Theta0Form::entropy;
  double ob_cfl_convective = 0.5, ob_cfl_diffusive = 0.4;
  double ob_output_interval = 0.005;  // trajectory cadence used by the diagnostics

  // [output]
  double t_end = 1.0;
  double output_interval = 0.1;
  std::string out_dir = "out";
  bool checkpoints = true;

  // [sweep]
  std::vector<double> epsilons{0.4, 0.2, 0.1};
  double averaging_periods = 10.0;
  double k_lo = 0.5, k_hi = 2.0;   // essential set, relative to the reference state
  int random_tests = 0;            // extra seeded solenoidal test fields
  std::uint64_t seed = 1;

  ThermoModel model() const {
    ThermoModel m;
    if (gas == "default") m.P = default_gas(p_inf);
    else if (gas == "ideal") m.P = ideal_gas();
    else throw ConfigError("[thermo] gas: unknown structural function '" + gas + "'");
    m.p_inf = p_inf;
    m.a = a;
    m.mu0 = mu0;
    m.eta0 = eta0;
    m.kappa0 = kappa0;
    m.beta = beta;
    return m;
  }
  ReferenceState ref() const { return {rho_bar, theta_bar}; }
  GridPtr make_grid_ptr() const { return make_grid(grid.r1, grid.r2, grid.nr, grid.nphi); }
  EssentialSet essential_set() const { return EssentialSet::around(ref(), k_lo, k_hi); }
};

inline ScalarField build_G(const GridPtr& g, const ExperimentConfig& c) { return radial_potential(g, c.g0); }

inline BoundaryData build_T_B(const GridPtr& g, const ExperimentConfig& c) {
  auto b = radial_boundary(*g, c.t_inner, c.t_outer);
  for (int j = 0; j < g->nphi(); ++j) b.outer[j] += c.outer_mode1 * std::cos(g->phi(j));
  return b;
}

inline NSFConfig nsf_config(const ExperimentConfig& c, const GridPtr& g, double eps) {
  NSFConfig n;
  n.grid = g;
  n.model = c.model();
  n.ref = c.ref();
  n.epsilon = eps;
  n.G = build_G(g, c);
  n.T_B = build_T_B(g, c);
  n.init = make_initial(g, c.initial);
  n.cfl = c.cfl;
  n.scheme = c.scheme;
  n.T_end = c.t_end;
  n.output_interval = c.output_interval;
  n.well_balanced = c.well_balanced;
  return n;
}

inline OBConfig ob_config(const ExperimentConfig& c, const GridPtr& g) {
  OBConfig o;
  o.grid = g;
  o.model = c.model();
  o.ref = c.ref();
  o.G = build_G(g, c);
  o.T_B = build_T_B(g, c);
  auto d = make_initial(g, c.initial);
  o.R0 = d.rho0;
  o.T0 = d.theta0;
  o.u0 = d.u0;
  o.lambda = c.lambda;
  o.nonlocal_bc = c.nonlocal_bc;
  o.theta0_form = c.theta0_form;
  o.cfl_convective = c.ob_cfl_convective;
  o.cfl_diffusive = c.ob_cfl_diffusive;
  o.T_end = c.t_end;
  o.output_interval = c.ob_output_interval;
  return o;
}

namespace detail {

using boost::property_tree::ptree;

// shortest of 15 or 17 digits that reads back exactly
inline std::string fmt(double v) {
  for (int p : {15, 17}) {
    std::ostringstream os;
    os << std::setprecision(p) << v;
    if (p == 17 || std::stod(os.str()) == v) return os.str();
  }
  return {};
}

inline std::vector<double> parse_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  std::string tok;
  std::istringstream in(s);
  while (std::getline(in, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) continue;
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError(key + ": '" + tok + "' is not a number");
    }
  }
  return out;
}

// Reads typed values and remembers which keys were consumed.
class Reader {
 public:
  explicit Reader(const ptree& t) : t_(t) {}

  template <class T>
  void get(const std::string& path, T& value) {
    seen_.insert(path);
    auto node = t_.get_optional<std::string>(path);
    if (!node) return;
    std::istringstream in(*node);
    T v{};
    in >> v;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError("[" + section(path) + "] " + key(path) +
                                                                ": cannot parse '" + *node + "'");
    value = v;
  }
  void get(const std::string& path, std::string& value) {
    seen_.insert(path);
    if (auto node = t_.get_optional<std::string>(path)) value = *node;
  }
  void get(const std::string& path, bool& value) {
    seen_.insert(path);
    auto node = t_.get_optional<std::string>(path);
    if (!node) return;
    if (*node == "true" || *node == "1" || *node == "yes") value = true;
    else if (*node == "false" || *node == "0" || *node == "no") value = false;
    else throw ConfigError("[" + section(path) + "] " + key(path) + ": expected true or false, got '" + *node + "'");
  }
  std::optional<std::string> raw(const std::string& path) {
    seen_.insert(path);
    auto node = t_.get_optional<std::string>(path);
    if (!node) return std::nullopt;
    return *node;
  }

  void reject_unknown() const {
    std::vector<std::string> unknown;
    for (const auto& [sec, body] : t_) {
      if (body.empty() && !body.data().empty()) {
        unknown.push_back(sec + " (outside any section)");
        continue;
      }
      for (const auto& [k, v] : body)
        if (!seen_.count(sec + "." + k)) unknown.push_back("[" + sec + "] " + k);
    }
    if (!unknown.empty()) {
      std::string msg = "unknown configuration keys:";
      for (const auto& u : unknown) msg += " " + u + ";";
      throw ConfigError(msg);
    }
  }

  static std::string section(const std::string& p) { return p.substr(0, p.find('.')); }
  static std::string key(const std::string& p) { return p.substr(p.find('.') + 1); }

 private:
  const ptree& t_;
  std::set<std::string> seen_;
};

}  // namespace detail

// Structural checks; returns one message per violation (empty when valid).
inline std::vector<std::string> structural_violations(const ExperimentConfig& c) {
  std::vector<std::string> v;
  auto add = [&](const std::string& s) { v.push_back(s); };
  if (!(c.grid.r1 > 0.0) || !(c.grid.r2 > c.grid.r1)) add("[grid] r1, r2: need 0 < r1 < r2");
  if (c.grid.nr < 4) add("[grid] nr: need at least 4 radial intervals");
  if (c.grid.nphi < 8 || c.grid.nphi % 2) add("[grid] nphi: need an even number of at least 8 angles");
  if (c.gas != "default" && c.gas != "ideal") add("[thermo] gas: expected default or ideal");
  if (!(c.p_inf > 0.0)) add("[thermo] p_inf must be positive (pressure growth hypothesis)");
  if (!(c.a > 0.0)) add("[thermo] a must be positive (radiation pressure)");
  if (!(c.beta > 6.0)) add("[thermo] beta = " + detail::fmt(c.beta) + ": beta must exceed 6 (conductivity growth hypothesis)");
  if (!(c.mu0 > 0.0)) add("[thermo] mu0 must be positive (viscosity lower bound hypothesis)");
  if (!(c.kappa0 > 0.0)) add("[thermo] kappa0 must be positive (conductivity lower bound hypothesis)");
  if (!(c.eta0 > 0.0))
    add("[thermo] eta0 must be positive: the vanishing bulk-viscosity case (conformal rigid motions) is not implemented");
  if (!(c.rho_bar > 0.0) || !(c.theta_bar > 0.0)) add("[thermo] rho_bar, theta_bar must be positive");
  if (!(c.epsilon > 0.0 && c.epsilon <= 1.0)) add("[scaling] epsilon must lie in (0, 1]");
  if (c.lambda && !(*c.lambda >= 0.0 && *c.lambda < 1.0)) add("[ob] lambda must lie in [0, 1)");
  if (c.initial.potential_radial < 0) add("[initial] potential_radial must be >= 0");
  if (!(c.t_end >= 0.0)) add("[output] t_end must be nonnegative");
  if (!(c.output_interval > 0.0)) add("[output] interval must be positive");
  if (!(c.ob_output_interval > 0.0) || c.ob_output_interval > c.output_interval)
    add("[ob] output_interval must be positive and not exceed [output] interval");
  if (!(c.cfl.acoustic > 0 && c.cfl.acoustic <= 1.0) || !(c.cfl.convective > 0 && c.cfl.convective <= 1.0) ||
      !(c.cfl.diffusive > 0 && c.cfl.diffusive <= 1.0))
    add("[nsf] cfl numbers must lie in (0, 1]");
  for (size_t k = 0; k < c.epsilons.size(); ++k) {
    if (!(c.epsilons[k] > 0.0 && c.epsilons[k] <= 1.0)) add("[sweep] epsilons: every value must lie in (0, 1]");
    if (k > 0 && !(c.epsilons[k] < c.epsilons[k - 1])) add("[sweep] epsilons must be strictly decreasing");
  }
  if (!(c.averaging_periods > 0.0)) add("[sweep] averaging_periods must be positive");
  if (!(c.k_lo > 0.0 && c.k_lo < 1.0 && c.k_hi > 1.0))
    add("[sweep] k_lo, k_hi: need 0 < k_lo < 1 < k_hi so the reference state is interior");
  if (c.random_tests < 0) add("[sweep] random_tests must be >= 0");
  if (!v.empty()) return v;

  // field-level checks on the actual grid
  try {
    const auto model = c.model();
    const auto co = coefficients(model, c.ref());
    if (!(co.lambda > 0.0 && co.lambda < 1.0))
      add("[thermo] reference state gives lambda = " + detail::fmt(co.lambda) + " outside (0, 1)");
    auto g = c.make_grid_ptr();
    auto G = build_G(g, c);
    const double area = g->area();
    if (std::abs(integrate(G)) > 1e-12 * area * std::max(1.0, G.v.cwiseAbs().maxCoeff()))
      add("[scaling] g0: potential must have zero mean");
    auto d = make_initial(g, c.initial);
    if (std::abs(integrate(d.rho0)) > 1e-12 * area * std::max(1.0, d.rho0.v.cwiseAbs().maxCoeff()))
      add("[initial] density perturbation must have zero mean");
    if (std::abs(integrate(d.theta0)) > 1e-12 * area * std::max(1.0, d.theta0.v.cwiseAbs().maxCoeff()))
      add("[initial] temperature perturbation must have zero mean");
    auto T_ext = harmonic_extension(g, build_T_B(g, c));
    const double coc = check_coc(T_ext, rigid_motion_basis(g, model.eta0));
    if (coc > 1e-8)
      add("[boundary] temperature data break the coercivity hypothesis: |grad T_B . w|_2 = " + detail::fmt(coc) +
          " for the rigid rotation w (tolerance 1e-8)");
  } catch (const Error& e) {
    add(std::string("structural check failed: ") + e.what());
  }
  return v;
}

// Parses, fills defaults and runs the structural checks. Throws ConfigError
// listing every violation.
inline ExperimentConfig validate_config(const std::string& text) {
  boost::property_tree::ptree t;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig c;
  detail::Reader r(t);
  r.get("grid.r1", c.grid.r1);
  r.get("grid.r2", c.grid.r2);
  r.get("grid.nr", c.grid.nr);
  r.get("grid.nphi", c.grid.nphi);
  r.get("thermo.gas", c.gas);
  r.get("thermo.p_inf", c.p_inf);
  r.get("thermo.a", c.a);
  r.get("thermo.mu0", c.mu0);
  r.get("thermo.eta0", c.eta0);
  r.get("thermo.kappa0", c.kappa0);
  r.get("thermo.beta", c.beta);
  r.get("thermo.rho_bar", c.rho_bar);
  r.get("thermo.theta_bar", c.theta_bar);
  r.get("scaling.epsilon", c.epsilon);
  r.get("scaling.g0", c.g0);
  r.get("initial.rho_mode1", c.initial.rho_mode1);
  r.get("initial.theta_bump", c.initial.theta_bump);
  r.get("initial.rotation", c.initial.rotation);
  r.get("initial.vortex", c.initial.vortex);
  r.get("initial.potential", c.initial.potential);
  r.get("initial.potential_radial", c.initial.potential_radial);
  r.get("boundary.t_inner", c.t_inner);
  r.get("boundary.t_outer", c.t_outer);
  r.get("boundary.outer_mode1", c.outer_mode1);
  r.get("nsf.cfl_acoustic", c.cfl.acoustic);
  r.get("nsf.cfl_convective", c.cfl.convective);
  r.get("nsf.cfl_diffusive", c.cfl.diffusive);
  if (auto s = r.raw("nsf.scheme")) c.scheme = parse_time_scheme(*s);
  r.get("nsf.well_balanced", c.well_balanced);
  if (auto s = r.raw("ob.lambda")) {
    if (*s != "thermo") {
      double l = 0;
      r.get("ob.lambda", l);
      c.lambda = l;
    }
  }
  r.get("ob.nonlocal_bc", c.nonlocal_bc);
  if (auto s = r.raw("ob.theta0_form")) c.theta0_form = parse_theta0_form(*s);
  r.get("ob.cfl_convective", c.ob_cfl_convective);
  r.get("ob.cfl_diffusive", c.ob_cfl_diffusive);
  r.get("ob.output_interval", c.ob_output_interval);
  r.get("output.t_end", c.t_end);
  r.get("output.interval", c.output_interval);
  r.get("output.dir", c.out_dir);
  r.get("output.checkpoints", c.checkpoints);
  if (auto s = r.raw("sweep.epsilons")) c.epsilons = detail::parse_list("[sweep] epsilons", *s);
  r.get("sweep.averaging_periods", c.averaging_periods);
  r.get("sweep.k_lo", c.k_lo);
  r.get("sweep.k_hi", c.k_hi);
  r.get("sweep.random_tests", c.random_tests);
  r.get("sweep.seed", c.seed);
  r.reject_unknown();

  auto bad = structural_violations(c);
  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return validate_config(ss.str());
}

// Effective configuration in the input syntax, every key present.
inline std::string echo_config(const ExperimentConfig& c) {
  using detail::fmt;
  std::ostringstream o;
  auto b = [](bool x) { return x ? "true" : "false"; };
  o << "[grid]\nr1 = " << fmt(c.grid.r1) << "\nr2 = " << fmt(c.grid.r2) << "\nnr = " << c.grid.nr
    << "\nnphi = " << c.grid.nphi << "\n\n";
  o << "[thermo]\ngas = " << c.gas << "\np_inf = " << fmt(c.p_inf) << "\na = " << fmt(c.a) << "\nmu0 = " << fmt(c.mu0)
    << "\neta0 = " << fmt(c.eta0) << "\nkappa0 = " << fmt(c.kappa0) << "\nbeta = " << fmt(c.beta)
    << "\nrho_bar = " << fmt(c.rho_bar) << "\ntheta_bar = " << fmt(c.theta_bar) << "\n\n";
  o << "[scaling]\nepsilon = " << fmt(c.epsilon) << "\ng0 = " << fmt(c.g0) << "\n\n";
  o << "[initial]\nrho_mode1 = " << fmt(c.initial.rho_mode1) << "\ntheta_bump = " << fmt(c.initial.theta_bump)
    << "\nrotation = " << fmt(c.initial.rotation) << "\nvortex = " << fmt(c.initial.vortex)
    << "\npotential = " << fmt(c.initial.potential) << "\npotential_radial = " << c.initial.potential_radial << "\n\n";
  o << "[boundary]\nt_inner = " << fmt(c.t_inner) << "\nt_outer = " << fmt(c.t_outer)
    << "\nouter_mode1 = " << fmt(c.outer_mode1) << "\n\n";
  o << "[nsf]\ncfl_acoustic = " << fmt(c.cfl.acoustic) << "\ncfl_convective = " << fmt(c.cfl.convective)
    << "\ncfl_diffusive = " << fmt(c.cfl.diffusive)
    << "\nscheme = " << (c.scheme == TimeScheme::ssprk3 ? "ssprk3" : "ssprk2")
    << "\nwell_balanced = " << b(c.well_balanced) << "\n\n";
  o << "[ob]\nlambda = " << (c.lambda ? fmt(*c.lambda) : std::string("thermo")) << "\nnonlocal_bc = " << b(c.nonlocal_bc)
    << "\ntheta0_form = " << to_string(c.theta0_form) << "\ncfl_convective = " << fmt(c.ob_cfl_convective)
    << "\ncfl_diffusive = " << fmt(c.ob_cfl_diffusive) << "\noutput_interval = " << fmt(c.ob_output_interval) << "\n\n";
  o << "[output]\nt_end = " << fmt(c.t_end) << "\ninterval = " << fmt(c.output_interval) << "\ndir = " << c.out_dir
    << "\ncheckpoints = " << b(c.checkpoints) << "\n\n";
  o << "[sweep]\nepsilons = ";
  for (size_t k = 0; k < c.epsilons.size(); ++k) o << (k ? ", " : "") << fmt(c.epsilons[k]);
  o << "\naveraging_periods = " << fmt(c.averaging_periods) << "\nk_lo = " << fmt(c.k_lo) << "\nk_hi = " << fmt(c.k_hi)
    << "\nrandom_tests = " << c.random_tests << "\nseed = " << c.seed << "\n";
  return o.str();
}

}  // namespace lowmach
