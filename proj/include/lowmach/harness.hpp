#pragma once

// epsilon sweep: one OB reference run, then for each epsilon an NSF run with
// every diagnostic evaluated along the trajectory. Failures are recorded per
// epsilon and the sweep moves on.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lowmach/config.hpp"
#include "lowmach/diagnostics.hpp"

namespace lowmach {

inline constexpr int kReportSchemaVersion = 1;

struct SweepRow {
  double epsilon = 0;
  bool ok = false;
  std::string error;
  long steps = 0;
  double mass_drift = 0;         // |M(T) - M(0)| / M(0), max over outputs
  double min_dissipation = 0;    // min over steps and nodes of the dissipation field
  double rho_min = 0, rho_max = 0, theta_min = 0, theta_max = 0;
  RunDiagnosticsResult diag;
};

struct SweepReport {
  int schema_version = kReportSchemaVersion;
  std::vector<SweepRow> rows;
  std::string ob_error;                // non-empty when the reference run failed
  double averaging_width = 0;
  std::vector<std::string> warnings;
  std::string effective_config;
};

// ---- trend assessment ----------------------------------------------------------------------

struct Trend {
  std::string name;
  std::vector<double> values;  // in sweep order (epsilon decreasing)
  bool monotone = false;       // strictly decreasing
  double ratio = 0;            // first / last
};

inline Trend make_trend(std::string name, std::vector<double> v) {
  Trend t{std::move(name), std::move(v), false, 0.0};
  if (t.values.size() < 2) return t;
  t.monotone = true;
  for (size_t k = 1; k < t.values.size(); ++k)
    if (!(t.values[k] < t.values[k - 1])) t.monotone = false;
  t.ratio = t.values.back() > 0 ? t.values.front() / t.values.back() : INFINITY;
  return t;
}

struct SweepAssessment {
  bool complete = false;                // every row ran
  std::vector<Trend> limit;             // rho, theta, u (averaged)
  Trend negative_control;               // unaveraged velocity error
  std::vector<Trend> convective;        // time-bumped A per test field
  std::vector<Trend> bounds;            // uniform-bound monitors
  bool limit_ok = false, convective_ok = false, negative_control_ok = false;
  bool bounds_ok = false;
  double min_ratio_required = 2.0;
};

inline bool bounded(const Trend& t) {
  if (t.values.empty()) return true;
  const double hi = *std::max_element(t.values.begin(), t.values.end());
  const double lo = *std::min_element(t.values.begin(), t.values.end());
  return (hi == 0.0) || (lo > 0.0 && hi / lo <= 2.0);
}

// Decrease: strictly monotone and first/last >= 2. Negative control: the
// unaveraged error must not show that decrease (last >= first / 2).
// Bounds: max/min <= 2 for every monitor; a monitor that is identically zero
// across the sweep (empty residual set) counts as bounded.
inline SweepAssessment assess(const SweepReport& rep) {
  SweepAssessment a;
  a.complete = !rep.rows.empty() && rep.ob_error.empty();
  for (const auto& r : rep.rows) a.complete = a.complete && r.ok;
  if (!a.complete) return a;
  auto collect = [&](auto f) {
    std::vector<double> v;
    for (const auto& r : rep.rows) v.push_back(f(r.diag));
    return v;
  };
  a.limit.push_back(make_trend("rho", collect([](const auto& d) { return d.limit.rho_avg; })));
  a.limit.push_back(make_trend("theta", collect([](const auto& d) { return d.limit.theta_avg; })));
  a.limit.push_back(make_trend("u", collect([](const auto& d) { return d.limit.u_avg; })));
  a.negative_control = make_trend("u_instantaneous", collect([](const auto& d) { return d.limit.u_inst_rms; }));
  const auto& names = rep.rows.front().diag.conv_tests;
  for (size_t k = 0; k < names.size(); ++k)
    a.convective.push_back(make_trend(names[k], collect([k](const auto& d) { return d.A_bump[k]; })));
  const auto bn = UniformBounds::names();
  for (size_t k = 0; k < bn.size(); ++k)
    a.bounds.push_back(make_trend(bn[k], collect([k](const auto& d) { return d.bounds.values()[k]; })));

  auto decreasing = [&](const Trend& t) { return t.monotone && t.ratio >= a.min_ratio_required; };
  a.limit_ok = std::all_of(a.limit.begin(), a.limit.end(), decreasing);
  a.convective_ok = !a.convective.empty() && std::all_of(a.convective.begin(), a.convective.end(), decreasing);
  a.negative_control_ok = a.negative_control.values.back() >= 0.5 * a.negative_control.values.front();
  a.bounds_ok = std::all_of(a.bounds.begin(), a.bounds.end(), bounded);
  return a;
}

// ---- running the sweep ---------------------------------------------------------------------

struct SweepOptions {
  std::ostream* log = nullptr;
  std::string checkpoint_dir;  // empty: no checkpoints
};

inline FieldBundle nsf_bundle(const FluidState& s) {
  FieldBundle b{s.rho.grid, {}, {}};
  b.add("rho", s.rho);
  b.add("m", s.m);
  b.add("theta", s.theta);
  return b;
}

inline FieldBundle ob_bundle(const OBState& s, double lambda) {
  FieldBundle b{s.U.grid, {}, {}};
  b.add("U", s.U);
  b.add("Theta", s.Theta);
  b.add("T", s.frak_T(lambda));
  b.add("R", s.R);
  b.add("Pi", s.Pi);
  return b;
}

inline std::string eps_tag(double eps) {
  std::ostringstream os;
  os << std::setprecision(6) << eps;
  return os.str();
}

inline SweepReport run_sweep(const ExperimentConfig& cfg, const SweepOptions& opt = {}) {
  SweepReport rep;
  rep.effective_config = echo_config(cfg);
  if (cfg.epsilons.empty()) return rep;
  auto log = [&](const std::string& s) {
    if (opt.log) *opt.log << s << std::endl;
  };
  namespace fs = std::filesystem;
  const auto g = cfg.make_grid_ptr();
  NeumannPoisson P(g);
  const auto model = cfg.model();
  const auto co = coefficients(model, cfg.ref());
  const auto mode = lowest_acoustic_mode(P);
  const double period0 = 2.0 * std::numbers::pi / acoustic_angular_frequency(mode.Lambda, co.omega, cfg.epsilons.front());
  rep.averaging_width = std::min(cfg.t_end, cfg.averaging_periods * period0);

  OBTrajectory traj;
  try {
    OBSolver ob(ob_config(cfg, g));
    traj = OBTrajectory(ob.coeffs().lambda);
    OBSolver::Observers oo;
    oo.on_output = [&](const OBState& s) { traj.push(s); };
    auto last = ob.run(oo);
    if (!opt.checkpoint_dir.empty())
      save_checkpoint(fs::path(opt.checkpoint_dir) / "ob_final.lmck", ob_bundle(last, ob.coeffs().lambda), last.t);
    log("ob reference: " + std::to_string(traj.size()) + " snapshots");
  } catch (const Error& e) {
    rep.ob_error = e.what();
    log(std::string("ob reference failed: ") + e.what());
  }

  const auto extra = random_solenoidal_tests(g, cfg.seed, cfg.random_tests);
  for (double eps : cfg.epsilons) {
    SweepRow row;
    row.epsilon = eps;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (!rep.ob_error.empty()) throw Error("no OB reference: " + rep.ob_error);
      NSFSolver nsf(nsf_config(cfg, g, eps));
      RunDiagnosticsOptions o;
      o.T = cfg.t_end;
      o.averaging_width = rep.averaging_width;
      o.acoustic_period = 2.0 * std::numbers::pi / acoustic_angular_frequency(mode.Lambda, co.omega, eps);
      o.K = cfg.essential_set();
      o.extra_tests = extra;
      RunDiagnostics rd(nsf, P, &traj, o);
      double m0 = 0;
      row.min_dissipation = INFINITY;
      row.rho_min = row.theta_min = INFINITY;
      auto track = [&](const FluidState& s) {
        row.rho_min = std::min(row.rho_min, s.rho.v.minCoeff());
        row.rho_max = std::max(row.rho_max, s.rho.v.maxCoeff());
        row.theta_min = std::min(row.theta_min, s.theta.v.minCoeff());
        row.theta_max = std::max(row.theta_max, s.theta.v.maxCoeff());
        row.min_dissipation = std::min(row.min_dissipation, nsf.dissipation(s).minCoeff());
      };
      NSFSolver::Observers obs;
      obs.on_step = [&](const FluidState& s, double) {
        rd.sample(s);
        track(s);
      };
      obs.on_output = [&](const FluidState& s) {
        if (s.t == 0.0) {
          m0 = nsf.mass(s);
          rd.sample(s);
          track(s);
        }
        row.mass_drift = std::max(row.mass_drift, std::abs(nsf.mass(s) - m0) / m0);
      };
      auto last = nsf.run(obs);
      row.steps = nsf.steps_taken();
      row.diag = rd.result();
      if (!row.diag.limit.warning.empty()) rep.warnings.push_back("eps " + eps_tag(eps) + ": " + row.diag.limit.warning);
      if (!opt.checkpoint_dir.empty())
        save_checkpoint(fs::path(opt.checkpoint_dir) / ("nsf_eps" + eps_tag(eps) + ".lmck"), nsf_bundle(last), last.t);
      row.ok = true;
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream os;
    os << "eps " << eps_tag(eps) << ": " << (row.ok ? "ok" : "FAILED: " + row.error) << ", " << row.steps
       << " steps, " << std::fixed << std::setprecision(1) << secs << " s";
    log(os.str());
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---- persistence ---------------------------------------------------------------------------

// Long format: epsilon, functional, test, value.
inline CsvTable sweep_table(const SweepReport& rep) {
  CsvTable t({"epsilon", "functional", "test", "value"});
  for (const auto& r : rep.rows) {
    if (!r.ok) continue;
    const auto& d = r.diag;
    auto put = [&](const std::string& f, const std::string& test, double v) { t.row_mixed({eps_tag(r.epsilon), f, test}, v); };
    put("limit_rho", "-", d.limit.rho_avg);
    put("limit_theta", "-", d.limit.theta_avg);
    put("limit_u", "-", d.limit.u_avg);
    put("u_instantaneous", "-", d.limit.u_inst_rms);
    put("rho_instantaneous", "-", d.limit.rho_inst_rms);
    for (size_t k = 0; k < d.conv_tests.size(); ++k) {
      put("A_bump", d.conv_tests[k], d.A_bump[k]);
      put("A", d.conv_tests[k], d.A[k]);
      put("D", d.conv_tests[k], d.D[k]);
    }
    for (const auto& w : d.wave) put(w.functional, w.test, w.value);
    const auto bn = UniformBounds::names();
    const auto bv = d.bounds.values();
    for (size_t k = 0; k < bn.size(); ++k) put("bound", bn[k], bv[k]);
    put("mass_drift", "-", r.mass_drift);
    put("min_dissipation", "-", r.min_dissipation);
    put("mass_pairing", "-", d.mass_pairing);
    put("rho_min", "-", r.rho_min);
    put("rho_max", "-", r.rho_max);
    put("steps", "-", double(r.steps));
  }
  return t;
}

inline nlohmann::ordered_json trend_json(const Trend& t) {
  return {{"name", t.name}, {"values", t.values}, {"monotone_decrease", t.monotone}, {"ratio_first_last", t.ratio}};
}

inline nlohmann::ordered_json sweep_json(const SweepReport& rep) {
  nlohmann::ordered_json j;
  j["schema_version"] = rep.schema_version;
  std::vector<double> eps;
  for (const auto& r : rep.rows) eps.push_back(r.epsilon);
  j["epsilons"] = eps;
  j["averaging_width"] = rep.averaging_width;
  j["ob_error"] = rep.ob_error;
  j["warnings"] = rep.warnings;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& r : rep.rows) {
    nlohmann::ordered_json x;
    x["epsilon"] = r.epsilon;
    x["ok"] = r.ok;
    x["error"] = r.error;
    x["steps"] = r.steps;
    x["mass_drift"] = r.ok ? r.mass_drift : 0.0;
    x["min_dissipation"] = r.ok ? r.min_dissipation : 0.0;
    rows.push_back(x);
  }
  j["rows"] = rows;
  auto a = assess(rep);
  nlohmann::ordered_json s;
  s["complete"] = a.complete;
  if (a.complete) {
    auto arr = [](const std::vector<Trend>& v) {
      auto o = nlohmann::ordered_json::array();
      for (const auto& t : v) o.push_back(trend_json(t));
      return o;
    };
    s["limit_error_norms"] = arr(a.limit);
    s["limit_errors_decrease"] = a.limit_ok;
    s["convective_A"] = arr(a.convective);
    s["convective_A_decrease"] = a.convective_ok;
    s["negative_control"] = trend_json(a.negative_control);
    s["negative_control_persists"] = a.negative_control_ok;
    s["uniform_bounds"] = arr(a.bounds);
    s["uniform_bounds_within_factor_2"] = a.bounds_ok;
  }
  j["summary"] = s;
  return j;
}

inline void write_sweep_report(const SweepReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  sweep_table(rep).write(dir / "sweep.csv");
  std::ofstream(dir / "sweep_summary.json") << sweep_json(rep).dump(2) << "\n";
  std::ofstream(dir / "effective_config.ini") << rep.effective_config;
}

}  // namespace lowmach
