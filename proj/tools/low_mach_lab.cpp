// low-mach-lab: command-line front end.
//
// Exit codes: 0 all structural checks passed, 1 a check or run failed,
// 2 bad configuration or usage.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <regex>

#include "lowmach/acceptance.hpp"
#include "lowmach/lowmach.hpp"

using namespace lowmach;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string checkpoints;  // diagnose only
};

ExperimentConfig load(const Options& o) {
  auto c = load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  return c;
}

void prepare_out(const ExperimentConfig& c) {
  fs::create_directories(c.out_dir);
  std::ofstream(fs::path(c.out_dir) / "effective_config.ini") << echo_config(c);
}

int report(const std::vector<CriterionResult>& rs) {
  bool ok = true;
  for (const auto& r : rs) {
    std::cout << format_criterion(r) << "\n";
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

int verify_thermo(const ExperimentConfig& c) {
  const auto m = c.model();
  const auto co = coefficients(m, c.ref());
  CsvTable t({"name", "value"});
  for (auto [k, v] : std::vector<std::pair<std::string, double>>{
           {"alpha", co.alpha}, {"c_p", co.c_p}, {"lambda", co.lambda}, {"k", co.lambda / (1 - co.lambda)},
           {"A", co.A}, {"omega", co.omega}})
    t.row_mixed({k}, v);
  t.write(fs::path(c.out_dir) / "coefficients.csv");
  return report({check_thermo_consistency(m), check_coefficients(m, c.ref())});
}

int run_static(const ExperimentConfig& c) {
  const auto g = c.make_grid_ptr();
  StaticProblem pb{g, c.model(), c.ref(), build_G(g, c), harmonic_extension(g, build_T_B(g, c)), c.epsilon};
  auto sol = solve_newton(pb);
  FieldBundle b{g, {}, {}};
  b.add("rho_tilde", sol.rho_tilde);
  b.add("first_order", sol.first_order);
  b.add("G", pb.G);
  b.add("T_ext", pb.T_ext);
  write_csv(fs::path(c.out_dir) / "static.csv", b);
  std::cout << "static state at eps " << c.epsilon << ": " << sol.iterations << " iterations, residual "
            << sol.optimality << ", mass defect " << sol.mean_defect << ", |rho - rho_bar|_inf / eps "
            << (sol.rho_tilde.v.array() - c.rho_bar).abs().maxCoeff() / c.epsilon << "\n";
  return sol.optimality <= tol::newton_residual && sol.mean_defect <= 1e-10 ? 0 : 1;
}

std::string snapshot_name(const std::string& stem, int k) {
  std::ostringstream os;
  os << stem << "_" << std::setw(4) << std::setfill('0') << k << ".csv";
  return os.str();
}

int run_nsf(const ExperimentConfig& c) {
  const auto g = c.make_grid_ptr();
  NSFSolver s(nsf_config(c, g, c.epsilon));
  const fs::path dir(c.out_dir);
  int k = 0;
  const double m0 = s.mass(s.init_state());
  double drift = 0, diss = INFINITY;
  NSFSolver::Observers obs;
  obs.on_step = [&](const FluidState& st, double) { diss = std::min(diss, s.dissipation(st).minCoeff()); };
  obs.on_output = [&](const FluidState& st) {
    write_csv(dir / snapshot_name("nsf", k++), nsf_bundle(st));
    drift = std::max(drift, std::abs(s.mass(st) - m0) / m0);
  };
  std::vector<TimeSeriesRow> rows;
  auto last = s.run(obs, &rows);
  CsvTable t({"t", "mass", "ballistic_energy", "ballistic_residual", "dissipation", "rho_pert_l53", "theta_pert_l2",
              "kinetic", "max_speed"});
  for (const auto& r : rows)
    t.row({r.t, r.mass, r.ballistic_energy, r.ballistic_residual, r.dissipation, r.rho_pert_l53, r.theta_pert_l2,
           r.kinetic, r.max_speed});
  t.write(dir / "nsf_series.csv");
  if (c.checkpoints) save_checkpoint(dir / ("nsf_eps" + eps_tag(c.epsilon) + ".lmck"), nsf_bundle(last), last.t);
  std::cout << "nsf eps " << c.epsilon << ": " << s.steps_taken() << " steps to t = " << last.t << ", mass drift "
            << drift << ", min dissipation " << diss << "\n";
  return drift <= tol::mass_drift && diss >= tol::dissipation_floor ? 0 : 1;
}

int run_ob(const ExperimentConfig& c) {
  const auto g = c.make_grid_ptr();
  OBSolver s(ob_config(c, g));
  const double lambda = s.coeffs().lambda;
  const fs::path dir(c.out_dir);
  int k = 0;
  double next = 0.0;
  OBSolver::Observers obs;
  // the solver reports at the fine diagnostics cadence; snapshots follow [output] interval
  obs.on_output = [&](const OBState& st) {
    if (st.t + 1e-12 < next) return;
    write_csv(dir / snapshot_name("ob", k++), ob_bundle(st, lambda));
    next += c.output_interval;
  };
  std::vector<OBSeriesRow> rows;
  auto last = s.run(obs, &rows);
  CsvTable t({"t", "kinetic", "mean_theta", "mean_T", "max_div", "trace_defect", "boussinesq_residual"});
  double div = 0, trace = 0, bous = 0;
  for (const auto& r : rows) {
    t.row({r.t, r.kinetic, r.mean_theta, r.mean_T, r.max_div, r.trace_defect, r.boussinesq_residual});
    div = std::max(div, r.max_div);
    trace = std::max(trace, r.trace_defect);
    bous = std::max(bous, r.boussinesq_residual);
  }
  t.write(dir / "ob_series.csv");
  if (c.checkpoints) save_checkpoint(dir / "ob_final.lmck", ob_bundle(last, lambda), last.t);
  std::cout << "ob: lambda " << lambda << ", t = " << last.t << ", max div " << div << ", trace defect " << trace
            << ", Boussinesq residual " << bous << "\n";
  return div <= 1e-10 && trace <= tol::trace && bous <= tol::boussinesq ? 0 : 1;
}

int run_sweep_cmd(const ExperimentConfig& c) {
  SweepOptions o;
  o.log = &std::cerr;
  if (c.checkpoints) o.checkpoint_dir = (fs::path(c.out_dir) / "checkpoints").string();
  auto rep = run_sweep(c, o);
  write_sweep_report(rep, c.out_dir);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  if (rep.rows.empty()) {
    std::cout << "empty sweep\n";
    return 0;
  }
  auto [nine, ten] = check_sweep(rep);
  std::cout << format_criterion(nine) << "\n" << format_criterion(ten) << "\n";
  bool ok = rep.ob_error.empty();
  for (const auto& r : rep.rows) ok = ok && r.ok && r.mass_drift <= tol::mass_drift && r.min_dissipation >= tol::dissipation_floor;
  return ok ? 0 : 1;
}

// Snapshot functionals of every NSF checkpoint against the OB checkpoint.
int diagnose(const ExperimentConfig& c, const fs::path& ckdir) {
  if (!fs::is_directory(ckdir)) throw Error("no checkpoint directory " + ckdir.string());
  std::optional<Checkpoint> ob;
  if (fs::exists(ckdir / "ob_final.lmck")) ob = load_checkpoint(ckdir / "ob_final.lmck");
  std::vector<std::pair<double, fs::path>> runs;
  const std::regex pat(R"(nsf_eps([0-9.eE+-]+)\.lmck)");
  for (const auto& e : fs::directory_iterator(ckdir)) {
    std::smatch m;
    const auto name = e.path().filename().string();
    if (std::regex_match(name, m, pat)) runs.emplace_back(std::stod(m[1]), e.path());
  }
  if (runs.empty()) throw Error("no nsf_eps*.lmck checkpoints in " + ckdir.string());
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  const auto model = c.model();
  const auto ref = c.ref();
  const auto K = c.essential_set();
  CsvTable t({"epsilon", "functional", "value"});
  bool ok = true;
  for (const auto& [eps, path] : runs) {
    auto ck = load_checkpoint(path);
    const auto& f = ck.fields;
    const auto g = f.grid;
    const Vec &rho = f.column("rho"), &theta = f.column("theta"), &mr = f.column("m_r"), &mp = f.column("m_phi");
    const std::string tag = eps_tag(eps);
    auto put = [&](const std::string& name, double v) { t.row_mixed({tag, name}, v); };
    put("t", ck.time);
    Vec ur = mr.cwiseQuotient(rho), up = mp.cwiseQuotient(rho);
    Vec one = Vec::Ones(g->size()), z = Vec::Zero(g->size());
    put("relative_energy_to_reference",
        integrate(*g, relative_energy_density(model, eps, rho, theta, ur, up, ref.rho_bar * one, ref.theta_bar * one, z, z)));
    auto sp = ess_res_split(*g, rho, theta, eps, ref, K);
    put("residual_measure_over_eps2", sp.residual_measure / (eps * eps));
    put("residual_mass_over_eps2", sp.residual_mass / (eps * eps));
    put("ess_rho_norm", sp.ess_rho_norm);
    put("ess_theta_norm", sp.ess_theta_norm);
    put("kinetic_sqrt", std::sqrt(integrate(*g, (mr.cwiseAbs2() + mp.cwiseAbs2()).cwiseQuotient(rho))));
    if (ob) {
      if (!(*ob->fields.grid == *g)) throw GridMismatchError("OB and NSF checkpoints are on different grids");
      const auto& o = ob->fields;
      Vec dr = (rho.array() - ref.rho_bar).matrix() / eps - o.column("R");
      Vec dt = (theta.array() - ref.theta_bar).matrix() / eps - o.column("T");
      put("snapshot_error_rho_l53", norm_lp(*g, dr, 5.0 / 3.0));
      put("snapshot_error_theta_l2", norm_l2(*g, dt));
      put("snapshot_error_u_l2", std::sqrt(inner(*g, ur - o.column("U_r"), ur - o.column("U_r")) +
                                           inner(*g, up - o.column("U_phi"), up - o.column("U_phi"))));
      put("ob_time_mismatch", std::abs(ob->time - ck.time));
    }
    ok = ok && rho.minCoeff() > 0 && theta.minCoeff() > 0;
  }
  t.write(fs::path(c.out_dir) / "diagnose.csv");
  std::cout << "diagnosed " << runs.size() << " checkpoint(s)" << (ob ? " against the OB reference" : "")
            << "; table in " << (fs::path(c.out_dir) / "diagnose.csv").string() << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the low-Mach limit (NSF to Oberbeck-Boussinesq)", "low-mach-lab"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "experiment configuration (INI)")->required()->check(CLI::ExistingFile);
    s->add_option("--out", o.out, "output directory (overrides [output] dir)");
    s->add_option("--seed", o.seed, "seed for randomized test fields (overrides [sweep] seed)");
  };
  auto* vt = app.add_subcommand("verify-thermo", "thermodynamic consistency and coefficient oracle");
  auto* st = app.add_subcommand("static", "static state at [scaling] epsilon");
  auto* rn = app.add_subcommand("run-nsf", "one NSF run at [scaling] epsilon");
  auto* ro = app.add_subcommand("run-ob", "the Oberbeck-Boussinesq reference run");
  auto* sw = app.add_subcommand("sweep", "epsilon sweep with diagnostics against the OB run");
  auto* dg = app.add_subcommand("diagnose", "snapshot functionals from checkpoints");
  for (auto* s : {vt, st, rn, ro, sw, dg}) add_common(s);
  dg->add_option("--checkpoints", o.checkpoints, "checkpoint directory (default <out>/checkpoints)");

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig c;
  try {
    c = load(o);
    prepare_out(c);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  try {
    if (*vt) return verify_thermo(c);
    if (*st) return run_static(c);
    if (*rn) return run_nsf(c);
    if (*ro) return run_ob(c);
    if (*sw) return run_sweep_cmd(c);
    if (*dg) return diagnose(c, o.checkpoints.empty() ? fs::path(c.out_dir) / "checkpoints" : fs::path(o.checkpoints));
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
