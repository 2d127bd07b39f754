#pragma once

// The ten acceptance criteria as callable checks. Each returns a pass flag and
// a one-line detail with the measured quantities; tolerances are pinned here.

#include <chrono>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/config.hpp"
#include "lowmach/harness.hpp"
#include "lowmach/static_state.hpp"

namespace lowmach {

namespace tol {
inline constexpr double gibbs_rel = 1e-6;
inline constexpr double third_law = 1e-6;          // entropy function at Z = 50
inline constexpr double pressure_growth = 0.05;    // P / Z^{5/3} vs p_inf at Z = 1e4
inline constexpr double coeff_rel = 1e-6;
inline constexpr double static_spread = 0.10;
inline constexpr double newton_residual = 1e-10;
inline constexpr double mass_drift = 1e-12;
inline constexpr double dissipation_floor = -1e-10;
inline constexpr double uniform_state = 1e-12;
inline constexpr double trace = 1e-10;
inline constexpr double lambda_zero_match = 1e-12;
inline constexpr double boussinesq = 1e-10;
inline constexpr double helm_div = 1e-8;
inline constexpr double helm_orth = 1e-8;
inline constexpr double helm_idem = 1e-10;
inline constexpr double frequency = 0.05;
inline constexpr double trend_ratio = 2.0;
inline constexpr double bound_factor = 2.0;
}  // namespace tol

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

namespace detail {
inline std::string sci(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

// Times f and turns an escaped Error into a failed criterion.
inline CriterionResult timed(int id, std::string name, const std::function<void(CriterionResult&)>& f) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    f(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::vector<double> log_axis(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) v[k] = lo * std::pow(hi / lo, double(k) / (n - 1));
  return v;
}
}  // namespace detail

// 1. Gibbs relations, thermodynamic stability, third law, pressure growth.
inline CriterionResult check_thermo_consistency(const ThermoModel& m) {
  return detail::timed(1, "thermodynamic consistency", [&](CriterionResult& r) {
    double gibbs = 0;
    bool hts = true;
    for (double rho : detail::log_axis(0.1, 10.0, 25))
      for (double th : detail::log_axis(0.1, 10.0, 25)) {
        auto g = gibbs_residuals(m, rho, th);
        gibbs = std::max({gibbs, g.rel1, g.rel2});
        auto q = partials(m, rho, th);
        hts = hts && q.p_rho > 0.0 && q.e_theta > 0.0;
      }
    const double s50 = entropy_function(m, 50.0);
    const double growth = std::abs(m.P.P(1e4) / std::pow(1e4, 5.0 / 3.0) - m.p_inf) / m.p_inf;
    r.pass = gibbs <= tol::gibbs_rel && hts && s50 <= tol::third_law && growth <= tol::pressure_growth;
    r.detail = "gibbs " + detail::sci(gibbs) + ", stability " + (hts ? "ok" : "VIOLATED") + ", S(50) " +
               detail::sci(s50) + ", |P/Z^(5/3) - p_inf|/p_inf at 1e4 " + detail::sci(growth);
  });
}

// 2. Analytic material coefficients against finite differences.
inline CriterionResult check_coefficients(const ThermoModel& m, const ReferenceState& ref) {
  return detail::timed(2, "coefficient oracle", [&](CriterionResult& r) {
    const auto a = coefficients(m, ref);
    const auto f = coefficients_fd(m, ref);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(y), 1e-300); };
    const double worst = std::max({rel(a.alpha, f.alpha), rel(a.c_p, f.c_p), rel(a.lambda, f.lambda),
                                   rel(a.A, f.A), rel(a.omega, f.omega)});
    r.pass = worst <= tol::coeff_rel && a.lambda > 0.0 && a.lambda < 1.0;
    std::ostringstream os;
    os << "max rel diff " << detail::sci(worst) << ", lambda " << std::setprecision(6) << a.lambda
       << ", c_p " << a.c_p << ", omega " << a.omega;
    r.detail = os.str();
  });
}

// 3. Static state scales like eps.
inline CriterionResult check_static_scaling(const ExperimentConfig& c) {
  return detail::timed(3, "static scaling", [&](CriterionResult& r) {
    const auto g = c.make_grid_ptr();
    StaticProblem pb{g, c.model(), c.ref(), build_G(g, c), harmonic_extension(g, build_T_B(g, c)), 0.0};
    std::vector<double> ratio;
    double worst = 0;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      pb.epsilon = eps;
      auto sol = solve_newton(pb);
      ratio.push_back((sol.rho_tilde.v.array() - c.rho_bar).abs().maxCoeff() / eps);
      worst = std::max(worst, sol.optimality);
    }
    const double lo = *std::min_element(ratio.begin(), ratio.end());
    const double hi = *std::max_element(ratio.begin(), ratio.end());
    const double spread = lo > 0 ? hi / lo - 1.0 : INFINITY;
    r.pass = spread <= tol::static_spread && worst <= tol::newton_residual;
    std::ostringstream os;
    os << "|rho - rho_bar|_inf / eps = " << std::setprecision(5) << ratio[0] << ", " << ratio[1] << ", " << ratio[2]
       << " (spread " << detail::sci(spread) << "), Newton residual " << detail::sci(worst);
    r.detail = os.str();
  });
}

// 4. Mass drift and dissipation sign over the sweep runs, uniform state steady.
inline CriterionResult check_conservation(const ExperimentConfig& c, const SweepReport& rep) {
  return detail::timed(4, "conservation and positivity", [&](CriterionResult& r) {
    double drift = 0, diss = INFINITY;
    bool complete = !rep.rows.empty();
    for (const auto& row : rep.rows) {
      complete = complete && row.ok;
      drift = std::max(drift, row.mass_drift);
      diss = std::min(diss, row.min_dissipation);
    }
    const auto g = c.make_grid_ptr();
    auto n = nsf_config(c, g, c.epsilons.empty() ? c.epsilon : c.epsilons.back());
    n.G = ScalarField(g);
    n.T_B = radial_boundary(*g, 0.0, 0.0);
    n.init = {ScalarField(g), ScalarField(g), VectorField(g)};
    NSFSolver s(n);
    auto st = s.init_state();
    const double dt = s.max_dt(st);
    for (int k = 0; k < 100; ++k) st = s.step(st, dt);
    const double dev = std::max({(st.rho.v.array() - c.rho_bar).abs().maxCoeff(),
                                 (st.theta.v.array() - c.theta_bar).abs().maxCoeff(), st.m.r.cwiseAbs().maxCoeff(),
                                 st.m.phi.cwiseAbs().maxCoeff()});
    r.pass = complete && drift <= tol::mass_drift && diss >= tol::dissipation_floor && dev <= tol::uniform_state;
    r.detail = std::string(complete ? "" : "sweep incomplete; ") + "mass drift " + detail::sci(drift) +
               ", min dissipation " + detail::sci(diss) + ", uniform state deviation after 100 steps " +
               detail::sci(dev);
  });
}

// 5 and 6 share the OB run: trace identity at every implicit step, lambda = 0
// against plain Dirichlet, Boussinesq relation at every output.
inline std::pair<CriterionResult, CriterionResult> check_ob(const ExperimentConfig& c) {
  double bous = 0;
  int outputs = 0;
  auto five = detail::timed(5, "non-local boundary identity", [&](CriterionResult& r) {
    const auto g = c.make_grid_ptr();
    auto oc = ob_config(c, g);
    oc.nonlocal_bc = true;
    OBSolver s(oc);
    const double k = s.coeffs().k();
    double worst = 0;
    long steps = 0;
    OBSolver::Observers obs;
    obs.on_step = [&](const OBState& st, double) {
      ++steps;
      const double m = mean(st.Theta);
      const int np = g->nphi(), n = g->size();
      for (int j = 0; j < np; ++j) {
        worst = std::max(worst, std::abs(st.Theta.v[j] - (oc.T_B.inner[j] - k * m)));
        worst = std::max(worst, std::abs(st.Theta.v[n - np + j] - (oc.T_B.outer[j] - k * m)));
      }
    };
    std::vector<OBSeriesRow> rows;
    s.run(obs, &rows);
    for (const auto& row : rows) bous = std::max(bous, row.boussinesq_residual);
    outputs = int(rows.size());

    auto a = oc;
    a.lambda = 0.0;
    auto b = oc;
    b.lambda.reset();
    b.nonlocal_bc = false;
    auto sa = OBSolver(a).run(), sb = OBSolver(b).run();
    const double match = std::max({(sa.Theta.v - sb.Theta.v).cwiseAbs().maxCoeff(),
                                   (sa.U.r - sb.U.r).cwiseAbs().maxCoeff(), (sa.U.phi - sb.U.phi).cwiseAbs().maxCoeff(),
                                   (sa.R.v - sb.R.v).cwiseAbs().maxCoeff()});
    r.pass = steps > 0 && worst <= tol::trace && match <= tol::lambda_zero_match;
    r.detail = "trace defect " + detail::sci(worst) + " over " + std::to_string(steps) +
               " steps, lambda = 0 vs Dirichlet " + detail::sci(match);
  });
  CriterionResult six;
  six.id = 6;
  six.name = "Boussinesq relation";
  six.seconds = 0;
  if (outputs == 0) {
    six.pass = false;
    six.detail = "no OB outputs (" + five.detail + ")";
  } else {
    six.pass = bous <= tol::boussinesq;
    six.detail = "max gradient residual " + detail::sci(bous) + " over " + std::to_string(outputs) + " outputs";
  }
  return {five, six};
}

// 7. Helmholtz projection on 100 random fields.
inline CriterionResult check_helmholtz(const ExperimentConfig& c, std::uint64_t seed) {
  return detail::timed(7, "Helmholtz suite", [&](CriterionResult& r) {
    const auto g = c.make_grid_ptr();
    NeumannPoisson P(g);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> N(0.0, 1.0);
    double d = 0, o = 0, i = 0;
    for (int k = 0; k < 100; ++k) {
      VectorField v(g);
      if (k % 2) {
        for (auto& x : v.r) x = N(rng);
        for (auto& x : v.phi) x = N(rng);
      } else {
        v = random_smooth_field(g, rng, k % 4 == 0);
      }
      const double nv = norm_l2(v);
      auto s = helmholtz_split(P, v);
      auto t = helmholtz_split(P, s.solenoidal);
      d = std::max(d, norm_l2(div(s.solenoidal)) / nv);
      o = std::max(o, std::abs(inner(s.solenoidal, s.gradient)) / (nv * nv));
      i = std::max(i, norm_l2(t.solenoidal - s.solenoidal) / nv);
    }
    r.pass = d <= tol::helm_div && o <= tol::helm_orth && i <= tol::helm_idem;
    r.detail = "relative div " + detail::sci(d) + ", orthogonality " + detail::sci(o) + ", idempotence " +
               detail::sci(i);
  });
}

// 8. Frequency of a single acoustic mode against the discrete wave system.
inline CriterionResult check_acoustic_frequency(const ExperimentConfig& c, int nr = 32, int nphi = 64) {
  return detail::timed(8, "acoustic frequency", [&](CriterionResult& r) {
    const auto g = make_grid(c.grid.r1, c.grid.r2, nr, nphi);
    NeumannPoisson P(g);
    const auto mode = lowest_acoustic_mode(P);
    const auto ge = grad_sbp(*g, mode.e);
    std::ostringstream os;
    bool ok = true;
    for (double eps : {0.4, 0.2}) {
      NSFConfig n;
      n.grid = g;
      n.model = c.model();
      n.ref = c.ref();
      n.epsilon = eps;
      n.G = ScalarField(g);
      n.T_B = radial_boundary(*g, 0.0, 0.0);
      n.init = acoustic_mode_initial(g, n.model, n.ref, mode, 0.2);
      n.cfl = c.cfl;
      const double W = acoustic_angular_frequency(mode.Lambda, coefficients(n.model, n.ref).omega, eps);
      n.T_end = 3.0 * 2.0 * std::numbers::pi / W;
      n.output_interval = n.T_end;
      NSFSolver s(n);
      FrequencyProbe probe;
      NSFSolver::Observers obs;
      obs.on_step = [&](const FluidState& st, double) {
        probe.sample(st.t, inner(*g, st.m.r, ge.r) + inner(*g, st.m.phi, ge.phi));
      };
      s.run(obs);
      const double rel = probe.angular_frequency() / W - 1.0;
      ok = ok && std::abs(rel) <= tol::frequency;
      os << (eps == 0.4 ? "" : "; ") << "eps " << eps << ": W " << std::setprecision(5) << W << ", measured "
         << probe.angular_frequency() << " (" << std::showpos << std::setprecision(2) << 100 * rel << std::noshowpos
         << "%)";
    }
    r.pass = ok;
    r.detail = "mode m = " + std::to_string(mode.m) + "; " + os.str();
  });
}

// 9 and 10 from a finished sweep.
inline std::pair<CriterionResult, CriterionResult> check_sweep(const SweepReport& rep) {
  const auto a = assess(rep);
  auto fmt_trend = [](const Trend& t) {
    std::ostringstream os;
    os << t.name << " [";
    for (size_t k = 0; k < t.values.size(); ++k) os << (k ? " " : "") << std::setprecision(3) << t.values[k];
    os << "]";
    return os.str();
  };
  CriterionResult nine{9, "singular-limit trend", false, "", 0};
  CriterionResult ten{10, "uniform bounds", false, "", 0};
  if (!a.complete) {
    std::string why = rep.rows.empty() ? "no sweep rows" : "sweep incomplete";
    if (!rep.ob_error.empty()) why += ": " + rep.ob_error;
    for (const auto& r : rep.rows)
      if (!r.ok) why += "; eps " + eps_tag(r.epsilon) + ": " + r.error;
    nine.detail = ten.detail = why;
    return {nine, ten};
  }
  nine.pass = a.limit_ok && a.convective_ok && a.negative_control_ok;
  std::ostringstream os;
  os << "limit " << (a.limit_ok ? "ok" : "FAIL");
  for (const auto& t : a.limit) os << " " << fmt_trend(t);
  os << "; A " << (a.convective_ok ? "ok" : "FAIL");
  for (const auto& t : a.convective)
    if (!(t.monotone && t.ratio >= tol::trend_ratio)) os << " " << fmt_trend(t);
  double worst = INFINITY;
  for (const auto& t : a.convective) worst = std::min(worst, t.ratio);
  os << " (smallest ratio " << std::setprecision(3) << worst << ")";
  os << "; control " << (a.negative_control_ok ? "persists " : "DECAYS ") << fmt_trend(a.negative_control);
  nine.detail = os.str();

  ten.pass = a.bounds_ok;
  std::ostringstream ts;
  int zero = 0;
  for (const auto& t : a.bounds) {
    const double hi = *std::max_element(t.values.begin(), t.values.end());
    const double lo = *std::min_element(t.values.begin(), t.values.end());
    if (hi == 0.0) {
      ++zero;
      continue;
    }
    ts << t.name << " " << (bounded(t) ? "" : "FAIL ") << std::setprecision(3) << hi / lo << "x  ";
  }
  ts << "(" << zero << " identically zero)";
  ten.detail = ts.str();
  return {nine, ten};
}

inline std::string format_criterion(const CriterionResult& r) {
  std::ostringstream os;
  os << "criterion " << std::setw(2) << r.id << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  ["
     << std::fixed << std::setprecision(1) << r.seconds << " s]  " << r.detail;
  return os.str();
}

}  // namespace lowmach
