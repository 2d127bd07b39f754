#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/helmholtz.hpp"
#include "lowmach/io.hpp"
#include "lowmach/static_state.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

enum class TimeScheme { ssprk3, ssprk2 };

inline TimeScheme parse_time_scheme(const std::string& s) {
  if (s == "ssprk3") return TimeScheme::ssprk3;
  if (s == "ssprk2") return TimeScheme::ssprk2;
  throw ConfigError("unknown time scheme '" + s + "' (expected ssprk3 or ssprk2)");
}

struct CflNumbers {
  double acoustic = 0.8;
  double convective = 0.5;
  double diffusive = 0.4;
};

// Scaled perturbations: rho = rho_bar + eps rho0, theta = theta_bar + eps theta0.
struct InitialData {
  ScalarField rho0;
  ScalarField theta0;
  VectorField u0;
};

struct NSFConfig {
  GridPtr grid;
  ThermoModel model;
  ReferenceState ref;
  double epsilon = 0.1;
  ScalarField G;
  BoundaryData T_B;
  InitialData init;
  CflNumbers cfl;
  TimeScheme scheme = TimeScheme::ssprk3;
  double T_end = 1.0;
  double output_interval = 0.05;
  bool well_balanced = true;
  double coc_tol = 1e-8;
};

struct FluidState {
  ScalarField rho;
  VectorField m;
  ScalarField theta;
  double t = 0.0;
  double epsilon = 0.0;
  // Running integrals, advanced with the same Runge-Kutta weights as the state.
  VectorField M;        // int_0^t m dt
  ScalarField Sigma;    // int_0^t sigma dt
  double dissipation = 0.0;   // int int sigma
  double ballistic_src = 0.0; // int [sources - theta_B sigma]

  VectorField velocity() const {
    VectorField u(m.grid);
    u.r = m.r.cwiseQuotient(rho.v);
    u.phi = m.phi.cwiseQuotient(rho.v);
    return u;
  }
};

// Pointwise constitutive data on a whole field.
struct NodalThermo {
  Vec p, p_rho, p_theta, e, e_theta, s, mu, eta, kappa;
};

inline NodalThermo nodal_thermo(const ThermoModel& model, const Vec& rho, const Vec& theta) {
  const Eigen::Index n = rho.size();
  NodalThermo t{Vec(n), Vec(n), Vec(n), Vec(n), Vec(n), Vec(n), Vec(n), Vec(n), Vec(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    auto q = partials(model, rho[k], theta[k]);
    auto tr = transport(model, theta[k]);
    t.p[k] = q.p;
    t.p_rho[k] = q.p_rho;
    t.p_theta[k] = q.p_theta;
    t.e[k] = q.e;
    t.e_theta[k] = q.e_theta;
    t.s[k] = q.s;
    t.mu[k] = tr.mu;
    t.eta[k] = tr.eta;
    t.kappa[k] = tr.kappa;
  }
  return t;
}

// (1/theta)(eps^2 S:D u + kappa |grad theta|^2 / theta), a sum of squares.
inline Vec dissipation_field(const DomainGrid& g, const NodalThermo& th, const Vec& ur, const Vec& uphi,
                             const Vec& theta, double eps) {
  auto S = strain(g, ur, uphi);
  auto gt = grad(g, theta);
  Vec heat = th.kappa.cwiseProduct(gt.r.cwiseAbs2() + gt.phi.cwiseAbs2()).cwiseQuotient(theta);
  return (eps * eps * stress_power(S, th.mu, th.eta) + heat).cwiseQuotient(theta);
}

struct TimeSeriesRow {
  double t, mass, ballistic_energy, ballistic_residual, dissipation, rho_pert_l53, theta_pert_l2,
      kinetic, max_speed;
};

class NSFSolver {
 public:
  explicit NSFSolver(NSFConfig cfg, std::optional<VecPair> static_residual_override = {})
      : cfg_(std::move(cfg)), g_(cfg_.grid) {
    const auto& g = *g_;
    require_same_grid(g_, cfg_.G.grid);
    if (!(cfg_.epsilon > 0.0) || cfg_.epsilon > 1.0) throw ConfigError("[scaling] epsilon must lie in (0, 1]");
    T_ext_ = harmonic_extension(g_, cfg_.T_B);
    theta_B_ = (cfg_.ref.theta_bar + cfg_.epsilon * T_ext_.v.array()).matrix();
    gradG_ = grad(g, cfg_.G.v);
    gradThB_ = grad(g, theta_B_);
    bvals_ = boundary_vector(g, cfg_.T_B);
    w_ = g.weights();
    if (cfg_.well_balanced) {
      if (static_residual_override) {
        wb_ = *static_residual_override;
      } else {
        StaticProblem pb{g_, cfg_.model, cfg_.ref, cfg_.G, T_ext_, cfg_.epsilon};
        auto sol = solve_newton(pb);
        wb_ = static_residual(pb, sol.rho_tilde.v);
      }
    } else {
      wb_ = {Vec::Zero(g.size()), Vec::Zero(g.size())};
    }
  }

  const NSFConfig& config() const { return cfg_; }
  const ScalarField& T_ext() const { return T_ext_; }
  const Vec& theta_B() const { return theta_B_; }
  const VecPair& well_balancing_term() const { return wb_; }

  // Builds the initial state; rejects data violating the structural hypotheses.
  FluidState init_state() const {
    const auto& g = *g_;
    const double eps = cfg_.epsilon;
    const auto& in = cfg_.init;
    require_same_grid(g_, in.rho0.grid);
    require_same_grid(g_, in.theta0.grid);
    require_same_grid(g_, in.u0.grid);
    const double area = g.area();
    if (std::abs(integrate(in.rho0)) > 1e-12 * area * std::max(1.0, in.rho0.v.cwiseAbs().maxCoeff()))
      throw ConfigError("[initial] density perturbation must have zero mean");
    if (std::abs(integrate(in.theta0)) > 1e-12 * area * std::max(1.0, in.theta0.v.cwiseAbs().maxCoeff()))
      throw ConfigError("[initial] temperature perturbation must have zero mean");
    auto basis = rigid_motion_basis(g_, cfg_.model.eta0);
    const double coc = check_coc(T_ext_, basis);
    if (coc > cfg_.coc_tol)
      throw ConfigError("[boundary] temperature data break the coercivity hypothesis: "
                        "|grad T_B . w| = " + std::to_string(coc));
    FluidState s;
    s.epsilon = eps;
    s.rho = ScalarField(g_, (cfg_.ref.rho_bar + eps * in.rho0.v.array()).matrix());
    s.theta = ScalarField(g_, (cfg_.ref.theta_bar + eps * in.theta0.v.array()).matrix());
    s.m = VectorField(g_, s.rho.v.cwiseProduct(in.u0.r), s.rho.v.cwiseProduct(in.u0.phi));
    s.M = VectorField(g_);
    s.Sigma = ScalarField(g_);
    apply_bc(s.rho.v, s.m.r, s.m.phi, s.theta.v);
    check_state(s);
    return s;
  }

  // Largest stable step for the current state together with the binding limit.
  double max_dt(const FluidState& s, std::string* which = nullptr) const {
    const auto& g = *g_;
    const double eps = cfg_.epsilon;
    auto th = nodal_thermo(cfg_.model, s.rho.v, s.theta.v);
    double cmax = 0.0, umax = 0.0, nu = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      const double r = s.rho.v[k], t = s.theta.v[k];
      const double c2 = th.p_rho[k] + t * th.p_theta[k] * th.p_theta[k] / (r * r * th.e_theta[k]);
      const double u = std::hypot(s.m.r[k], s.m.phi[k]) / r;
      cmax = std::max(cmax, std::sqrt(c2) / eps + u);
      umax = std::max(umax, u);
      nu = std::max({nu, (4.0 / 3.0 * th.mu[k] + th.eta[k]) / r, th.kappa[k] / (r * th.e_theta[k])});
    }
    const double h = g.h_eff();
    const double dt_a = cfg_.cfl.acoustic * h / cmax;
    const double dt_c = umax > 0 ? cfg_.cfl.convective * h / umax : INFINITY;
    const double dt_d = nu > 0 ? cfg_.cfl.diffusive * h * h / (2.0 * nu) : INFINITY;
    const double dt = std::min({dt_a, dt_c, dt_d});
    if (which) *which = (dt == dt_a) ? "acoustic" : (dt == dt_c) ? "convective" : "diffusive";
    return dt;
  }

  // One explicit Runge-Kutta step.
  FluidState step(const FluidState& s, double dt) const {
    std::string which;
    const double dtmax = max_dt(s, &which);
    if (dt > dtmax * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "time step " << dt << " exceeds the " << which << " limit " << dtmax;
      throw CflError(os.str(), dtmax);
    }
    return step_unchecked(s, dt);
  }

  struct Observers {
    std::function<void(const FluidState&, double dt)> on_step;  // after every step
    std::function<void(const FluidState&)> on_output;           // at t = 0 and every output time
  };

  // Advances to T_end. Inside an output interval the step is re-planned every
  // step as remaining / ceil(remaining / (safety * dt_max)), so outputs land
  // exactly on multiples of the output interval.
  FluidState run(Observers obs = {}, std::vector<TimeSeriesRow>* series = nullptr,
                 double safety = 0.95) const {
    FluidState s = init_state();
    const double E0 = ballistic_energy(s);
    auto record = [&](const FluidState& st) {
      if (series) series->push_back(time_series_row(st, E0));
      if (obs.on_output) obs.on_output(st);
    };
    record(s);
    if (cfg_.T_end <= 0.0) return s;
    const int nout = std::max(1, int(std::llround(cfg_.T_end / cfg_.output_interval)));
    const double dto = cfg_.T_end / nout;
    for (int o = 1; o <= nout; ++o) {
      const double target = o * dto;
      while (s.t < target) {
        const double remaining = target - s.t;
        const int nsub = std::max(1, int(std::ceil(remaining / (safety * max_dt(s)))));
        const double dt = remaining / nsub;
        s = step_unchecked(s, dt);
        if (nsub == 1) s.t = target;
        ++steps_;
        if (obs.on_step) obs.on_step(s, dt);
      }
      record(s);
    }
    return s;
  }

  long steps_taken() const { return steps_; }

  // ---- monitored functionals --------------------------------------------

  double mass(const FluidState& s) const { return integrate(s.rho); }

  // int [eps^2 rho |u|^2 / 2 + rho e - theta_B rho s]
  double ballistic_energy(const FluidState& s) const {
    auto th = nodal_thermo(cfg_.model, s.rho.v, s.theta.v);
    const double eps = cfg_.epsilon;
    Vec ke = (s.m.r.cwiseAbs2() + s.m.phi.cwiseAbs2()).cwiseQuotient(s.rho.v);
    Vec f = 0.5 * eps * eps * ke + s.rho.v.cwiseProduct(th.e - theta_B_.cwiseProduct(th.s));
    return integrate(*g_, f);
  }

  Vec dissipation(const FluidState& s) const {
    auto th = nodal_thermo(cfg_.model, s.rho.v, s.theta.v);
    auto u = s.velocity();
    return dissipation_field(*g_, th, u.r, u.phi, s.theta.v, cfg_.epsilon);
  }

  TimeSeriesRow time_series_row(const FluidState& s, double E0) const {
    const auto& g = *g_;
    const double eps = cfg_.epsilon;
    TimeSeriesRow r{};
    r.t = s.t;
    r.mass = mass(s);
    r.ballistic_energy = ballistic_energy(s);
    r.ballistic_residual = r.ballistic_energy - E0 - s.ballistic_src;
    r.dissipation = s.dissipation;
    r.rho_pert_l53 = norm_lp(g, (s.rho.v.array() - cfg_.ref.rho_bar).matrix() / eps, 5.0 / 3.0);
    r.theta_pert_l2 = norm_l2(g, (s.theta.v.array() - cfg_.ref.theta_bar).matrix() / eps);
    Vec ke = (s.m.r.cwiseAbs2() + s.m.phi.cwiseAbs2()).cwiseQuotient(s.rho.v);
    r.kinetic = std::sqrt(integrate(g, ke));
    r.max_speed = (ke.cwiseQuotient(s.rho.v)).cwiseSqrt().maxCoeff();
    return r;
  }

  static CsvTable series_table(const std::vector<TimeSeriesRow>& rows) {
    CsvTable t({"t", "mass", "ballistic_energy", "ballistic_residual", "dissipation_integral",
                "rho_pert_l53", "theta_pert_l2", "kinetic_l2", "max_speed"});
    for (const auto& r : rows)
      t.row({r.t, r.mass, r.ballistic_energy, r.ballistic_residual, r.dissipation, r.rho_pert_l53,
             r.theta_pert_l2, r.kinetic, r.max_speed});
    return t;
  }

 private:
  struct Stage {
    Vec rho, mr, mp, theta, Mr, Mp, Sigma;
    double diss = 0.0, bal = 0.0;
  };

  FluidState step_unchecked(const FluidState& s, double dt) const {
    Stage y = to_stage(s);
    Stage out;
    if (cfg_.scheme == TimeScheme::ssprk3) {
      Stage y1 = euler(y, dt);
      Stage y2 = combine(0.75, y, 0.25, euler(y1, dt));
      out = combine(1.0 / 3.0, y, 2.0 / 3.0, euler(y2, dt));
    } else {
      Stage y1 = euler(y, dt);
      out = combine(0.5, y, 0.5, euler(y1, dt));
    }
    FluidState n = from_stage(out, s.t + dt);
    check_state(n);
    return n;
  }

  Stage to_stage(const FluidState& s) const {
    return {s.rho.v, s.m.r, s.m.phi, s.theta.v, s.M.r, s.M.phi, s.Sigma.v, s.dissipation, s.ballistic_src};
  }

  FluidState from_stage(Stage& y, double t) const {
    FluidState s;
    s.epsilon = cfg_.epsilon;
    s.t = t;
    s.rho = ScalarField(g_, std::move(y.rho));
    s.m = VectorField(g_, std::move(y.mr), std::move(y.mp));
    s.theta = ScalarField(g_, std::move(y.theta));
    s.M = VectorField(g_, std::move(y.Mr), std::move(y.Mp));
    s.Sigma = ScalarField(g_, std::move(y.Sigma));
    s.dissipation = y.diss;
    s.ballistic_src = y.bal;
    return s;
  }

  static Stage combine(double a, const Stage& x, double b, const Stage& y) {
    Stage z;
    z.rho = a * x.rho + b * y.rho;
    z.mr = a * x.mr + b * y.mr;
    z.mp = a * x.mp + b * y.mp;
    z.theta = a * x.theta + b * y.theta;
    z.Mr = a * x.Mr + b * y.Mr;
    z.Mp = a * x.Mp + b * y.Mp;
    z.Sigma = a * x.Sigma + b * y.Sigma;
    z.diss = a * x.diss + b * y.diss;
    z.bal = a * x.bal + b * y.bal;
    return z;
  }

  // y + dt f(y), followed by the boundary conditions
  Stage euler(const Stage& y, double dt) const {
    const auto& g = *g_;
    const double eps = cfg_.epsilon, ie2 = 1.0 / (eps * eps);
    auto th = nodal_thermo(cfg_.model, y.rho, y.theta);
    Vec ur = y.mr.cwiseQuotient(y.rho), up = y.mp.cwiseQuotient(y.rho);

    // mass
    Vec drho = -div(g, y.mr, y.mp);

    // momentum: convective flux of m (x) u in polar form
    Vec Trr = y.mr.cwiseProduct(ur), Trp = y.mr.cwiseProduct(up), Tpp = y.mp.cwiseProduct(up);
    Vec conv_r = over_r(g, ddr_sbp(g, times_r(g, Trr)) + ddphi(g, Trp) - Tpp);
    Vec conv_p = over_r(g, ddr_sbp(g, times_r(g, Trp)) + ddphi(g, Tpp) + Trp);
    auto gp = grad(g, th.p);

    // viscous stress, 3-D coefficient 1/3 kept
    auto S = strain(g, ur, up);
    Vec divu = div(g, ur, up);
    auto lap = vector_laplace(g, ur, up);
    auto gdiv = grad(g, divu);
    auto gmu = grad(g, th.mu);
    Vec lam2 = th.eta - (2.0 / 3.0) * th.mu;
    auto glam = grad(g, lam2);
    Vec c1 = th.mu / 3.0 + th.eta;
    Vec visc_r = th.mu.cwiseProduct(lap.r) + c1.cwiseProduct(gdiv.r) +
                 2.0 * (S.rr.cwiseProduct(gmu.r) + S.rp.cwiseProduct(gmu.phi)) + divu.cwiseProduct(glam.r);
    Vec visc_p = th.mu.cwiseProduct(lap.phi) + c1.cwiseProduct(gdiv.phi) +
                 2.0 * (S.rp.cwiseProduct(gmu.r) + S.pp.cwiseProduct(gmu.phi)) + divu.cwiseProduct(glam.phi);

    Vec dmr = -conv_r - ie2 * gp.r + visc_r + (1.0 / eps) * y.rho.cwiseProduct(gradG_.r) + ie2 * wb_.r;
    Vec dmp = -conv_p - ie2 * gp.phi + visc_p + (1.0 / eps) * y.rho.cwiseProduct(gradG_.phi) + ie2 * wb_.phi;

    // temperature in internal-energy form
    auto gt = grad(g, y.theta);
    Vec sd = stress_power(S, th.mu, th.eta);
    Vec heat = div_k_grad(g, th.kappa, y.theta);
    Vec rcv = y.rho.cwiseProduct(th.e_theta);
    Vec dtheta = -(ur.cwiseProduct(gt.r) + up.cwiseProduct(gt.phi)) +
                 (-y.theta.cwiseProduct(th.p_theta).cwiseProduct(divu) + heat + eps * eps * sd).cwiseQuotient(rcv);

    // dissipation and ballistic sources
    Vec kgt2 = th.kappa.cwiseProduct(gt.r.cwiseAbs2() + gt.phi.cwiseAbs2()).cwiseQuotient(y.theta);
    Vec sigma = (eps * eps * sd + kgt2).cwiseQuotient(y.theta);
    Vec src = eps * (y.mr.cwiseProduct(gradG_.r) + y.mp.cwiseProduct(gradG_.phi)) -
              y.rho.cwiseProduct(th.s).cwiseProduct(ur.cwiseProduct(gradThB_.r) + up.cwiseProduct(gradThB_.phi)) +
              th.kappa.cwiseProduct(gt.r.cwiseProduct(gradThB_.r) + gt.phi.cwiseProduct(gradThB_.phi)).cwiseQuotient(y.theta) -
              theta_B_.cwiseProduct(sigma);

    Stage z;
    z.rho = y.rho + dt * drho;
    z.mr = y.mr + dt * dmr;
    z.mp = y.mp + dt * dmp;
    z.theta = y.theta + dt * dtheta;
    z.Mr = y.Mr + dt * y.mr;
    z.Mp = y.Mp + dt * y.mp;
    z.Sigma = y.Sigma + dt * sigma;
    z.diss = y.diss + dt * w_.dot(sigma);
    z.bal = y.bal + dt * w_.dot(src);
    apply_bc(z.rho, z.mr, z.mp, z.theta);
    return z;
  }

  // u.n = 0; d_r u_phi - u_phi / r = 0 (second-order one-sided); theta = theta_B on the rings.
  void apply_bc(const Vec& rho, Vec& mr, Vec& mp, Vec& theta) const {
    const auto& g = *g_;
    const int n = g.nr(), np = g.nphi();
    zero_normal(g, mr);
    const double a0 = 3.0 + 2.0 * g.dr() / g.r(0), aN = 3.0 - 2.0 * g.dr() / g.r(n);
    for (int j = 0; j < np; ++j) {
      const int k0 = g.index(0, j), k1 = g.index(1, j), k2 = g.index(2, j);
      const double u0 = (4.0 * mp[k1] / rho[k1] - mp[k2] / rho[k2]) / a0;
      mp[k0] = rho[k0] * u0;
      const int kN = g.index(n, j), kN1 = g.index(n - 1, j), kN2 = g.index(n - 2, j);
      const double uN = (4.0 * mp[kN1] / rho[kN1] - mp[kN2] / rho[kN2]) / aN;
      mp[kN] = rho[kN] * uN;
    }
    theta.head(np) = (cfg_.ref.theta_bar + cfg_.epsilon * bvals_.head(np).array()).matrix();
    theta.tail(np) = (cfg_.ref.theta_bar + cfg_.epsilon * bvals_.tail(np).array()).matrix();
  }

  void check_state(const FluidState& s) const {
    Eigen::Index kr, kt;
    const double rmin = s.rho.v.minCoeff(&kr), tmin = s.theta.v.minCoeff(&kt);
    const bool finite = s.rho.finite() && s.theta.finite() && s.m.finite();
    if (!finite || !(rmin > 0.0) || !(tmin > 0.0)) {
      std::ostringstream os;
      os << "nonphysical state at t = " << s.t << ": min rho = " << rmin << " (node " << kr
         << "), min theta = " << tmin << " (node " << kt << ")" << (finite ? "" : ", non-finite values");
      throw StateError(os.str());
    }
  }

  NSFConfig cfg_;
  GridPtr g_;
  ScalarField T_ext_;
  Vec theta_B_, bvals_, w_;
  VecPair gradG_, gradThB_, wb_;
  mutable long steps_ = 0;
};

}  // namespace lowmach
