#pragma once

// Oberbeck-Boussinesq limit solver: projection for the momentum, backward
// Euler for the heat equation with the non-local boundary condition, density
// deviation recovered from the integrated Boussinesq relation.

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lowmach/helmholtz.hpp"
#include "lowmach/io.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

// Initial temperature deviation from the transported linearised entropy
// S0 = s_rho R0 + s_theta T0:
//   entropy:        c_p Theta(0)       = theta_bar (S0 + alpha G)
//   plus_alpha_g:   rho_bar c_p Theta(0) = theta_bar (S0 + alpha G)
//   minus_alpha_g:  rho_bar c_p Theta(0) = theta_bar (S0 - alpha G)
// The first follows from the Boussinesq relation with mean(T(0)) = 0; the other
// two are kept for comparison (they agree with it for rho_bar = 1 up to the sign).
enum class Theta0Form { entropy, plus_alpha_g, minus_alpha_g };

inline Theta0Form parse_theta0_form(const std::string& s) {
  if (s == "entropy") return Theta0Form::entropy;
  if (s == "plus_alpha_g") return Theta0Form::plus_alpha_g;
  if (s == "minus_alpha_g") return Theta0Form::minus_alpha_g;
  throw ConfigError("unknown theta0_form '" + s + "' (expected entropy, plus_alpha_g or minus_alpha_g)");
}

inline std::string to_string(Theta0Form f) {
  switch (f) {
    case Theta0Form::entropy: return "entropy";
    case Theta0Form::plus_alpha_g: return "plus_alpha_g";
    case Theta0Form::minus_alpha_g: return "minus_alpha_g";
  }
  return "?";
}

// Everything the limit system needs at the reference state.
struct OBCoefficients {
  double rho_bar = 1.0, theta_bar = 1.0;
  double p_rho = 0, p_theta = 0, s_rho = 0, s_theta = 0;
  double alpha = 0, c_p = 0, lambda = 0;
  double mu = 0, eta = 0, kappa = 0;

  double k() const { return lambda / (1.0 - lambda); }
};

inline OBCoefficients ob_coefficients(const ThermoModel& m, const ReferenceState& ref,
                                      std::optional<double> lambda_override = {}) {
  const auto q = partials(m, ref.rho_bar, ref.theta_bar);
  const auto c = coefficients(m, ref);
  const auto tr = transport(m, ref.theta_bar);
  OBCoefficients o;
  o.rho_bar = ref.rho_bar;
  o.theta_bar = ref.theta_bar;
  o.p_rho = q.p_rho;
  o.p_theta = q.p_theta;
  o.s_rho = q.s_rho;
  o.s_theta = q.s_theta;
  o.alpha = c.alpha;
  o.c_p = c.c_p;
  o.lambda = lambda_override.value_or(c.lambda);
  o.mu = tr.mu;
  o.eta = tr.eta;
  o.kappa = tr.kappa;
  if (!(o.lambda >= 0.0 && o.lambda < 1.0)) throw ConfigError("[ob] lambda must lie in [0, 1)");
  return o;
}

struct OBConfig {
  GridPtr grid;
  ThermoModel model;
  ReferenceState ref;
  ScalarField G;
  BoundaryData T_B;
  ScalarField R0, T0;
  VectorField u0;
  std::optional<double> lambda;       // ablation override of the thermodynamic value
  bool nonlocal_bc = true;            // false: plain Dirichlet Theta = T_B
  Theta0Form theta0_form = Theta0Form::entropy;
  double cfl_convective = 0.5;
  double cfl_diffusive = 0.4;
  double dt_max = INFINITY;           // optional cap on the step
  double T_end = 1.0;
  double output_interval = 0.05;
  PoissonMethod poisson = PoissonMethod::spectral;
  double heat_tol = 1e-13;
  // Manufactured-solution hooks: extra heat source (per unit rho_bar c_p) and
  // time-dependent boundary data.
  std::function<Vec(double t)> heat_source;
  std::function<BoundaryData(double t)> boundary;
};

struct OBState {
  VectorField U;
  ScalarField Theta;  // temperature deviation entering the heat equation
  ScalarField R;      // density deviation, from the Boussinesq relation
  ScalarField Pi;     // pressure, mean zero
  double t = 0.0;
  double mean_T = 0.0;  // mean of the limit temperature T = Theta + lambda mean(T)

  ScalarField frak_T(double lambda) const {
    ScalarField T = Theta;
    T.v.array() += lambda * mean_T;
    return T;
  }
};

struct NonlocalSolve {
  Vec theta;
  double shift = 0.0;          // boundary value offset s = -k mean(Theta)
  double denominator = 1.0;    // 1 + k mean(Theta_b)
  double trace_defect = 0.0;   // max |Theta - (T_B - k mean Theta)| on the rings
};

// sigma Theta - nu L Theta = f in the interior with the trace
// Theta = T_B - k mean(Theta), k = lambda / (1 - lambda), by superposition of
// two Dirichlet solves. theta_b (the solve with unit data and zero rhs) can be
// cached by the caller since it only depends on sigma and nu.
inline NonlocalSolve solve_nonlocal_bc(const DomainGrid& g, double sigma, double nu, const Vec& f,
                                       const Vec& bvals, double lambda, double tol = 1e-13,
                                       const Vec* theta_b = nullptr, const Vec* guess = nullptr) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw DomainError("solve_nonlocal_bc: lambda must lie in [0, 1)");
  NonlocalSolve out;
  out.theta = solve_dirichlet(g, sigma, nu, f, bvals, tol, guess);
  const double k = lambda / (1.0 - lambda);
  if (k != 0.0) {
    Vec tb;
    if (theta_b) {
      tb = *theta_b;
    } else {
      tb = solve_dirichlet(g, sigma, nu, Vec::Zero(g.size()), Vec::Ones(g.size()), tol);
    }
    const double ma = mean(g, out.theta), mb = mean(g, tb);
    out.denominator = 1.0 + k * mb;
    if (std::abs(out.denominator) < 1e-12) {
      std::ostringstream os;
      os << "non-local boundary condition is degenerate: 1 + k mean(Theta_b) = " << out.denominator;
      throw SolverError(os.str());
    }
    out.shift = -k * ma / out.denominator;
    out.theta += out.shift * tb;
  }
  const double target = -k * mean(g, out.theta);
  const int np = g.nphi(), n = g.size();
  for (int j = 0; j < np; ++j) {
    out.trace_defect = std::max(out.trace_defect, std::abs(out.theta[j] - (bvals[j] + target)));
    out.trace_defect = std::max(out.trace_defect, std::abs(out.theta[n - np + j] - (bvals[n - np + j] + target)));
  }
  return out;
}

struct OBSeriesRow {
  double t, kinetic, mean_theta, mean_T, max_div, trace_defect, boussinesq_residual;
};

class OBSolver {
 public:
  explicit OBSolver(OBConfig cfg) : cfg_(std::move(cfg)), g_(cfg_.grid), poisson_(g_) {
    const auto& g = *g_;
    require_same_grid(g_, cfg_.G.grid);
    co_ = ob_coefficients(cfg_.model, cfg_.ref, cfg_.lambda);
    if (!cfg_.nonlocal_bc) co_.lambda = 0.0;
    gradG_ = grad(g, cfg_.G.v);
    w_ = g.weights();
  }

  const OBConfig& config() const { return cfg_; }
  const OBCoefficients& coeffs() const { return co_; }
  const NeumannPoisson& poisson() const { return poisson_; }

  ScalarField initial_theta() const {
    const auto& c = co_;
    require_same_grid(g_, cfg_.R0.grid);
    require_same_grid(g_, cfg_.T0.grid);
    Vec S0 = c.s_rho * cfg_.R0.v + c.s_theta * cfg_.T0.v;
    Vec th;
    switch (cfg_.theta0_form) {
      case Theta0Form::entropy: th = c.theta_bar / c.c_p * (S0 + c.alpha * cfg_.G.v); break;
      case Theta0Form::plus_alpha_g: th = c.theta_bar / (c.rho_bar * c.c_p) * (S0 + c.alpha * cfg_.G.v); break;
      case Theta0Form::minus_alpha_g: th = c.theta_bar / (c.rho_bar * c.c_p) * (S0 - c.alpha * cfg_.G.v); break;
    }
    return ScalarField(g_, th);
  }

  OBState init_state() const {
    const auto& g = *g_;
    require_same_grid(g_, cfg_.u0.grid);
    const double area = g.area();
    if (std::abs(integrate(cfg_.R0)) > 1e-12 * area * std::max(1.0, cfg_.R0.v.cwiseAbs().maxCoeff()))
      throw ConfigError("[initial] density perturbation must have zero mean");
    if (std::abs(integrate(cfg_.T0)) > 1e-12 * area * std::max(1.0, cfg_.T0.v.cwiseAbs().maxCoeff()))
      throw ConfigError("[initial] temperature perturbation must have zero mean");
    OBState s;
    s.U = helmholtz_split(poisson_, cfg_.u0, cfg_.poisson).solenoidal;
    s.Theta = initial_theta();
    // mean(T(0)) = 0 under the zero-mean data, so Theta(0) = T(0)
    s.mean_T = mean(s.Theta) / (1.0 - co_.lambda);
    s.R = density_deviation(s.Theta.v, s.mean_T);
    s.Pi = ScalarField(g_);
    return s;
  }

  // R from p_rho R + p_theta T = rho_bar G + p_theta mean(T).
  ScalarField density_deviation(const Vec& Theta, double mean_T) const {
    const auto& c = co_;
    Vec T = (Theta.array() + c.lambda * mean_T).matrix();
    Vec R = (c.rho_bar * cfg_.G.v + c.p_theta * (Vec::Constant(T.size(), mean_T) - T)) / c.p_rho;
    return ScalarField(g_, R);
  }

  // max-norm of grad(p_rho R + p_theta T - rho_bar G)
  double boussinesq_residual(const OBState& s) const {
    const auto& c = co_;
    Vec T = (s.Theta.v.array() + c.lambda * s.mean_T).matrix();
    Vec q = c.p_rho * s.R.v + c.p_theta * T - c.rho_bar * cfg_.G.v;
    auto gq = grad(*g_, q);
    return std::max(gq.r.cwiseAbs().maxCoeff(), gq.phi.cwiseAbs().maxCoeff());
  }

  double kinetic_energy(const OBState& s) const { return 0.5 * co_.rho_bar * inner(s.U, s.U); }

  double max_div(const OBState& s) const { return div(*g_, s.U.r, s.U.phi).cwiseAbs().maxCoeff(); }

  double max_dt(const OBState& s) const {
    const auto& g = *g_;
    const double umax = std::sqrt((s.U.r.cwiseAbs2() + s.U.phi.cwiseAbs2()).maxCoeff());
    const double nu = co_.mu / co_.rho_bar;
    const double h = g.h_eff();
    double dt = cfg_.dt_max;
    if (umax > 0) dt = std::min(dt, cfg_.cfl_convective * h / umax);
    if (nu > 0) dt = std::min(dt, cfg_.cfl_diffusive * h * h / (2.0 * nu));
    return dt;
  }

  OBState step(const OBState& s, double dt) const {
    const auto& g = *g_;
    const auto& c = co_;
    const double rb = c.rho_bar;

    // momentum predictor with the old pressure
    const Vec& ur = s.U.r;
    const Vec& up = s.U.phi;
    Vec Trr = ur.cwiseProduct(ur), Trp = ur.cwiseProduct(up), Tpp = up.cwiseProduct(up);
    Vec conv_r = over_r(g, ddr_sbp(g, times_r(g, Trr)) + ddphi(g, Trp) - Tpp);
    Vec conv_p = over_r(g, ddr_sbp(g, times_r(g, Trp)) + ddphi(g, Tpp) + Trp);
    auto lap = vector_laplace(g, ur, up);
    auto gPi = grad_sbp(g, s.Pi.v);
    VectorField Us(g_);
    Us.r = ur + dt * (-conv_r + (c.mu * lap.r + s.R.v.cwiseProduct(gradG_.r) - gPi.r) / rb);
    Us.phi = up + dt * (-conv_p + (c.mu * lap.phi + s.R.v.cwiseProduct(gradG_.phi) - gPi.phi) / rb);
    apply_slip(Us);

    // projection
    auto split = helmholtz_split(poisson_, Us, cfg_.poisson, 1e-12);
    OBState n;
    n.t = s.t + dt;
    n.U = std::move(split.solenoidal);
    n.Pi = ScalarField(g_, remove_mean(g, s.Pi.v + (rb / dt) * split.potential.v));

    // heat equation: explicit advection, implicit diffusion, non-local trace
    auto gT = grad(g, s.Theta.v);
    Vec f = s.Theta.v / dt - (n.U.r.cwiseProduct(gT.r) + n.U.phi.cwiseProduct(gT.phi)) +
            (c.theta_bar * c.alpha / c.c_p) * (n.U.r.cwiseProduct(gradG_.r) + n.U.phi.cwiseProduct(gradG_.phi));
    if (cfg_.heat_source) f += cfg_.heat_source(n.t);
    const Vec bvals = boundary_vector(g, cfg_.boundary ? cfg_.boundary(n.t) : cfg_.T_B);
    const double nu_h = c.kappa / (rb * c.c_p);
    const Vec* tb = nullptr;
    if (c.lambda != 0.0) {
      if (cached_dt_ != dt) {
        theta_b_ = solve_dirichlet(g, 1.0 / dt, nu_h, Vec::Zero(g.size()), Vec::Ones(g.size()), cfg_.heat_tol);
        cached_dt_ = dt;
      }
      tb = &theta_b_;
    }
    auto sol = solve_nonlocal_bc(g, 1.0 / dt, nu_h, f, bvals, c.lambda, cfg_.heat_tol, tb, &s.Theta.v);
    last_trace_defect_ = sol.trace_defect;
    n.Theta = ScalarField(g_, std::move(sol.theta));
    n.mean_T = mean(n.Theta) / (1.0 - c.lambda);
    n.R = density_deviation(n.Theta.v, n.mean_T);
    if (!n.U.finite() || !n.Theta.finite()) {
      std::ostringstream os;
      os << "OB solver produced non-finite values at t = " << n.t;
      throw StateError(os.str());
    }
    return n;
  }

  double last_trace_defect() const { return last_trace_defect_; }

  struct Observers {
    std::function<void(const OBState&, double dt)> on_step;
    std::function<void(const OBState&)> on_output;
  };

  OBSeriesRow series_row(const OBState& s) const {
    return {s.t, kinetic_energy(s), mean(s.Theta), s.mean_T, max_div(s), last_trace_defect_,
            boussinesq_residual(s)};
  }

  OBState run(Observers obs = {}, std::vector<OBSeriesRow>* series = nullptr, double safety = 0.95) const {
    OBState s = init_state();
    last_trace_defect_ = 0.0;
    auto record = [&](const OBState& st) {
      if (series) series->push_back(series_row(st));
      if (obs.on_output) obs.on_output(st);
    };
    record(s);
    if (cfg_.T_end <= 0.0) return s;
    const int nout = std::max(1, int(std::llround(cfg_.T_end / cfg_.output_interval)));
    const double dto = cfg_.T_end / nout;
    for (int o = 1; o <= nout; ++o) {
      const double target = o * dto;
      // one uniform step per interval keeps the cached unit-trace solve valid
      const double remaining = target - s.t;
      const int nsub = std::max(1, int(std::ceil(remaining / (safety * max_dt(s)))));
      const double dt = remaining / nsub;
      for (int k = 0; k < nsub; ++k) {
        if (dt > max_dt(s) * (1.0 + 1e-12)) {
          std::ostringstream os;
          os << "OB time step " << dt << " exceeds the stability limit " << max_dt(s) << " at t = " << s.t;
          throw CflError(os.str(), max_dt(s));
        }
        s = step(s, dt);
        if (k == nsub - 1) s.t = target;
        if (obs.on_step) obs.on_step(s, dt);
      }
      record(s);
    }
    return s;
  }

  static CsvTable series_table(const std::vector<OBSeriesRow>& rows) {
    CsvTable t({"t", "kinetic", "mean_theta", "mean_T", "max_div", "trace_defect", "boussinesq_residual"});
    for (const auto& r : rows)
      t.row({r.t, r.kinetic, r.mean_theta, r.mean_T, r.max_div, r.trace_defect, r.boussinesq_residual});
    return t;
  }

 private:
  // u_r = 0 and d_r u_phi - u_phi / r = 0 on the rings (same closure as the NSF solver)
  void apply_slip(VectorField& U) const {
    const auto& g = *g_;
    const int n = g.nr(), np = g.nphi();
    zero_normal(g, U.r);
    const double a0 = 3.0 + 2.0 * g.dr() / g.r(0), aN = 3.0 - 2.0 * g.dr() / g.r(n);
    for (int j = 0; j < np; ++j) {
      U.phi[g.index(0, j)] = (4.0 * U.phi[g.index(1, j)] - U.phi[g.index(2, j)]) / a0;
      U.phi[g.index(n, j)] = (4.0 * U.phi[g.index(n - 1, j)] - U.phi[g.index(n - 2, j)]) / aN;
    }
  }

  OBConfig cfg_;
  GridPtr g_;
  NeumannPoisson poisson_;
  OBCoefficients co_;
  VecPair gradG_;
  Vec w_;
  mutable Vec theta_b_;
  mutable double cached_dt_ = -1.0;
  mutable double last_trace_defect_ = 0.0;
};

}  // namespace lowmach
