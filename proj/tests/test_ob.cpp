#include <gtest/gtest.h>

#include <cmath>

#include "lowmach/ob.hpp"
#include "lowmach/scenario.hpp"

using namespace lowmach;

namespace {

OBConfig zero_config(GridPtr g) {
  OBConfig c;
  c.grid = g;
  c.G = ScalarField(g);
  c.T_B = radial_boundary(*g, 0.0, 0.0);
  c.R0 = ScalarField(g);
  c.T0 = ScalarField(g);
  c.u0 = VectorField(g);
  c.T_end = 0.1;
  c.output_interval = 0.05;
  return c;
}

OBConfig forced_config(GridPtr g) {
  OBConfig c = zero_config(g);
  c.G = radial_potential(g, 0.5);
  c.T_B = radial_boundary(*g, 0.25, -0.25);
  InitialProfile p;
  p.potential = 0.5;
  p.rho_mode1 = 0.5;
  auto d = make_initial(g, p);
  c.R0 = d.rho0;
  c.T0 = d.theta0;
  c.u0 = d.u0;
  return c;
}

double max_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

double ring_max(const DomainGrid& g, const Vec& f, double target_in, double target_out) {
  double m = 0;
  const int np = g.nphi(), n = g.size();
  for (int j = 0; j < np; ++j) {
    m = std::max(m, std::abs(f[j] - target_in));
    m = std::max(m, std::abs(f[n - np + j] - target_out));
  }
  return m;
}

}  // namespace

TEST(OBCoefficients, DefaultReferenceState) {
  auto c = ob_coefficients(ThermoModel{}, ReferenceState{});
  EXPECT_NEAR(c.lambda, 0.3615, 5e-4);
  EXPECT_NEAR(c.k(), c.lambda / (1.0 - c.lambda), 1e-15);
  EXPECT_NEAR(c.k(), 0.56617, 5e-4);
  EXPECT_THROW(ob_coefficients(ThermoModel{}, ReferenceState{}, 1.0), ConfigError);
  EXPECT_THROW(ob_coefficients(ThermoModel{}, ReferenceState{}, -0.1), ConfigError);
}

TEST(OBCoefficients, ParseTheta0Form) {
  EXPECT_EQ(parse_theta0_form("entropy"), Theta0Form::entropy);
  EXPECT_EQ(parse_theta0_form("minus_alpha_g"), Theta0Form::minus_alpha_g);
  EXPECT_EQ(to_string(Theta0Form::plus_alpha_g), "plus_alpha_g");
  EXPECT_THROW(parse_theta0_form("derived"), ConfigError);
}

TEST(OBInitial, ZeroDataGivesZeroState) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  OBSolver s(zero_config(g));
  auto st = s.init_state();
  EXPECT_EQ(max_abs(st.Theta.v), 0.0);
  EXPECT_EQ(max_abs(st.R.v), 0.0);
}

TEST(OBInitial, GravityOnlyMinusAlphaG) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = zero_config(g);
  c.G = radial_potential(g, 1.0);
  c.theta0_form = Theta0Form::minus_alpha_g;
  OBSolver s(c);
  const auto& co = s.coeffs();
  Vec expect = -(co.theta_bar * co.alpha / (co.rho_bar * co.c_p)) * c.G.v;
  EXPECT_LE(max_abs(s.initial_theta().v - expect), 1e-14);

  c.theta0_form = Theta0Form::entropy;
  OBSolver e(c);
  EXPECT_LE(max_abs(e.initial_theta().v + expect), 1e-14);
}

TEST(OBInitial, EntropyFormMatchesLinearisedEntropy) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = forced_config(g);
  OBSolver s(c);
  const auto& co = s.coeffs();
  Vec S0 = co.s_rho * c.R0.v + co.s_theta * c.T0.v;
  Vec expect = (co.theta_bar / co.c_p) * (S0 + co.alpha * c.G.v);
  EXPECT_LE(max_abs(s.initial_theta().v - expect), 1e-14);
  // R(0) satisfies the Boussinesq relation exactly
  auto st = s.init_state();
  EXPECT_LE(s.boussinesq_residual(st), 1e-12);
}

TEST(OBInitial, RejectsNonzeroMeanPerturbation) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = zero_config(g);
  c.R0 = ScalarField(g, Vec::Constant(g->size(), 0.2));
  OBSolver s(c);
  EXPECT_THROW(s.init_state(), ConfigError);
}

TEST(OBNonlocal, TraceIdentityUniformBoundary) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  const double lambda = ob_coefficients(ThermoModel{}, ReferenceState{}).lambda;
  const double k = lambda / (1.0 - lambda);
  Vec f = sample(g, [](double r, double phi) { return r * std::cos(phi) + 0.5; }).v;
  Vec b = boundary_vector(*g, radial_boundary(*g, 1.0, 1.0));
  auto sol = solve_nonlocal_bc(*g, 10.0, 0.05, f, b, lambda);
  const double target = 1.0 - k * mean(*g, sol.theta);
  EXPECT_LE(ring_max(*g, sol.theta, target, target), 1e-10);
  EXPECT_LE(sol.trace_defect, 1e-10);
  EXPECT_GT(sol.denominator, 1.0);
}

TEST(OBNonlocal, RejectsLambdaOutOfRange) {
  auto g = make_grid(0.5, 1.0, 8, 16);
  Vec z = Vec::Zero(g->size());
  EXPECT_THROW(solve_nonlocal_bc(*g, 1.0, 0.1, z, z, 1.0), DomainError);
}

TEST(OBNonlocal, TraceHoldsAtEveryStep) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = forced_config(g);
  c.T_B = radial_boundary(*g, 1.0, 1.0);
  OBSolver s(c);
  const double k = s.coeffs().k();
  double worst = 0, worst_direct = 0;
  OBSolver::Observers obs;
  obs.on_step = [&](const OBState& st, double) {
    worst = std::max(worst, s.last_trace_defect());
    const double target = 1.0 - k * mean(st.Theta);
    worst_direct = std::max(worst_direct, ring_max(*g, st.Theta.v, target, target));
  };
  s.run(obs);
  EXPECT_LE(worst, 1e-10);
  EXPECT_LE(worst_direct, 1e-10);
}

TEST(OBNonlocal, LambdaZeroMatchesPlainDirichlet) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = forced_config(g);
  c.lambda = 0.0;
  auto a = OBSolver(c).run();
  c.lambda.reset();
  c.nonlocal_bc = false;
  auto b = OBSolver(c).run();
  EXPECT_LE(max_abs(a.Theta.v - b.Theta.v), 1e-12);
  EXPECT_LE(max_abs(a.U.r - b.U.r), 1e-12);
  EXPECT_LE(max_abs(a.U.phi - b.U.phi), 1e-12);
  EXPECT_LE(max_abs(a.R.v - b.R.v), 1e-12);
}

TEST(OBSolver, ZeroIsAFixedPoint) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = zero_config(g);
  c.dt_max = 0.01;
  auto st = OBSolver(c).run();
  EXPECT_EQ(max_abs(st.Theta.v), 0.0);
  EXPECT_EQ(max_abs(st.U.r), 0.0);
  EXPECT_EQ(max_abs(st.U.phi), 0.0);
  EXPECT_EQ(max_abs(st.Pi.v), 0.0);
}

TEST(OBSolver, ConstantTemperatureRelaxesToZero) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = zero_config(g);
  c.model.kappa0 = 0.5;
  OBSolver s(c);
  auto st = s.init_state();
  st.Theta.v.setConstant(1.0);
  const double dt = 0.01;
  double prev = 1.0;
  for (int n = 0; n < 300; ++n) {
    st = s.step(st, dt);
    const double m = std::abs(mean(st.Theta));
    EXPECT_LE(m, prev + 1e-14);
    prev = m;
  }
  EXPECT_LE(max_abs(st.Theta.v), 1e-3);
}

TEST(OBSolver, DivergenceFreeAndBoussinesqAtOutputs) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = forced_config(g);
  c.T_end = 0.2;
  OBSolver s(c);
  std::vector<OBSeriesRow> rows;
  s.run({}, &rows);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) {
    EXPECT_LE(r.max_div, 1e-10) << "t = " << r.t;
    EXPECT_LE(r.boussinesq_residual, 1e-10) << "t = " << r.t;
    EXPECT_LE(r.trace_defect, 1e-10) << "t = " << r.t;
  }
}

TEST(OBSolver, KineticEnergyDecaysWithoutForcing) {
  auto g = make_grid(0.5, 1.0, 16, 32);
  auto c = forced_config(g);
  c.G = ScalarField(g);
  c.T_B = radial_boundary(*g, 0.0, 0.0);
  c.T_end = 0.2;
  OBSolver s(c);
  std::vector<OBSeriesRow> rows;
  s.run({}, &rows);
  for (size_t k = 1; k < rows.size(); ++k) EXPECT_LE(rows[k].kinetic, rows[k - 1].kinetic * (1.0 + 1e-12));
  EXPECT_LT(rows.back().kinetic, rows.front().kinetic);
}

// Manufactured temperature e^{-t} cos(pi x) cos(phi) with U = 0, plain Dirichlet trace.
TEST(OBSolver, ManufacturedHeatSolutionConverges) {
  auto error_on = [](int nr) {
    auto g = make_grid(0.5, 1.0, nr, 2 * nr);
    const double r1 = g->r1(), L = g->r2() - g->r1(), pi = std::numbers::pi;
    auto exact = [=](double r, double phi, double t) {
      return std::exp(-t) * std::cos(pi * (r - r1) / L) * std::cos(phi);
    };
    auto c = zero_config(g);
    c.nonlocal_bc = false;
    c.model.kappa0 = 0.5;
    c.T_end = 0.2;
    c.output_interval = 0.2;
    OBSolver probe(c);
    const auto& co = probe.coeffs();
    const double nu = co.kappa / (co.rho_bar * co.c_p);
    c.T0 = sample(g, [&](double r, double phi) { return co.c_p / (co.theta_bar * co.s_theta) * exact(r, phi, 0.0); });
    c.heat_source = [=](double t) {
      return sample(g, [&](double r, double phi) {
               const double x = (r - r1) / L;
               const double q = std::cos(pi * x), q1 = -pi / L * std::sin(pi * x), q2 = -(pi / L) * (pi / L) * q;
               const double lap = std::exp(-t) * std::cos(phi) * (q2 + q1 / r - q / (r * r));
               return -exact(r, phi, t) - nu * lap;
             }).v;
    };
    c.boundary = [=](double t) { return boundary_from(*g, [&](double r, double phi) { return exact(r, phi, t); }); };
    OBSolver s(c);
    auto st = s.run();
    EXPECT_LE(max_abs(st.U.r), 1e-14);
    Vec ex = sample(g, [&](double r, double phi) { return exact(r, phi, st.t); }).v;
    return norm_l2(*g, st.Theta.v - ex);
  };
  const double e1 = error_on(16), e2 = error_on(32);
  EXPECT_LT(e1, 1e-2);
  EXPECT_GT(e1 / e2, 3.0);
}
