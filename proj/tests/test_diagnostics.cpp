#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lowmach/diagnostics.hpp"
#include "lowmach/scenario.hpp"

using namespace lowmach;

namespace {

double max_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

FluidState uniform_state(const GridPtr& g, double eps) {
  FluidState s;
  s.rho = ScalarField(g, Vec::Ones(g->size()));
  s.theta = ScalarField(g, Vec::Ones(g->size()));
  s.m = s.M = VectorField(g);
  s.Sigma = ScalarField(g);
  s.epsilon = eps;
  return s;
}

NSFConfig default_like(GridPtr g, double eps) {
  NSFConfig c;
  c.grid = g;
  c.epsilon = eps;
  c.G = radial_potential(g, 0.5);
  c.T_B = radial_boundary(*g, 0.25, -0.25);
  c.init = make_initial(g, InitialProfile{});
  c.T_end = 0.05;
  c.output_interval = 0.05;
  return c;
}

}  // namespace

class DiagnosticsTest : public ::testing::Test {
 protected:
  GridPtr g = make_grid(0.5, 1.0, 16, 32);
  ThermoModel model;
  ReferenceState ref;
};

// ---------------------------------------------------------------------------
// relative energy

TEST_F(DiagnosticsTest, RelativeEnergyVanishesOnMatchedArguments) {
  Vec rho = Vec::LinSpaced(20, 0.3, 3.0), th = Vec::LinSpaced(20, 2.0, 0.4), u = Vec::LinSpaced(20, -1.0, 1.0);
  EXPECT_LE(max_abs(relative_energy_density(model, 0.1, rho, th, u, u, rho, th, u, u)), 1e-12);
}

TEST_F(DiagnosticsTest, RelativeEnergyIsQuadraticNearTheTarget) {
  const double eps = 0.2, d = 1e-4;
  for (double r0 : {0.7, 1.0, 1.8})
    for (double t0 : {0.6, 1.0, 1.5}) {
      Vec rt = Vec::Constant(1, r0), tt = Vec::Constant(1, t0), z = Vec::Zero(1);
      Vec r = Vec::Constant(1, r0 + d), t = Vec::Constant(1, t0 - 2 * d);
      const auto q = partials(model, r0, t0);
      const double expect = 0.5 * (q.p_rho / r0 * d * d + r0 * q.e_theta / t0 * 4 * d * d) / (eps * eps);
      const double E = relative_energy_density(model, eps, r, t, z, z, rt, tt, z, z)[0];
      EXPECT_NEAR(E / expect, 1.0, 1e-3) << r0 << " " << t0;
    }
}

TEST_F(DiagnosticsTest, RelativeEnergyNonnegativeOnRandomPairs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.2, 4.0), V(-2.0, 2.0);
  const int n = 400;
  Vec r(n), t(n), rt(n), tt(n), ur(n), up(n), z = Vec::Zero(n);
  for (int k = 0; k < n; ++k) {
    r[k] = U(rng);
    t[k] = U(rng);
    rt[k] = U(rng);
    tt[k] = U(rng);
    ur[k] = V(rng);
    up[k] = V(rng);
  }
  EXPECT_GE(relative_energy_density(model, 0.1, r, t, ur, up, rt, tt, z, z).minCoeff(), 0.0);
  EXPECT_THROW(relative_energy_density(model, 0.1, -r, t, ur, up, rt, tt, z, z), DomainError);
}

// ---------------------------------------------------------------------------
// essential / residual split

TEST_F(DiagnosticsTest, ResidualMeasureCountsExcludedNodes) {
  Vec rho = Vec::Ones(g->size()), th = Vec::Ones(g->size());
  const auto K = EssentialSet::around(ref);
  auto a = ess_res_split(*g, rho, th, 0.1, ref, K);
  EXPECT_EQ(a.residual_measure, 0.0);
  EXPECT_EQ(a.ess_rho_norm, 0.0);
  const int i = 5, k = g->index(i, 3);
  rho[k] = 3.0;
  auto b = ess_res_split(*g, rho, th, 0.1, ref, K);
  EXPECT_DOUBLE_EQ(b.residual_measure, g->weight(i));
  EXPECT_DOUBLE_EQ(b.residual_mass, g->weight(i) * (std::pow(3.0, 5.0 / 3.0) + 1.0));
  EXPECT_NEAR(b.essential_fraction, 1.0 - g->weight(i) / g->area(), 1e-15);
}

TEST_F(DiagnosticsTest, EssentialSetMustContainReference) {
  EXPECT_NO_THROW(EssentialSet::around(ref).validate(ref));
  EXPECT_THROW((EssentialSet{1.0, 2.0, 0.5, 2.0}.validate(ref)), ConfigError);
  EXPECT_THROW((EssentialSet{0.0, 2.0, 0.5, 2.0}.validate(ref)), ConfigError);
}

// ---------------------------------------------------------------------------
// acoustic potential

TEST_F(DiagnosticsTest, AcousticPotentialOfUniformState) {
  auto s = uniform_state(g, 0.1);
  EXPECT_EQ(max_abs(acoustic_state(s, model, ref, ScalarField(g)).Z.v), 0.0);
  // a potential alone shifts Z by -rho_bar G / omega
  auto G = radial_potential(g, 0.5);
  const double omega = coefficients(model, ref).omega;
  EXPECT_LE(max_abs(acoustic_state(s, model, ref, G).Z.v + G.v / omega), 1e-15);
}

TEST_F(DiagnosticsTest, AcousticPotentialLinearisation) {
  const double eps = 0.1, d = 1e-6;
  auto s = uniform_state(g, eps);
  Vec dr = cosine_mode(*g, 1, 1), dt = cosine_mode(*g, 0, 2);
  s.rho.v += d * dr;
  s.theta.v += d * dt;
  const auto c = coefficients(model, ref);
  const auto q = partials(model, 1.0, 1.0);
  Vec expect = (c.omega * dr + c.A * (q.s_rho * dr + q.s_theta * dt)) * (d / (eps * c.omega));
  auto Z = acoustic_state(s, model, ref, ScalarField(g)).Z.v;
  EXPECT_LE(max_abs(Z - expect), 1e-5 * max_abs(expect));
}

// ---------------------------------------------------------------------------
// test functions and the wave system

TEST_F(DiagnosticsTest, TimeBump) {
  EXPECT_EQ(time_bump(0.0, 2.0), 0.0);
  EXPECT_EQ(time_bump(2.0, 2.0), 0.0);
  EXPECT_DOUBLE_EQ(time_bump(1.0, 2.0), 1.0);
  for (double t : {0.1, 0.7, 1.3, 1.9}) {
    const double h = 1e-6;
    const double fd = (time_bump(t + h, 2.0) - time_bump(t - h, 2.0)) / (2 * h);
    EXPECT_NEAR(time_bump_dt(t, 2.0), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_F(DiagnosticsTest, SolenoidalTestsAreTraceFree) {
  auto tests = solenoidal_tests(g);
  ASSERT_EQ(tests.size(), 5u);
  const int np = g->nphi(), n = g->size();
  for (const auto& t : tests) {
    EXPECT_LE(max_abs(t.G.rr + t.G.pp), 1e-12) << t.name;
    EXPECT_EQ(max_abs(t.r.head(np)), 0.0) << t.name;
    EXPECT_EQ(max_abs(t.r.tail(np)), 0.0) << t.name;
    EXPECT_EQ(t.r.size(), n);
  }
}

TEST_F(DiagnosticsTest, RandomTestsAreSeededSolenoidalCombinations) {
  auto a = random_solenoidal_tests(g, 9, 3), b = random_solenoidal_tests(g, 9, 3), c = random_solenoidal_tests(g, 10, 3);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[2].name, "random_2");
  for (size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(max_abs(a[k].phi - b[k].phi), 0.0);
    EXPECT_GT(max_abs(a[k].phi - c[k].phi), 0.0);
    EXPECT_LE(max_abs(a[k].G.rr + a[k].G.pp), 1e-12);
    EXPECT_GT(max_abs(a[k].G.rp + a[k].G.pr), 0.0);
  }
  EXPECT_TRUE(random_solenoidal_tests(g, 9, 0).empty());
}

TEST_F(DiagnosticsTest, WaveModeSolutionSolvesTheDiscreteSystem) {
  NeumannPoisson P(g);
  const double omega = coefficients(model, ref).omega;
  for (int m : {0, 1, 2}) {
    WaveModeSolution w(g, acoustic_mode(P, m), 0.2, omega);
    for (double t : {0.0, 0.13, 0.5, 1.7}) EXPECT_LE(w.residual(t), 1e-8) << m << " " << t;
  }
  auto low = lowest_acoustic_mode(P);
  for (int m = 0; m <= 4; ++m) EXPECT_LE(low.Lambda, acoustic_mode(P, m).Lambda);
}

TEST_F(DiagnosticsTest, WaveResidualsVanishOnTheExactModeSolution) {
  NeumannPoisson P(g);
  const double omega = coefficients(model, ref).omega, eps = 0.2;
  auto mode = acoustic_mode(P, 1);
  WaveModeSolution w(g, mode, eps, omega);
  const double T = 3 * w.period();
  std::vector<ScalarTest> st{make_scalar_test(g, "mode", mode.e)};
  // only the trapezoid error is left, and with the bump it decays faster than any power
  auto run = [&](int n) {
    WaveResiduals x(g, eps, omega, T, st, gradient_tests(g));
    for (int k = 0; k <= n; ++k) x.sample(T * k / n, w.Z(T * k / n), w.m(T * k / n));
    return std::max(x.max_r1(), x.max_r2());
  };
  const double a = run(100), b = run(200);
  EXPECT_GT(a / b, 100.0);
  EXPECT_LE(run(400), 1e-13);
  EXPECT_THROW(
      {
        WaveResiduals x(g, eps, omega, T, st, {}, 0.01);
        x.sample(0.0, w.Z(0), w.m(0));
        x.sample(0.05, w.Z(0.05), w.m(0.05));
      },
      Error);
}

TEST_F(DiagnosticsTest, FrequencyProbe) {
  FrequencyProbe p;
  for (int k = 0; k <= 2000; ++k) {
    const double t = 0.005 * k;
    p.sample(t, std::sin(3.0 * t + 0.4));
  }
  EXPECT_GE(p.crossings(), 8);
  EXPECT_NEAR(p.angular_frequency(), 3.0, 1e-4);
  FrequencyProbe q;
  q.sample(0.0, 1.0);
  q.sample(1.0, -1.0);
  EXPECT_THROW(q.angular_frequency(), Error);
}

// ---------------------------------------------------------------------------
// mass pairing and convective functionals

TEST_F(DiagnosticsTest, MassPairingMatchesConservativeScheme) {
  NSFSolver s(default_like(g, 0.2));
  auto s0 = s.init_state();
  auto s1 = s.run();
  for (const auto& t : scalar_tests(g)) EXPECT_LE(mass_pairing_residual(t, s1, s0.rho), 1e-10) << t.name;
}

TEST_F(DiagnosticsTest, ConvectiveFunctionalIsLinearInTheTest) {
  NeumannPoisson P(g);
  auto base = solenoidal_tests(g);
  const double a = 0.7, b = -1.3;
  const auto &t1 = base[2], &t2 = base[4];
  VectorTest c;
  c.name = "combo";
  c.r = a * t1.r + b * t2.r;
  c.phi = a * t1.phi + b * t2.phi;
  c.div = a * t1.div + b * t2.div;
  c.G = {a * t1.G.rr + b * t2.G.rr, a * t1.G.rp + b * t2.G.rp, a * t1.G.pr + b * t2.G.pr, a * t1.G.pp + b * t2.G.pp};
  ConvectiveFunctionals F(g, &P, {t1, t2, c, base[0]}, 1.0);
  F.set_bump(0.2);
  NSFSolver s(default_like(g, 0.2));
  NSFSolver::Observers obs;
  auto feed = [&](const FluidState& st) { F.sample(st.t, st.m, st.velocity(), nullptr, nullptr); };
  obs.on_step = [&](const FluidState& st, double) { feed(st); };
  feed(s.init_state());
  s.run(obs);
  const auto& D = F.D_signed();
  const auto& A = F.A_signed();
  const double scale = std::max(std::abs(D[0]), std::abs(D[1]));
  EXPECT_GT(scale, 0.0);
  EXPECT_LE(std::abs(D[2] - (a * D[0] + b * D[1])), 1e-12 * scale);
  EXPECT_LE(std::abs(A[2] - (a * A[0] + b * A[1])), 1e-12 * std::max(std::abs(A[0]), std::abs(A[1])));
  // the rigid rotation has an antisymmetric gradient, which annihilates rho u (x) u
  EXPECT_LE(std::abs(D[3]), 1e-12 * scale);
}

TEST_F(DiagnosticsTest, HelmholtzFilteringReproducesTheIntegrand) {
  NeumannPoisson P(g);
  NSFSolver s(default_like(g, 0.2));
  auto st = s.run();
  auto u = st.velocity();
  auto h = helmholtz_split(P, st.m);
  for (const auto& t : solenoidal_tests(g)) {
    const double direct = tensor_pairing(*g, st.m.r, st.m.phi, u.r, u.phi, t.G);
    const double split = tensor_pairing(*g, h.solenoidal.r + h.gradient.r, h.solenoidal.phi + h.gradient.phi, u.r,
                                        u.phi, t.G);
    EXPECT_LE(std::abs(direct - split), 1e-10 * std::max(1.0, std::abs(direct))) << t.name;
  }
}

// ---------------------------------------------------------------------------
// limit errors, OB trajectory, uniform bounds

TEST_F(DiagnosticsTest, LimitErrorsOfConstantDifference) {
  LimitErrorAccumulator acc(g, 1.0, 0.5, 0.1);
  Vec one = Vec::Ones(g->size()), z = Vec::Zero(g->size());
  for (int k = 0; k <= 100; ++k) acc.sample(0.01 * k, 2.0 * one, z, one, z);
  auto r = acc.result();
  EXPECT_EQ(r.windows, 3);
  EXPECT_TRUE(r.warning.empty());
  EXPECT_NEAR(r.rho_avg, 2.0 * std::pow(g->area(), 0.6), 1e-12);
  EXPECT_EQ(r.theta_avg, 0.0);
  EXPECT_NEAR(r.u_avg, std::sqrt(g->area()), 1e-12);
  EXPECT_NEAR(r.u_inst_rms, std::sqrt(g->area()), 1e-12);
}

TEST_F(DiagnosticsTest, LimitErrorsAverageOutOscillations) {
  LimitErrorAccumulator acc(g, 1.0, 1.0, 0.02);
  Vec one = Vec::Ones(g->size()), z = Vec::Zero(g->size());
  for (int k = 0; k <= 4000; ++k) {
    const double t = k / 4000.0;
    acc.sample(t, z, z, std::sin(2 * std::numbers::pi * 50 * t) * one, z);
  }
  auto r = acc.result();
  EXPECT_LT(r.u_avg, 1e-3 * r.u_inst_rms);
}

TEST_F(DiagnosticsTest, ShortAveragingWindowWarns) {
  LimitErrorAccumulator acc(g, 1.0, 1.0, 0.6);
  EXPECT_NE(acc.result().warning.find("shorter than two acoustic periods"), std::string::npos);
  EXPECT_THROW(LimitErrorAccumulator(g, 1.0, 0.0, 0.1), ConfigError);
}

TEST_F(DiagnosticsTest, OBTrajectoryInterpolatesLinearly) {
  OBTrajectory tr(0.0);
  OBState a, b;
  a.U = b.U = VectorField(g);
  a.R = ScalarField(g);
  b.R = ScalarField(g, Vec::Constant(g->size(), 2.0));
  a.Theta = b.Theta = a.Pi = b.Pi = ScalarField(g);
  a.t = 0.0;
  b.t = 0.5;
  tr.push(a);
  tr.push(b);
  tr.push(a);  // out of order, ignored
  EXPECT_EQ(tr.size(), 2u);
  EXPECT_DOUBLE_EQ(tr.at(0.125).R[0], 0.5);
  EXPECT_THROW(tr.at(0.6), Error);
  EXPECT_THROW(OBTrajectory().at(0.0), Error);
}

TEST_F(DiagnosticsTest, UniformBoundsOfUniformState) {
  UniformBoundMonitor mon(g, ref, EssentialSet::around(ref));
  auto s = uniform_state(g, 0.1);
  mon.sample(s);
  s.t = 0.5;
  mon.sample(s);
  for (double v : mon.bounds().values()) EXPECT_EQ(v, 0.0);
}
