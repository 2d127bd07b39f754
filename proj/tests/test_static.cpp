#include <gtest/gtest.h>

#include <cmath>

#include "lowmach/helmholtz.hpp"
#include "lowmach/static_state.hpp"

using namespace lowmach;

namespace {

StaticProblem make_problem(GridPtr g, double eps, double g0, double tb_in, double tb_out) {
  StaticProblem pb;
  pb.grid = g;
  pb.G = ScalarField(g, remove_mean(*g, sample(g, [&](double r, double) { return -g0 / r; }).v));
  pb.T_ext = harmonic_extension(g, {Vec::Constant(g->nphi(), tb_in), Vec::Constant(g->nphi(), tb_out)});
  pb.epsilon = eps;
  return pb;
}

double max_abs(const Vec& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

class StaticTest : public ::testing::Test {
 protected:
  GridPtr g = make_grid(0.5, 1.0, 32, 64);
};

TEST_F(StaticTest, UnforcedFirstOrderVanishes) {
  auto pb = make_problem(g, 0.1, 0.0, 0.0, 0.0);
  EXPECT_EQ(max_abs(solve_first_order(pb).v), 0.0);
  auto sol = solve_newton(pb);
  EXPECT_LE(max_abs(sol.rho_tilde.v.array() - 1.0), 1e-14);
}

TEST_F(StaticTest, FirstOrderGravityOnly) {
  auto pb = make_problem(g, 0.1, 1.0, 0.0, 0.0);
  const double p_rho = partials(pb.model, 1.0, 1.0).p_rho;
  EXPECT_NEAR(p_rho, 1.66666666666673, 1e-12);
  EXPECT_LE(max_abs(solve_first_order(pb).v - pb.G.v / p_rho), 1e-14);
}

TEST_F(StaticTest, FirstOrderTemperatureOnly) {
  auto pb = make_problem(g, 0.1, 0.0, 0.5, -0.5);
  auto q = partials(pb.model, 1.0, 1.0);
  Vec expect = -(q.p_theta / q.p_rho) * remove_mean(*g, pb.T_ext.v);
  EXPECT_LE(max_abs(solve_first_order(pb).v - expect), 1e-14);
}

TEST_F(StaticTest, ZeroEpsilonIsTrivial) {
  auto pb = make_problem(g, 0.0, 1.0, 0.5, -0.5);
  auto sol = solve_newton(pb);
  EXPECT_EQ(sol.iterations, 0);
  EXPECT_EQ(max_abs(sol.rho_tilde.v.array() - 1.0), 0.0);
}

TEST_F(StaticTest, NewtonConvergesWithMassConstraint) {
  auto pb = make_problem(g, 0.1, 1.0, 0.5, -0.5);
  auto sol = solve_newton(pb);
  EXPECT_LE(sol.optimality, 1e-10);
  EXPECT_LE(sol.mean_defect, 1e-10);
  EXPECT_GT(sol.rho_tilde.v.minCoeff(), 0.0);
  EXPECT_GE(sol.iterations, 1);
  EXPECT_LE(sol.s1_residual, 1e-3 * pb.epsilon);
}

TEST_F(StaticTest, ScalingWithEpsilon) {
  std::vector<double> ratio, c2;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    auto pb = make_problem(g, eps, 1.0, 0.5, -0.5);
    auto sol = solve_newton(pb);
    ratio.push_back(max_abs(sol.rho_tilde.v.array() - 1.0) / eps);
    c2.push_back(max_abs(sol.rho_tilde.v - (Vec::Ones(g->size()) + eps * sol.first_order.v)) / (eps * eps));
  }
  for (double r : ratio) EXPECT_NEAR(r / ratio[0], 1.0, 0.1);
  EXPECT_NEAR(c2[1] / c2[0], 1.0, 0.2);
  EXPECT_NEAR(c2[2] / c2[1], 1.0, 0.2);
}

TEST_F(StaticTest, PositiveUpToHalf) {
  for (double eps : {0.1, 0.3, 0.5}) {
    auto sol = solve_newton(make_problem(g, eps, 1.0, 0.5, -0.5));
    EXPECT_GT(sol.rho_tilde.v.minCoeff(), 0.0);
  }
}

TEST_F(StaticTest, NonzeroMeanPotentialRejected) {
  auto pb = make_problem(g, 0.1, 1.0, 0.0, 0.0);
  pb.G.v.array() += 0.1;
  EXPECT_THROW(solve_newton(pb), ConfigError);
}
