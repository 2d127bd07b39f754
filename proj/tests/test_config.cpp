#include <gtest/gtest.h>

#include "lowmach/config.hpp"

using namespace lowmach;

namespace {

std::string message_of(const std::string& text) {
  try {
    validate_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Config, MinimalFileFillsDefaults) {
  auto c = validate_config("[grid]\nnr = 16\nnphi = 32\n");
  EXPECT_EQ(c.grid.nr, 16);
  EXPECT_EQ(c.grid.nphi, 32);
  ExperimentConfig d;
  EXPECT_EQ(c.beta, d.beta);
  EXPECT_EQ(c.epsilons, d.epsilons);
  EXPECT_EQ(c.theta0_form, Theta0Form::entropy);
  EXPECT_FALSE(c.lambda.has_value());
}

TEST(Config, EmptyTextIsTheDefaultExperiment) {
  auto c = validate_config("");
  EXPECT_EQ(echo_config(c), echo_config(ExperimentConfig{}));
}

TEST(Config, EchoIsDeterministicAndRoundTrips) {
  auto c = validate_config("[grid]\nnr = 16\nnphi = 32\n[scaling]\nepsilon = 0.3\n[sweep]\nepsilons = 0.4, 0.1\nseed = 17\n");
  const auto e = echo_config(c);
  EXPECT_EQ(e, echo_config(validate_config("[grid]\nnr = 16\nnphi = 32\n[scaling]\nepsilon = 0.3\n[sweep]\nepsilons = 0.4, 0.1\nseed = 17\n")));
  EXPECT_EQ(echo_config(validate_config(e)), e);
  EXPECT_TRUE(contains(e, "epsilons = 0.4, 0.1"));
  EXPECT_TRUE(contains(e, "seed = 17"));
  EXPECT_TRUE(contains(e, "lambda = thermo"));
}

TEST(Config, ExplicitLambda) {
  auto c = validate_config("[grid]\nnr = 8\nnphi = 16\n[ob]\nlambda = 0.25\n");
  ASSERT_TRUE(c.lambda.has_value());
  EXPECT_DOUBLE_EQ(*c.lambda, 0.25);
  EXPECT_TRUE(contains(message_of("[grid]\nnr = 8\nnphi = 16\n[ob]\nlambda = 1\n"), "lambda must lie in [0, 1)"));
}

TEST(Config, SmallBetaRejectedWithHypothesis) {
  auto m = message_of("[grid]\nnr = 8\nnphi = 16\n[thermo]\nbeta = 5\n");
  EXPECT_TRUE(contains(m, "[thermo] beta = 5"));
  EXPECT_TRUE(contains(m, "beta must exceed 6 (conductivity growth hypothesis)"));
}

TEST(Config, NonradialBoundaryTemperatureBreaksCoercivity) {
  auto m = message_of("[grid]\nnr = 16\nnphi = 32\n[boundary]\nouter_mode1 = 1\n");
  EXPECT_TRUE(contains(m, "coercivity hypothesis"));
  // the measured value is reported; it must be well above the tolerance
  const auto pos = m.find("|grad T_B . w|_2 = ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_GT(std::stod(m.substr(pos + 19)), 1e-2);
}

TEST(Config, UnknownKeysRejected) {
  auto m = message_of("[grid]\nnr = 8\nnphi = 16\nnz = 3\n[thermo]\nbeeta = 7\n");
  EXPECT_TRUE(contains(m, "[grid] nz"));
  EXPECT_TRUE(contains(m, "[thermo] beeta"));
}

TEST(Config, MalformedValuesRejected) {
  EXPECT_THROW(validate_config("[grid]\nnr = sixteen\n"), ConfigError);
  EXPECT_THROW(validate_config("[grid\nnr = 16\n"), ConfigError);
  EXPECT_THROW(validate_config("[sweep]\nepsilons = 0.4, x\n"), ConfigError);
  EXPECT_THROW(validate_config("[nsf]\nscheme = euler\n"), ConfigError);
}

TEST(Config, EpsilonsMustDecrease) {
  auto m = message_of("[grid]\nnr = 8\nnphi = 16\n[sweep]\nepsilons = 0.1, 0.2\n");
  EXPECT_TRUE(contains(m, "strictly decreasing"));
  EXPECT_NO_THROW(validate_config("[grid]\nnr = 8\nnphi = 16\n[sweep]\nepsilons =\n"));
}

TEST(Config, ReportsEveryViolation) {
  auto m = message_of("[grid]\nnr = 8\nnphi = 16\n[thermo]\nbeta = 5\nkappa0 = 0\n");
  EXPECT_TRUE(contains(m, "beta must exceed 6"));
  EXPECT_TRUE(contains(m, "kappa0 must be positive"));
}

TEST(Config, VanishingBulkViscosityNotImplemented) {
  EXPECT_TRUE(contains(message_of("[grid]\nnr = 8\nnphi = 16\n[thermo]\neta0 = 0\n"), "not implemented"));
}

TEST(Config, BuildersCarryTheSettings) {
  auto c = validate_config("[grid]\nnr = 8\nnphi = 16\n[scaling]\ng0 = 0.7\n[output]\nt_end = 0.3\n");
  auto g = c.make_grid_ptr();
  auto n = nsf_config(c, g, 0.25);
  EXPECT_EQ(n.epsilon, 0.25);
  EXPECT_EQ(n.T_end, 0.3);
  EXPECT_NEAR(integrate(n.G), 0.0, 1e-13);
  EXPECT_LE((n.G.v - build_G(g, c).v).cwiseAbs().maxCoeff(), 0.0);
  auto o = ob_config(c, g);
  EXPECT_EQ(o.T_end, 0.3);
  EXPECT_LE((o.R0.v - n.init.rho0.v).cwiseAbs().maxCoeff(), 0.0);
}
