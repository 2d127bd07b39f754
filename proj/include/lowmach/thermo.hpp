#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>

#include "lowmach/error.hpp"

namespace lowmach {

// Monatomic structural function P(Z), Z = rho / theta^{3/2}.
// `entropy` is optional; when empty the entropy function is obtained by
// quadrature of S'(Z) = -(3/2) H(Z) / Z^2 with S(inf) = 0.
struct StructuralFunction {
  std::string name;
  std::function<double(double)> P;
  std::function<double(double)> dP;
  std::function<double(double)> entropy;
  std::function<double(double)> dentropy;
};

inline StructuralFunction default_gas(double p_inf) {
  StructuralFunction f;
  f.name = "default";
  f.P = [p_inf](double z) { return z * std::exp(-z) + p_inf * std::pow(z, 5.0 / 3.0); };
  f.dP = [p_inf](double z) {
    return std::exp(-z) * (1.0 - z) + (5.0 / 3.0) * p_inf * std::cbrt(z * z);
  };
  // S(Z) = 1.5 e^{-Z} + E1(Z)
  f.entropy = [](double z) { return 1.5 * std::exp(-z) + boost::math::expint(1, z); };
  f.dentropy = [](double z) { return -1.5 * std::exp(-z) * (2.0 / 3.0 + z) / z; };
  return f;
}

// Boyle-Mariotte branch, only used as an analytic test point.
inline StructuralFunction ideal_gas() {
  StructuralFunction f;
  f.name = "ideal";
  f.P = [](double z) { return z; };
  f.dP = [](double) { return 1.0; };
  f.entropy = [](double z) { return -std::log(z); };
  f.dentropy = [](double z) { return -1.0 / z; };
  return f;
}

inline StructuralFunction radiation_only() {
  StructuralFunction f;
  f.name = "radiation";
  f.P = [](double) { return 0.0; };
  f.dP = [](double) { return 0.0; };
  f.entropy = [](double) { return 0.0; };
  f.dentropy = [](double) { return 0.0; };
  return f;
}

// Negative control: a gas whose entropy is scaled while P is not.
inline StructuralFunction scaled_entropy(StructuralFunction base, double factor) {
  auto s = base.entropy, ds = base.dentropy;
  base.name += "-scaled";
  base.entropy = [s, factor](double z) { return factor * s(z); };
  base.dentropy = [ds, factor](double z) { return factor * ds(z); };
  return base;
}

struct ThermoModel {
  StructuralFunction P = default_gas(1.0);
  double p_inf = 1.0;
  double a = 1.0;
  double mu0 = 0.05;
  double eta0 = 0.05;
  double kappa0 = 0.05;
  double beta = 7.0;
  double z_max = 1e3;  // quadrature cutoff for the entropy function
};

struct ReferenceState {
  double rho_bar = 1.0;
  double theta_bar = 1.0;
};

struct MaterialCoefficients {
  double alpha = 0, c_p = 0, lambda = 0, A = 0, omega = 0;
};

// All first partials at one state.
struct Partials {
  double p = 0, e = 0, s = 0;
  double p_rho = 0, p_theta = 0;
  double e_rho = 0, e_theta = 0;
  double s_rho = 0, s_theta = 0;
};

struct Transport {
  double mu = 0, eta = 0, kappa = 0;
};

namespace detail {

inline void check_theta(double theta) {
  if (!std::isfinite(theta) || theta <= 0.0)
    throw DomainError("temperature must be finite and positive, got " + std::to_string(theta));
}

inline void check_rho(double rho, bool allow_zero) {
  if (!std::isfinite(rho) || rho < 0.0 || (!allow_zero && rho == 0.0))
    throw DomainError("density must be finite and positive, got " + std::to_string(rho));
}

inline double fd_step(double x, double h) { return h * std::max(1.0, std::abs(x)); }

}  // namespace detail

inline double structural_H(const ThermoModel& m, double z) {
  return (5.0 / 3.0) * m.P.P(z) - m.P.dP(z) * z;
}

// Entropy function S(Z) of the monatomic part.
inline double entropy_function(const ThermoModel& m, double z) {
  if (m.P.entropy) return m.P.entropy(z);
  if (!(z > 0.0)) throw DomainError("entropy function needs Z > 0");
  // substitute t = e^u: S(Z) = int_{log Z}^{log Zmax} (3/2) H(e^u) e^{-u} du + tail
  auto integrand = [&m](double u) {
    double t = std::exp(u);
    return 1.5 * structural_H(m, t) / t;
  };
  double zmax = std::max(m.z_max, z);
  double val = 0.0;
  if (zmax > z) {
    double err = 0.0;
    val = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, std::log(z), std::log(zmax), 15, 1e-10, &err);
  }
  // tail beyond the cutoff, assuming H bounded there
  return val + 1.5 * structural_H(m, zmax) / zmax;
}

inline double entropy_function_derivative(const ThermoModel& m, double z) {
  if (m.P.dentropy) return m.P.dentropy(z);
  return -1.5 * structural_H(m, z) / (z * z);
}

inline double pressure(const ThermoModel& m, double rho, double theta) {
  detail::check_theta(theta);
  detail::check_rho(rho, true);
  double z = rho / std::pow(theta, 1.5);
  return std::pow(theta, 2.5) * m.P.P(z) + (m.a / 3.0) * std::pow(theta, 4);
}

inline double internal_energy(const ThermoModel& m, double rho, double theta) {
  detail::check_theta(theta);
  detail::check_rho(rho, false);
  double z = rho / std::pow(theta, 1.5);
  return 1.5 * std::pow(theta, 2.5) / rho * m.P.P(z) + m.a * std::pow(theta, 4) / rho;
}

inline double entropy(const ThermoModel& m, double rho, double theta) {
  detail::check_theta(theta);
  detail::check_rho(rho, false);
  double z = rho / std::pow(theta, 1.5);
  return entropy_function(m, z) + (4.0 * m.a / 3.0) * theta * theta * theta / rho;
}

inline Transport transport(const ThermoModel& m, double theta) {
  detail::check_theta(theta);
  return {m.mu0 * (1.0 + theta), m.eta0 * (1.0 + theta),
          m.kappa0 * (1.0 + std::pow(theta, m.beta))};
}

// Analytic partials from the structural form.
inline Partials partials(const ThermoModel& m, double rho, double theta) {
  detail::check_theta(theta);
  detail::check_rho(rho, false);
  const double t32 = std::pow(theta, 1.5), t3 = theta * theta * theta;
  const double z = rho / t32;
  const double P = m.P.P(z), dP = m.P.dP(z), H = (5.0 / 3.0) * P - dP * z;
  const double dS = entropy_function_derivative(m, z);
  Partials q;
  q.p = theta * t32 * P + (m.a / 3.0) * t3 * theta;
  q.e = 1.5 * theta * t32 / rho * P + m.a * t3 * theta / rho;
  q.s = entropy_function(m, z) + (4.0 * m.a / 3.0) * t3 / rho;
  q.p_rho = theta * dP;
  q.p_theta = 1.5 * t32 * H + (4.0 * m.a / 3.0) * t3;
  q.e_theta = 2.25 * t32 * H / rho + 4.0 * m.a * t3 / rho;
  q.e_rho = 1.5 * theta * (dP * z - P) / (z * rho) - m.a * t3 * theta / (rho * rho);
  q.s_rho = dS / t32 - (4.0 * m.a / 3.0) * t3 / (rho * rho);
  q.s_theta = -1.5 * dS * z / theta + 4.0 * m.a * theta * theta / rho;
  return q;
}

// Central-difference partials, step h * max(1,|x|).
inline Partials partials_fd(const ThermoModel& m, double rho, double theta, double h = 1e-6) {
  const double hr = detail::fd_step(rho, h), ht = detail::fd_step(theta, h);
  auto d = [&](auto f, bool wrt_rho) {
    if (wrt_rho) return (f(rho + hr, theta) - f(rho - hr, theta)) / (2 * hr);
    return (f(rho, theta + ht) - f(rho, theta - ht)) / (2 * ht);
  };
  auto P = [&m](double r, double t) { return pressure(m, r, t); };
  auto E = [&m](double r, double t) { return internal_energy(m, r, t); };
  auto S = [&m](double r, double t) { return entropy(m, r, t); };
  Partials q;
  q.p = P(rho, theta);
  q.e = E(rho, theta);
  q.s = S(rho, theta);
  q.p_rho = d(P, true);
  q.p_theta = d(P, false);
  q.e_rho = d(E, true);
  q.e_theta = d(E, false);
  q.s_rho = d(S, true);
  q.s_theta = d(S, false);
  return q;
}

inline MaterialCoefficients coefficients_from(const Partials& q, const ReferenceState& ref) {
  if (!(q.p_rho > 0.0) || !std::isfinite(q.p_rho))
    throw SingularStateError("d p / d rho must be positive at the reference state");
  if (!(q.s_theta > 0.0) || !std::isfinite(q.s_theta))
    throw SingularStateError("d s / d theta must be positive at the reference state");
  const double rb = ref.rho_bar, tb = ref.theta_bar;
  MaterialCoefficients c;
  c.alpha = q.p_theta / (rb * q.p_rho);
  c.c_p = q.e_theta + tb * c.alpha * q.p_theta / rb;
  if (!(c.c_p > 0.0)) throw SingularStateError("c_p is not positive at the reference state");
  c.lambda = tb * c.alpha * q.p_theta / (rb * c.c_p);
  c.A = q.p_theta / (rb * q.s_theta);
  c.omega = q.p_rho + q.p_theta * q.p_theta / (rb * rb * q.s_theta);
  return c;
}

inline MaterialCoefficients coefficients(const ThermoModel& m, const ReferenceState& ref) {
  return coefficients_from(partials(m, ref.rho_bar, ref.theta_bar), ref);
}

inline MaterialCoefficients coefficients_fd(const ThermoModel& m, const ReferenceState& ref,
                                            double h = 1e-6) {
  return coefficients_from(partials_fd(m, ref.rho_bar, ref.theta_bar, h), ref);
}

struct GibbsResiduals {
  double r1 = 0, r2 = 0;
  double rel1 = 0, rel2 = 0;  // scaled by the size of the terms involved
};

// r1 = e_theta - theta s_theta, r2 = e_rho - (theta s_rho + p / rho^2).
inline GibbsResiduals gibbs_residuals(const ThermoModel& m, double rho, double theta,
                                      double h = 1e-5) {
  Partials q = partials_fd(m, rho, theta, h);
  GibbsResiduals g;
  g.r1 = q.e_theta - theta * q.s_theta;
  g.r2 = q.e_rho - (theta * q.s_rho + q.p / (rho * rho));
  double sc1 = std::max({std::abs(q.e_theta), std::abs(theta * q.s_theta), 1e-300});
  double sc2 = std::max({std::abs(q.e_rho), std::abs(theta * q.s_rho) + std::abs(q.p / (rho * rho)),
                         1e-300});
  g.rel1 = std::abs(g.r1) / sc1;
  g.rel2 = std::abs(g.r2) / sc2;
  return g;
}

// Speed of sound squared, p_rho + theta p_theta^2 / (rho^2 c_v).
inline double sound_speed_sq(const Partials& q, double rho, double theta) {
  return q.p_rho + theta * q.p_theta * q.p_theta / (rho * rho * q.e_theta);
}

}  // namespace lowmach
