#pragma once

// Default forcing and initial profiles used by the CLI, the sweep and the tests.

#include <cmath>

#include "lowmach/diagnostics.hpp"
#include "lowmach/helmholtz.hpp"
#include "lowmach/nsf.hpp"

namespace lowmach {

// -g0 / r with the mean removed
inline ScalarField radial_potential(const GridPtr& g, double g0) {
  auto G = sample(g, [g0](double r, double) { return -g0 / r; });
  return ScalarField(g, remove_mean(*g, G.v));
}

inline BoundaryData radial_boundary(const DomainGrid& g, double t_inner, double t_outer) {
  return {Vec::Constant(g.nphi(), t_inner), Vec::Constant(g.nphi(), t_outer)};
}

// 16 x^2 (1-x)^2 with x the normalized radius; peak value 1 at mid-gap.
inline double radial_bump(const DomainGrid& g, double r) {
  const double x = (r - g.r1()) / (g.r2() - g.r1());
  return 16.0 * x * x * (1.0 - x) * (1.0 - x);
}

struct InitialProfile {
  double rho_mode1 = 0.5;    // amplitude of cos(phi) * bump in the density
  double theta_bump = 0.5;   // amplitude of the radial temperature bump (mean removed)
  double rotation = 0.3;     // rigid rotation r e_phi
  double vortex = 1.0;       // solenoidal vortex from a stream function
  double potential = 0.5;    // gradient part grad(chi), chi with zero normal derivative
  int potential_radial = 0;  // chi = L cos(n pi x) cos(phi) / pi, n = potential_radial (n = 0: L cos(phi))
};

inline InitialData make_initial(const GridPtr& g, const InitialProfile& p) {
  const auto& gr = *g;
  InitialData d;
  d.rho0 = sample(g, [&](double r, double phi) { return p.rho_mode1 * std::cos(phi) * radial_bump(gr, r); });
  d.rho0.v = remove_mean(gr, d.rho0.v);
  d.theta0 = sample(g, [&](double r, double) { return p.theta_bump * radial_bump(gr, r); });
  d.theta0.v = remove_mean(gr, d.theta0.v);

  const double L = gr.r2() - gr.r1();
  auto psi = sample(g, [&](double r, double phi) {
    const double x = (r - gr.r1()) / L;
    return 0.25 * L * radial_bump(gr, r) * x * std::sin(2.0 * phi);
  });
  auto vort = stream_curl(psi);
  auto chi = sample(g, [&](double r, double phi) {
    const double x = (r - gr.r1()) / L;
    if (p.potential_radial == 0) return L * std::cos(phi);
    return L * std::cos(p.potential_radial * std::numbers::pi * x) * std::cos(phi) / std::numbers::pi;
  });
  auto pot = grad(chi);
  d.u0 = VectorField(g);
  d.u0.phi = p.rotation * gr.radius();
  d.u0 += p.vortex * vort;
  d.u0 += p.potential * pot;
  return d;
}

// Single acoustic mode: rho0 = a e, theta0 isentropic (s_rho rho0 + s_theta theta0 = 0), u0 = 0.
inline InitialData acoustic_mode_initial(const GridPtr& g, const ThermoModel& model, const ReferenceState& ref,
                                         const AcousticMode& mode, double amplitude) {
  const auto q = partials(model, ref.rho_bar, ref.theta_bar);
  const double scale = amplitude / mode.e.cwiseAbs().maxCoeff();
  InitialData d;
  d.rho0 = ScalarField(g, remove_mean(*g, scale * mode.e));
  d.theta0 = ScalarField(g, remove_mean(*g, (-q.s_rho / q.s_theta) * d.rho0.v));
  d.u0 = VectorField(g);
  return d;
}

}  // namespace lowmach
