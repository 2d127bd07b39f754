#pragma once

#include <random>
#include <vector>

#include "lowmach/poisson.hpp"

namespace lowmach {

// Values on the two rings, nphi entries each.
struct BoundaryData {
  Vec inner, outer;
};

template <class F>
BoundaryData boundary_from(const DomainGrid& g, F&& f) {
  BoundaryData b{Vec(g.nphi()), Vec(g.nphi())};
  for (int j = 0; j < g.nphi(); ++j) {
    b.inner[j] = f(g.r1(), g.phi(j));
    b.outer[j] = f(g.r2(), g.phi(j));
  }
  return b;
}

inline Vec boundary_vector(const DomainGrid& g, const BoundaryData& b) {
  Vec v = Vec::Zero(g.size());
  v.head(g.nphi()) = b.inner;
  v.tail(g.nphi()) = b.outer;
  return v;
}

// Discrete harmonic extension: laplace_compact(T) = 0 at interior nodes,
// T equal to the data on both rings.
inline ScalarField harmonic_extension(const GridPtr& g, const BoundaryData& b, double tol = 1e-13) {
  if (b.inner.size() != g->nphi() || b.outer.size() != g->nphi())
    throw GridMismatchError("boundary data must have nphi values per ring");
  if (!b.inner.allFinite() || !b.outer.allFinite())
    throw DomainError("boundary data must be finite");
  Vec zero = Vec::Zero(g->size());
  return ScalarField(g, solve_dirichlet(*g, 0.0, 1.0, zero, boundary_vector(*g, b), tol));
}

struct HelmholtzSplit {
  VectorField solenoidal;  // H[v]
  VectorField gradient;    // v - H[v]
  ScalarField potential;   // q
};

// v = H[v] + H_perp[v] with div H[v] = 0 at every node, H[v].n = 0 on both rings
// and H_perp[v] = grad q away from the rings' normal component (there it carries
// the Neumann data v.n). The two parts are W-orthogonal.
inline HelmholtzSplit helmholtz_split(const NeumannPoisson& solver, const VectorField& v,
                                      PoissonMethod method = PoissonMethod::spectral,
                                      double tol = 1e-12, const Vec* guess = nullptr) {
  require_same_grid(solver.grid(), v.grid);
  if (!v.finite()) throw DomainError("helmholtz_split: non-finite input");
  const auto& g = *v.grid;
  Vec pr = v.r;
  zero_normal(g, pr);
  Vec b = -(g.weights().cwiseProduct(div(g, pr, v.phi)));
  Vec q = solver.solve(b, method, tol, guess);
  Vec gr = ddr_sbp(g, q);
  zero_normal(g, gr);
  Vec gp = over_r(g, ddphi(g, q));
  VectorField H(v.grid, pr - gr, v.phi - gp);
  VectorField Hp = v - H;
  return {std::move(H), std::move(Hp), ScalarField(v.grid, std::move(q))};
}

inline HelmholtzSplit helmholtz_split(const VectorField& v,
                                      PoissonMethod method = PoissonMethod::spectral) {
  NeumannPoisson solver(v.grid);
  return helmholtz_split(solver, v, method);
}

// ---- rigid-motion kernel -------------------------------------------------------

struct RigidMotionBasis {
  std::vector<VectorField> fields;
};

// For a strictly positive bulk-viscosity bound the kernel on the annulus is the
// rotation r e_phi. The eta_lower = 0 case (conformal Killing fields) is not
// implemented.
inline RigidMotionBasis rigid_motion_basis(const GridPtr& g, double eta_lower) {
  if (!(eta_lower > 0.0))
    throw Error("rigid-motion kernel for a vanishing bulk viscosity bound (conformal Killing "
                "fields) is not implemented");
  VectorField w(g);
  w.phi = g->radius();
  w *= 1.0 / norm_l2(w);
  return {{std::move(w)}};
}

inline VectorField project_rigid(const RigidMotionBasis& basis, const VectorField& v) {
  VectorField out(v.grid);
  for (const auto& w : basis.fields) {
    VectorField t = w;
    t *= inner(v, w);
    out += t;
  }
  return out;
}

// max_w || grad(T_B) . w ||_{L2}
inline double check_coc(const ScalarField& t_ext, const RigidMotionBasis& basis) {
  auto gT = grad(t_ext);
  double worst = 0.0;
  for (const auto& w : basis.fields) {
    Vec c = gT.r.cwiseProduct(w.r) + gT.phi.cwiseProduct(w.phi);
    worst = std::max(worst, norm_l2(*t_ext.grid, c));
  }
  return worst;
}

// ---- random smooth fields ----------------------------------------------------

// Low-order smooth field; with `tangent` the radial part vanishes on both rings.
inline VectorField random_smooth_field(const GridPtr& g, std::mt19937_64& rng, bool tangent,
                                       int max_mode = 3) {
  std::normal_distribution<double> N(0.0, 1.0);
  const double r1 = g->r1(), r2 = g->r2(), L = r2 - r1;
  struct Term {
    int m;
    double c[2][3];
    double s[2][3];
  };
  std::vector<Term> terms;
  for (int m = 0; m <= max_mode; ++m) {
    Term t{m, {}, {}};
    for (int k = 0; k < 2; ++k)
      for (int p = 0; p < 3; ++p) {
        t.c[k][p] = N(rng);
        t.s[k][p] = (m == 0) ? 0.0 : N(rng);
      }
    terms.push_back(t);
  }
  return sample_vector(g, [&](double r, double phi) {
    const double x = (r - r1) / L;
    const double bump = tangent ? 4.0 * x * (1.0 - x) : 1.0;
    double vr = 0, vp = 0;
    for (const auto& t : terms) {
      const double cm = std::cos(t.m * phi), sm = std::sin(t.m * phi);
      double a[2];
      for (int k = 0; k < 2; ++k)
        a[k] = (t.c[k][0] + t.c[k][1] * x + t.c[k][2] * x * x) * cm +
               (t.s[k][0] + t.s[k][1] * x + t.s[k][2] * x * x) * sm;
      vr += a[0];
      vp += a[1];
    }
    return std::pair{bump * vr, vp};
  });
}

// ---- Korn-Poincare proxy ---------------------------------------------------

inline double h1_norm(const VectorField& v) {
  const auto& g = *v.grid;
  auto G = velocity_gradient(g, v.r, v.phi);
  double s = inner(v, v);
  s += inner(g, G.rr, G.rr) + inner(g, G.rp, G.rp) + inner(g, G.pr, G.pr) + inner(g, G.pp, G.pp);
  return std::sqrt(s);
}

// || D v - (1/3) div v I || + || div v ||, keeping the three-dimensional 1/3.
inline double deviatoric_control(const VectorField& v) {
  const auto& g = *v.grid;
  auto S = strain(g, v.r, v.phi);
  Vec a = S.rr - S.tr / 3.0, b = S.pp - S.tr / 3.0;
  double dev = std::sqrt(inner(g, a, a) + inner(g, b, b) + 2.0 * inner(g, S.rp, S.rp));
  return dev + norm_l2(g, S.tr);
}

struct KornReport {
  double constant = 0.0;  // max ratio over the sample
  std::vector<double> ratios;
};

inline KornReport korn_poincare_proxy(const GridPtr& g, const RigidMotionBasis& basis, int samples,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  KornReport rep;
  for (int k = 0; k < samples; ++k) {
    VectorField v = random_smooth_field(g, rng, true);
    VectorField d = v - project_rigid(basis, v);
    double ratio = h1_norm(d) / deviatoric_control(v);
    rep.ratios.push_back(ratio);
    rep.constant = std::max(rep.constant, ratio);
  }
  return rep;
}

}  // namespace lowmach
