#pragma once

#include "lowmach/grid.hpp"

namespace lowmach {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using MapM = Eigen::Map<RowMat>;

inline MapC as_mat(const DomainGrid& g, const Vec& f) { return MapC(f.data(), g.nrad(), g.nphi()); }
inline MapM as_mat(const DomainGrid& g, Vec& f) { return MapM(f.data(), g.nrad(), g.nphi()); }

// Radial derivative with the SBP(2,1) pair: central inside, first-order one-sided
// at the rings. With the trapezoid weights H it satisfies H D + (H D)^T = diag(-1,0,..,0,1).
inline Vec ddr_sbp(const DomainGrid& g, const Vec& f) {
  Vec out(f.size());
  auto F = as_mat(g, f);
  auto O = as_mat(g, out);
  const int n = g.nr();
  const double c = 0.5 / g.dr();
  for (int i = 1; i < n; ++i) O.row(i) = c * (F.row(i + 1) - F.row(i - 1));
  O.row(0) = (F.row(1) - F.row(0)) / g.dr();
  O.row(n) = (F.row(n) - F.row(n - 1)) / g.dr();
  return out;
}

// Radial derivative, second order everywhere (one-sided three-point at the rings).
inline Vec ddr2(const DomainGrid& g, const Vec& f) {
  Vec out(f.size());
  auto F = as_mat(g, f);
  auto O = as_mat(g, out);
  const int n = g.nr();
  const double c = 0.5 / g.dr();
  for (int i = 1; i < n; ++i) O.row(i) = c * (F.row(i + 1) - F.row(i - 1));
  // written in differences so constants give exactly zero
  O.row(0) = c * (4.0 * (F.row(1) - F.row(0)) - (F.row(2) - F.row(0)));
  O.row(n) = c * ((F.row(n - 2) - F.row(n)) - 4.0 * (F.row(n - 1) - F.row(n)));
  return out;
}

// Central periodic angular derivative d/dphi.
inline Vec ddphi(const DomainGrid& g, const Vec& f) {
  Vec out(f.size());
  auto F = as_mat(g, f);
  auto O = as_mat(g, out);
  const int m = g.nphi();
  const double c = 0.5 / g.dphi();
  O.middleCols(1, m - 2) = c * (F.rightCols(m - 2) - F.leftCols(m - 2));
  O.col(0) = c * (F.col(1) - F.col(m - 1));
  O.col(m - 1) = c * (F.col(0) - F.col(m - 2));
  return out;
}

inline Vec times_r(const DomainGrid& g, Vec f) {
  auto F = as_mat(g, f);
  for (int i = 0; i <= g.nr(); ++i) F.row(i) *= g.r(i);
  return f;
}
inline Vec over_r(const DomainGrid& g, Vec f) {
  auto F = as_mat(g, f);
  for (int i = 0; i <= g.nr(); ++i) F.row(i) /= g.r(i);
  return f;
}

// ---- first-order operators on raw arrays ---------------------------------

struct VecPair {
  Vec r, phi;
};

inline VecPair grad(const DomainGrid& g, const Vec& q) { return {ddr2(g, q), over_r(g, ddphi(g, q))}; }

// Radial part uses the SBP derivative; this is the negative adjoint of div.
inline VecPair grad_sbp(const DomainGrid& g, const Vec& q) {
  return {ddr_sbp(g, q), over_r(g, ddphi(g, q))};
}

// Conservative divergence (1/r) d_r(r v_r) + (1/r) d_phi v_phi.
inline Vec div(const DomainGrid& g, const Vec& vr, const Vec& vphi) {
  return over_r(g, ddr_sbp(g, times_r(g, vr)) + ddphi(g, vphi));
}

inline Vec curl2d(const DomainGrid& g, const Vec& vr, const Vec& vphi) {
  return over_r(g, ddr2(g, times_r(g, vphi)) - ddphi(g, vr));
}

// Solenoidal field from a stream function; div of the result is zero to roundoff.
inline VecPair stream_curl(const DomainGrid& g, const Vec& psi) {
  return {over_r(g, ddphi(g, psi)), -ddr_sbp(g, psi)};
}

// Five-point finite-volume Laplacian with face radii r_{i+-1/2}. Rows 0 and nr
// are set to zero; these are boundary nodes.
inline Vec laplace_compact(const DomainGrid& g, const Vec& f) {
  Vec out = Vec::Zero(f.size());
  auto F = as_mat(g, f);
  auto O = as_mat(g, out);
  const int n = g.nr(), m = g.nphi();
  const double dr2 = g.dr() * g.dr(), dp2 = g.dphi() * g.dphi();
  for (int i = 1; i < n; ++i) {
    const double r = g.r(i), rp = r + 0.5 * g.dr(), rm = r - 0.5 * g.dr();
    for (int j = 0; j < m; ++j) {
      const int jp = (j + 1) % m, jm = (j + m - 1) % m;
      O(i, j) = (rp * (F(i + 1, j) - F(i, j)) - rm * (F(i, j) - F(i - 1, j))) / (r * dr2) +
                (F(i, jp) - 2.0 * F(i, j) + F(i, jm)) / (r * r * dp2);
    }
  }
  return out;
}

// div(k grad f) in the same compact form; k averaged arithmetically to faces.
inline Vec div_k_grad(const DomainGrid& g, const Vec& k, const Vec& f) {
  Vec out = Vec::Zero(f.size());
  auto F = as_mat(g, f);
  auto K = as_mat(g, k);
  auto O = as_mat(g, out);
  const int n = g.nr(), m = g.nphi();
  const double dr2 = g.dr() * g.dr(), dp2 = g.dphi() * g.dphi();
  for (int i = 1; i < n; ++i) {
    const double r = g.r(i), rp = r + 0.5 * g.dr(), rm = r - 0.5 * g.dr();
    for (int j = 0; j < m; ++j) {
      const int jp = (j + 1) % m, jm = (j + m - 1) % m;
      const double kn = 0.5 * (K(i + 1, j) + K(i, j)), ks = 0.5 * (K(i - 1, j) + K(i, j));
      const double ke = 0.5 * (K(i, jp) + K(i, j)), kw = 0.5 * (K(i, jm) + K(i, j));
      O(i, j) = (rp * kn * (F(i + 1, j) - F(i, j)) - rm * ks * (F(i, j) - F(i - 1, j))) / (r * dr2) +
                (ke * (F(i, jp) - F(i, j)) - kw * (F(i, j) - F(i, jm))) / (r * r * dp2);
    }
  }
  return out;
}

// Vector Laplacian in polar components, interior nodes only.
inline VecPair vector_laplace(const DomainGrid& g, const Vec& vr, const Vec& vphi) {
  Vec lr = laplace_compact(g, vr), lp = laplace_compact(g, vphi);
  Vec dvr = ddphi(g, vr), dvp = ddphi(g, vphi);
  for (int i = 1; i < g.nr(); ++i) {
    const double r2 = g.r(i) * g.r(i);
    for (int j = 0; j < g.nphi(); ++j) {
      const int k = g.index(i, j);
      lr[k] += -vr[k] / r2 - 2.0 * dvp[k] / r2;
      lp[k] += -vphi[k] / r2 + 2.0 * dvr[k] / r2;
    }
  }
  return {lr, lp};
}

// Symmetric gradient D u in the orthonormal polar frame plus its trace.
struct Strain {
  Vec rr, pp, rp, tr;
};

inline Strain strain(const DomainGrid& g, const Vec& vr, const Vec& vphi) {
  Strain s;
  s.rr = ddr2(g, vr);
  s.pp = over_r(g, ddphi(g, vphi) + vr);
  s.rp = 0.5 * (ddr2(g, vphi) - over_r(g, vphi) + over_r(g, ddphi(g, vr)));
  s.tr = s.rr + s.pp;
  return s;
}

// Full gradient G_ab = d_a v_b in the polar frame.
struct VelocityGradient {
  Vec rr, rp, pr, pp;
};

inline VelocityGradient velocity_gradient(const DomainGrid& g, const Vec& vr, const Vec& vphi) {
  VelocityGradient G;
  G.rr = ddr2(g, vr);
  G.rp = ddr2(g, vphi);
  G.pr = over_r(g, ddphi(g, vr) - vphi);
  G.pp = over_r(g, ddphi(g, vphi) + vr);
  return G;
}

// S:D with S = 2 mu (D - tr/3 I) + eta tr I, written as a sum of squares.
inline Vec stress_power(const Strain& s, const Vec& mu, const Vec& eta) {
  Vec d = s.rr - s.pp;
  Vec tr2 = s.tr.cwiseProduct(s.tr);
  return 2.0 * mu.cwiseProduct(0.5 * d.cwiseProduct(d) + 2.0 * s.rp.cwiseProduct(s.rp) + tr2 / 6.0) +
         eta.cwiseProduct(tr2);
}

// ---- field-level wrappers -------------------------------------------------

inline VectorField grad(const ScalarField& q) {
  auto [a, b] = grad(*q.grid, q.v);
  return VectorField(q.grid, std::move(a), std::move(b));
}
inline ScalarField div(const VectorField& v) { return ScalarField(v.grid, div(*v.grid, v.r, v.phi)); }
inline ScalarField curl2d(const VectorField& v) {
  return ScalarField(v.grid, curl2d(*v.grid, v.r, v.phi));
}
inline ScalarField laplace(const ScalarField& q) { return div(grad(q)); }
inline ScalarField laplace_compact(const ScalarField& q) {
  return ScalarField(q.grid, laplace_compact(*q.grid, q.v));
}
inline VectorField stream_curl(const ScalarField& psi) {
  auto [a, b] = stream_curl(*psi.grid, psi.v);
  return VectorField(psi.grid, std::move(a), std::move(b));
}

// Discrete Gauss flux: dphi * sum_j (r2 v_r(outer) - r1 v_r(inner)).
inline double boundary_flux(const VectorField& v) {
  const auto& g = *v.grid;
  double s = 0.0;
  for (int j = 0; j < g.nphi(); ++j)
    s += g.r2() * v.r[g.index(g.nr(), j)] - g.r1() * v.r[g.index(0, j)];
  return s * g.dphi();
}

}  // namespace lowmach
