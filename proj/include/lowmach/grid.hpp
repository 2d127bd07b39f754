#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lowmach/error.hpp"

namespace lowmach {

using Vec = Eigen::VectorXd;

// Collocated polar grid on r1 <= r <= r2. Radial nodes i = 0..nr (both rings
// included), angular nodes j = 0..nphi-1, periodic. Storage is row-major in
// (i, j): k = i * nphi + j.
class DomainGrid {
 public:
  DomainGrid(double r1, double r2, int nr, int nphi) : r1_(r1), r2_(r2), nr_(nr), nphi_(nphi) {
    if (!(r1 > 0.0) || !(r2 > r1) || !std::isfinite(r2))
      throw DomainError("annulus needs 0 < r1 < r2");
    if (nr < 4) throw DomainError("need at least 4 radial cells");
    if (nphi < 8 || nphi % 2 != 0) throw DomainError("nphi must be even and at least 8");
    dr_ = (r2 - r1) / nr;
    dphi_ = 2.0 * std::numbers::pi / nphi;
    r_.resize(nr + 1);
    hw_.resize(nr + 1);
    for (int i = 0; i <= nr; ++i) {
      r_[i] = (i == nr) ? r2 : r1 + i * dr_;
      hw_[i] = (i == 0 || i == nr) ? 0.5 * dr_ : dr_;
    }
  }

  double r1() const { return r1_; }
  double r2() const { return r2_; }
  int nr() const { return nr_; }
  int nphi() const { return nphi_; }
  int nrad() const { return nr_ + 1; }
  int size() const { return (nr_ + 1) * nphi_; }
  double dr() const { return dr_; }
  double dphi() const { return dphi_; }
  double r(int i) const { return r_[i]; }
  double phi(int j) const { return j * dphi_; }
  int index(int i, int j) const { return i * nphi_ + j; }
  // radial trapezoid weight H_i
  double hw(int i) const { return hw_[i]; }
  double weight(int i) const { return hw_[i] * r_[i] * dphi_; }
  double area() const { return std::numbers::pi * (r2_ * r2_ - r1_ * r1_); }
  bool is_boundary_row(int i) const { return i == 0 || i == nr_; }
  // smallest node spacing
  double h_min() const { return std::min(dr_, r1_ * dphi_); }
  // 1 / sqrt(1/dr^2 + 1/(r1 dphi)^2), the spacing that enters stability bounds
  double h_eff() const {
    double a = 1.0 / dr_, b = 1.0 / (r1_ * dphi_);
    return 1.0 / std::sqrt(a * a + b * b);
  }

  Vec weights() const {
    Vec w(size());
    for (int i = 0; i <= nr_; ++i) w.segment(i * nphi_, nphi_).setConstant(weight(i));
    return w;
  }
  Vec radius() const {
    Vec v(size());
    for (int i = 0; i <= nr_; ++i) v.segment(i * nphi_, nphi_).setConstant(r_[i]);
    return v;
  }
  Vec angle() const {
    Vec v(size());
    for (int i = 0; i <= nr_; ++i)
      for (int j = 0; j < nphi_; ++j) v[index(i, j)] = phi(j);
    return v;
  }
  std::vector<int> inner_ring() const { return ring(0); }
  std::vector<int> outer_ring() const { return ring(nr_); }

  bool operator==(const DomainGrid& o) const {
    return r1_ == o.r1_ && r2_ == o.r2_ && nr_ == o.nr_ && nphi_ == o.nphi_;
  }

 private:
  std::vector<int> ring(int i) const {
    std::vector<int> idx(nphi_);
    for (int j = 0; j < nphi_; ++j) idx[j] = index(i, j);
    return idx;
  }

  double r1_, r2_;
  int nr_, nphi_;
  double dr_, dphi_;
  std::vector<double> r_, hw_;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

inline GridPtr make_grid(double r1, double r2, int nr, int nphi) {
  return std::make_shared<const DomainGrid>(r1, r2, nr, nphi);
}

inline void require_same_grid(const GridPtr& a, const GridPtr& b) {
  if (a != b && !(a && b && *a == *b)) throw GridMismatchError("fields live on different grids");
}

struct ScalarField {
  GridPtr grid;
  Vec v;

  ScalarField() = default;
  explicit ScalarField(GridPtr g, double c = 0.0) : grid(std::move(g)), v(Vec::Constant(grid->size(), c)) {}
  ScalarField(GridPtr g, Vec values) : grid(std::move(g)), v(std::move(values)) {
    if (v.size() != grid->size()) throw GridMismatchError("value count does not match grid");
  }

  double& operator()(int i, int j) { return v[grid->index(i, j)]; }
  double operator()(int i, int j) const { return v[grid->index(i, j)]; }
  bool finite() const { return v.allFinite(); }

  ScalarField& operator+=(const ScalarField& o) { require_same_grid(grid, o.grid); v += o.v; return *this; }
  ScalarField& operator-=(const ScalarField& o) { require_same_grid(grid, o.grid); v -= o.v; return *this; }
  ScalarField& operator*=(double s) { v *= s; return *this; }
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }

// Polar components (radial, angular).
struct VectorField {
  GridPtr grid;
  Vec r, phi;

  VectorField() = default;
  explicit VectorField(GridPtr g) : grid(std::move(g)), r(Vec::Zero(grid->size())), phi(Vec::Zero(grid->size())) {}
  VectorField(GridPtr g, Vec vr, Vec vphi) : grid(std::move(g)), r(std::move(vr)), phi(std::move(vphi)) {
    if (r.size() != grid->size() || phi.size() != grid->size())
      throw GridMismatchError("value count does not match grid");
  }

  bool finite() const { return r.allFinite() && phi.allFinite(); }

  VectorField& operator+=(const VectorField& o) { require_same_grid(grid, o.grid); r += o.r; phi += o.phi; return *this; }
  VectorField& operator-=(const VectorField& o) { require_same_grid(grid, o.grid); r -= o.r; phi -= o.phi; return *this; }
  VectorField& operator*=(double s) { r *= s; phi *= s; return *this; }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }

// ---- quadrature ---------------------------------------------------------

inline double integrate(const DomainGrid& g, const Vec& f) {
  double s = 0.0;
  for (int i = 0; i <= g.nr(); ++i) s += g.weight(i) * f.segment(i * g.nphi(), g.nphi()).sum();
  return s;
}
inline double integrate(const ScalarField& f) { return integrate(*f.grid, f.v); }

inline double mean(const DomainGrid& g, const Vec& f) { return integrate(g, f) / g.area(); }
inline double mean(const ScalarField& f) { return mean(*f.grid, f.v); }

inline double inner(const DomainGrid& g, const Vec& a, const Vec& b) {
  return integrate(g, a.cwiseProduct(b));
}
inline double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid);
  return inner(*a.grid, a.v, b.v);
}
inline double inner(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid);
  return inner(*a.grid, a.r, b.r) + inner(*a.grid, a.phi, b.phi);
}

inline double norm_l2(const DomainGrid& g, const Vec& f) { return std::sqrt(inner(g, f, f)); }
inline double norm_l2(const ScalarField& f) { return norm_l2(*f.grid, f.v); }
inline double norm_l2(const VectorField& v) { return std::sqrt(inner(v, v)); }

inline double norm_lp(const DomainGrid& g, const Vec& f, double p) {
  return std::pow(integrate(g, f.cwiseAbs().array().pow(p).matrix()), 1.0 / p);
}

inline Vec remove_mean(const DomainGrid& g, Vec f) {
  f.array() -= mean(g, f);
  return f;
}

// Field from a function of (r, phi).
template <class F>
ScalarField sample(const GridPtr& g, F&& f) {
  ScalarField s(g);
  for (int i = 0; i <= g->nr(); ++i)
    for (int j = 0; j < g->nphi(); ++j) s(i, j) = f(g->r(i), g->phi(j));
  return s;
}

template <class F>
VectorField sample_vector(const GridPtr& g, F&& f) {
  VectorField v(g);
  for (int i = 0; i <= g->nr(); ++i)
    for (int j = 0; j < g->nphi(); ++j) {
      auto [a, b] = f(g->r(i), g->phi(j));
      v.r[g->index(i, j)] = a;
      v.phi[g->index(i, j)] = b;
    }
  return v;
}

// Zero the radial component on both rings.
inline void zero_normal(const DomainGrid& g, Vec& vr) {
  vr.head(g.nphi()).setZero();
  vr.tail(g.nphi()).setZero();
}

}  // namespace lowmach
