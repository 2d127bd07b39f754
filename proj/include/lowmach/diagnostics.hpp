#pragma once

// Verification functionals evaluated on NSF trajectories, optionally against an
// OB reference trajectory.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lowmach/nsf.hpp"
#include "lowmach/ob.hpp"

namespace lowmach {

// ---- relative energy ----------------------------------------------------------

// Pointwise scaled relative energy E(rho, theta, u | rho_t, theta_t, u_t).
inline Vec relative_energy_density(const ThermoModel& m, double eps, const Vec& rho, const Vec& theta,
                                   const Vec& ur, const Vec& up, const Vec& rho_t, const Vec& theta_t,
                                   const Vec& ur_t, const Vec& up_t) {
  const Eigen::Index n = rho.size();
  Vec E(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!(rho[k] > 0) || !(theta[k] > 0) || !(rho_t[k] > 0) || !(theta_t[k] > 0))
      throw DomainError("relative_energy: densities and temperatures must be positive");
    const auto q = partials(m, rho[k], theta[k]);
    const auto qt = partials(m, rho_t[k], theta_t[k]);
    const double tt = theta_t[k];
    const double bracket = rho[k] * q.e - tt * (rho[k] * q.s - rho_t[k] * qt.s) -
                           (qt.e - tt * qt.s + qt.p / rho_t[k]) * (rho[k] - rho_t[k]) - rho_t[k] * qt.e;
    const double dur = ur[k] - ur_t[k], dup = up[k] - up_t[k];
    E[k] = 0.5 * rho[k] * (dur * dur + dup * dup) + bracket / (eps * eps);
    // convexity of the energy in (rho, S, m); allow for cancellation in the bracket
    const double scale = (std::abs(rho[k] * q.e) + std::abs(tt * rho[k] * q.s) + std::abs(rho_t[k] * qt.e) +
                          std::abs(qt.p)) / (eps * eps);
    if (E[k] < -1e-11 * scale) throw DomainError("relative_energy: negative value, stability hypothesis violated");
  }
  return E;
}

inline double relative_energy(const ThermoModel& m, const FluidState& s, const ScalarField& rho_t,
                              const ScalarField& theta_t, const VectorField& u_t) {
  const auto& g = *s.rho.grid;
  require_same_grid(s.rho.grid, rho_t.grid);
  require_same_grid(s.rho.grid, theta_t.grid);
  require_same_grid(s.rho.grid, u_t.grid);
  auto u = s.velocity();
  return integrate(g, relative_energy_density(m, s.epsilon, s.rho.v, s.theta.v, u.r, u.phi, rho_t.v,
                                              theta_t.v, u_t.r, u_t.phi));
}

// ---- essential / residual split ---------------------------------------------------

struct EssentialSet {
  double rho_lo = 0.5, rho_hi = 2.0, theta_lo = 0.5, theta_hi = 2.0;

  static EssentialSet around(const ReferenceState& ref, double lo = 0.5, double hi = 2.0) {
    return {lo * ref.rho_bar, hi * ref.rho_bar, lo * ref.theta_bar, hi * ref.theta_bar};
  }
  void validate(const ReferenceState& ref) const {
    if (!(rho_lo > 0) || !(theta_lo > 0)) throw ConfigError("essential set: lower bounds must be positive");
    if (!(rho_lo < ref.rho_bar && ref.rho_bar < rho_hi && theta_lo < ref.theta_bar && ref.theta_bar < theta_hi))
      throw ConfigError("essential set must contain the reference state in its interior");
  }
  bool contains(double r, double t) const { return r >= rho_lo && r <= rho_hi && t >= theta_lo && t <= theta_hi; }
};

struct EssResSplit {
  double residual_measure = 0;    // int 1_res
  double residual_mass = 0;       // int [rho^{5/3} + theta^4]_res
  double ess_rho_norm = 0;        // || [(rho - rho_bar)/eps]_ess ||_2
  double ess_theta_norm = 0;      // || [(theta - theta_bar)/eps]_ess ||_2
  double essential_fraction = 1;  // |{ess}| / |Omega|
};

inline EssResSplit ess_res_split(const DomainGrid& g, const Vec& rho, const Vec& theta, double eps,
                                 const ReferenceState& ref, const EssentialSet& K) {
  EssResSplit out;
  double a = 0, b = 0;
  for (int k = 0; k < g.size(); ++k) {
    const double w = g.weight(k / g.nphi());
    if (K.contains(rho[k], theta[k])) {
      const double dr = (rho[k] - ref.rho_bar) / eps, dt = (theta[k] - ref.theta_bar) / eps;
      a += w * dr * dr;
      b += w * dt * dt;
    } else {
      out.residual_measure += w;
      out.residual_mass += w * (std::pow(rho[k], 5.0 / 3.0) + std::pow(theta[k], 4.0));
    }
  }
  out.ess_rho_norm = std::sqrt(a);
  out.ess_theta_norm = std::sqrt(b);
  out.essential_fraction = 1.0 - out.residual_measure / g.area();
  return out;
}

// ---- acoustic potential -----------------------------------------------------------

struct AcousticState {
  ScalarField Z;
  VectorField m;
};

// Z = (omega (rho - rho_bar)/eps + A rho (s - s_bar)/eps - rho_bar G + (A/eps) Sigma) / omega,
// with the boundary cut-off replaced by 1.
inline AcousticState acoustic_state(const FluidState& s, const ThermoModel& model, const ReferenceState& ref,
                                    const ScalarField& G) {
  const auto& g = *s.rho.grid;
  require_same_grid(s.rho.grid, G.grid);
  const auto c = coefficients(model, ref);
  const double sbar = entropy(model, ref.rho_bar, ref.theta_bar);
  const double eps = s.epsilon;
  Vec Z(g.size());
  for (int k = 0; k < g.size(); ++k) {
    const double r = s.rho.v[k], t = s.theta.v[k];
    if (!(r > 0) || !(t > 0)) throw DomainError("acoustic_state: nonpositive density or temperature");
    const double sk = entropy(model, r, t);
    Z[k] = (c.omega * (r - ref.rho_bar) / eps + c.A * r * (sk - sbar) / eps - ref.rho_bar * G.v[k] +
            (c.A / eps) * s.Sigma.v[k]) / c.omega;
  }
  return {ScalarField(s.rho.grid, std::move(Z)), s.m};
}

// ---- test functions ----------------------------------------------------------------

// C-infinity bump on (0, T): exp(1 - 1/(1 - s^2)), s = 2t/T - 1.
inline double time_bump(double t, double T) {
  const double s = 2.0 * t / T - 1.0;
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}
inline double time_bump_dt(double t, double T) {
  const double s = 2.0 * t / T - 1.0;
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return std::exp(1.0 - 1.0 / q) * (-2.0 * s / (q * q)) * (2.0 / T);
}

struct ScalarTest {
  std::string name;
  Vec phi;
  VecPair grad;  // SBP gradient, the W-adjoint of the discrete divergence
};

struct VectorTest {
  std::string name;
  Vec r, phi;            // zero normal component on the rings
  Vec div;               // discrete divergence
  VelocityGradient G;    // d_a phi_b
};

inline ScalarTest make_scalar_test(const GridPtr& g, std::string name, Vec phi) {
  auto gr = grad_sbp(*g, phi);
  return {std::move(name), std::move(phi), std::move(gr)};
}

inline VectorTest make_vector_test(const GridPtr& g, std::string name, Vec vr, Vec vphi) {
  zero_normal(*g, vr);
  VectorTest t;
  t.name = std::move(name);
  t.div = div(*g, vr, vphi);
  t.G = velocity_gradient(*g, vr, vphi);
  t.r = std::move(vr);
  t.phi = std::move(vphi);
  return t;
}

// cos(pi n x) cos(m phi), x the normalized radius
inline Vec cosine_mode(const DomainGrid& g, int n, int m) {
  const double L = g.r2() - g.r1();
  Vec f(g.size());
  for (int i = 0; i <= g.nr(); ++i)
    for (int j = 0; j < g.nphi(); ++j)
      f[g.index(i, j)] = std::cos(std::numbers::pi * n * (g.r(i) - g.r1()) / L) * std::cos(m * g.phi(j));
  return f;
}

inline std::vector<ScalarTest> scalar_tests(const GridPtr& g) {
  std::vector<ScalarTest> out;
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}, {0, 2}, {2, 1}}) {
    out.push_back(make_scalar_test(g, "cos" + std::to_string(n) + "_" + std::to_string(m),
                                   cosine_mode(*g, n, m)));
  }
  return out;
}

// Gradients of the cosine modes: (c'(r) cos m phi, -(m/r) c sin m phi), zero normal trace.
inline std::vector<VectorTest> gradient_tests(const GridPtr& g) {
  const auto& gr = *g;
  const double L = gr.r2() - gr.r1(), pi = std::numbers::pi;
  std::vector<VectorTest> out;
  for (auto [n, m] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}, {2, 1}}) {
    Vec vr(gr.size()), vp(gr.size());
    for (int i = 0; i <= gr.nr(); ++i)
      for (int j = 0; j < gr.nphi(); ++j) {
        const double x = pi * n * (gr.r(i) - gr.r1()) / L;
        const int k = gr.index(i, j);
        vr[k] = -(pi * n / L) * std::sin(x) * std::cos(m * gr.phi(j));
        vp[k] = -(m / gr.r(i)) * std::cos(x) * std::sin(m * gr.phi(j));
      }
    out.push_back(make_vector_test(g, "grad_cos" + std::to_string(n) + "_" + std::to_string(m), vr, vp));
  }
  return out;
}

// Solenoidal fields with zero normal trace: rigid rotation and curls of
// 16 L x^a (1-x)^2 cos/sin(m phi) stream functions. Values and gradients are
// evaluated analytically, so the gradient is exactly trace-free at every node.
inline std::vector<VectorTest> solenoidal_tests(const GridPtr& g) {
  const auto& gr = *g;
  const double L = gr.r2() - gr.r1();
  std::vector<VectorTest> out;
  {
    VectorTest t;
    t.name = "rotation";
    t.r = Vec::Zero(gr.size());
    t.phi = gr.radius();
    t.div = Vec::Zero(gr.size());
    t.G = {Vec::Zero(gr.size()), Vec::Ones(gr.size()), -Vec::Ones(gr.size()), Vec::Zero(gr.size())};
    out.push_back(std::move(t));
  }
  struct Curl { int m; bool sine; int a; };
  for (auto sp : std::vector<Curl>{{0, false, 2}, {1, false, 2}, {2, true, 2}, {1, false, 3}}) {
    // b(x) = x^a (1-x)^2 and its first two derivatives
    auto b = [&](double x, int d) {
      const int a = sp.a;
      const double y = 1.0 - x;
      if (d == 0) return std::pow(x, a) * y * y;
      if (d == 1) return a * std::pow(x, a - 1) * y * y - 2.0 * std::pow(x, a) * y;
      return a * (a - 1) * std::pow(x, a - 2) * y * y - 4.0 * a * std::pow(x, a - 1) * y + 2.0 * std::pow(x, a);
    };
    VectorTest t;
    t.name = std::string("curl_") + (sp.sine ? "sin" : "cos") + std::to_string(sp.m) + "_a" + std::to_string(sp.a);
    const int n = gr.size();
    t.r = t.phi = t.div = Vec::Zero(n);
    t.G = {Vec(n), Vec(n), Vec(n), Vec(n)};
    const double m = sp.m;
    for (int i = 0; i <= gr.nr(); ++i)
      for (int j = 0; j < gr.nphi(); ++j) {
        const int k = gr.index(i, j);
        const double r = gr.r(i), x = (r - gr.r1()) / L, ph = gr.phi(j);
        const double B = 16.0 * L * b(x, 0), B1 = 16.0 * b(x, 1), B2 = 16.0 * b(x, 2) / L;
        const double A = sp.sine ? std::sin(m * ph) : std::cos(m * ph);
        const double A1 = sp.sine ? m * std::cos(m * ph) : -m * std::sin(m * ph);
        const double A2 = -m * m * A;
        // psi = B A; vphi = (d_phi psi / r, -d_r psi)
        t.r[k] = B * A1 / r;
        t.phi[k] = -B1 * A;
        t.G.rr[k] = (B1 / r - B / (r * r)) * A1;
        t.G.rp[k] = -B2 * A;
        t.G.pr[k] = (B * A2 / r + B1 * A) / r;
        t.G.pp[k] = (-B1 * A1 + B * A1 / r) / r;
      }
    t.div = div(gr, t.r, t.phi);
    out.push_back(std::move(t));
  }
  return out;
}

// Seeded random combinations of the curl fields above (the rotation is left
// out so the symmetric part of the gradient is never trivially zero).
inline std::vector<VectorTest> random_solenoidal_tests(const GridPtr& g, std::uint64_t seed, int count) {
  auto base = solenoidal_tests(g);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<VectorTest> out;
  const int n = g->size();
  for (int c = 0; c < count; ++c) {
    VectorTest t;
    t.name = "random_" + std::to_string(c);
    t.r = t.phi = t.div = Vec::Zero(n);
    t.G = {Vec::Zero(n), Vec::Zero(n), Vec::Zero(n), Vec::Zero(n)};
    for (size_t b = 1; b < base.size(); ++b) {
      const double w = nd(rng) / std::sqrt(double(base.size() - 1));
      t.r += w * base[b].r;
      t.phi += w * base[b].phi;
      t.div += w * base[b].div;
      t.G.rr += w * base[b].G.rr;
      t.G.rp += w * base[b].G.rp;
      t.G.pr += w * base[b].G.pr;
      t.G.pp += w * base[b].G.pp;
    }
    out.push_back(std::move(t));
  }
  return out;
}

// sum_ab a_a b_b G_ab, weighted and summed
inline double tensor_pairing(const DomainGrid& g, const Vec& ar, const Vec& ap, const Vec& br, const Vec& bp,
                             const VelocityGradient& G) {
  Vec f = ar.cwiseProduct(br).cwiseProduct(G.rr) + ar.cwiseProduct(bp).cwiseProduct(G.rp) +
          ap.cwiseProduct(br).cwiseProduct(G.pr) + ap.cwiseProduct(bp).cwiseProduct(G.pp);
  return integrate(g, f);
}

// ---- acoustic mini solver ------------------------------------------------------------

// Eigenpair of the discrete wave operator -div grad_sbp with the SBP pairing:
// A e = Lambda W e. The exact solution of eps Z_t + div m = 0, eps m_t + omega grad Z = 0
// starting from Z = e, m = 0 is Z = cos(W t) e, m = -(eps W / Lambda) sin(W t) grad e,
// W = sqrt(omega Lambda) / eps.
struct AcousticMode {
  int m = 0;
  double Lambda = 0;
  Vec radial;  // profile a_i
  Vec e;       // a_i cos(m phi_j)
};

// Smallest nonzero eigenvalue with a smooth radial profile for angular mode m
// (central differences also carry a radially alternating twin of every mode).
inline AcousticMode acoustic_mode(const NeumannPoisson& P, int m, int radial_index = 0) {
  const auto& g = *P.grid();
  const int nrad = g.nrad();
  Eigen::MatrixXd K = P.mode_matrix(m);
  Vec mass(nrad);
  for (int i = 0; i < nrad; ++i) mass[i] = g.hw(i) * g.r(i);
  Vec is = mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd S = is.asDiagonal() * K * is.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
  int found = 0;
  for (int k = 0; k < nrad; ++k) {
    const double l = es.eigenvalues()[k];
    if (l <= 1e-9 * lmax) continue;
    Vec a = is.asDiagonal() * es.eigenvectors().col(k);
    double smooth = 0, rough = 0;
    for (int i = 0; i + 1 < nrad; ++i) {
      smooth += std::pow(a[i] + a[i + 1], 2);
      rough += std::pow(a[i + 1] - a[i], 2);
    }
    if (rough > smooth) continue;
    if (found++ < radial_index) continue;
    AcousticMode out;
    out.m = m;
    out.Lambda = l;
    out.radial = a / a.cwiseAbs().maxCoeff();
    out.e.resize(g.size());
    for (int i = 0; i < nrad; ++i)
      for (int j = 0; j < g.nphi(); ++j) out.e[g.index(i, j)] = out.radial[i] * std::cos(m * g.phi(j));
    return out;
  }
  throw SolverError("acoustic_mode: no smooth mode found");
}

// Lowest smooth acoustic mode over the first few angular numbers.
inline AcousticMode lowest_acoustic_mode(const NeumannPoisson& P, int max_m = 4) {
  AcousticMode best;
  best.Lambda = INFINITY;
  for (int m = 0; m <= std::min(max_m, P.grid()->nphi() / 2 - 1); ++m) {
    auto md = acoustic_mode(P, m);
    if (md.Lambda < best.Lambda) best = md;
  }
  return best;
}

inline double acoustic_angular_frequency(double Lambda, double omega, double eps) {
  return std::sqrt(omega * Lambda) / eps;
}

class WaveModeSolution {
 public:
  WaveModeSolution(GridPtr g, AcousticMode mode, double eps, double omega)
      : g_(std::move(g)), mode_(std::move(mode)), eps_(eps), omega_(omega) {
    W_ = acoustic_angular_frequency(mode_.Lambda, omega_, eps_);
    ge_ = grad_sbp(*g_, mode_.e);
    zero_normal(*g_, ge_.r);
  }
  double angular_frequency() const { return W_; }
  double period() const { return 2.0 * std::numbers::pi / W_; }
  Vec Z(double t) const { return std::cos(W_ * t) * mode_.e; }
  VectorField m(double t) const {
    const double a = -(eps_ * W_ / mode_.Lambda) * std::sin(W_ * t);
    return VectorField(g_, a * ge_.r, a * ge_.phi);
  }
  // discrete residuals of the two equations at time t (should vanish)
  double residual(double t) const {
    const auto& g = *g_;
    const double a = -(eps_ * W_ / mode_.Lambda);
    Vec zt = -W_ * std::sin(W_ * t) * mode_.e;
    Vec r1 = eps_ * zt + div(g, a * std::sin(W_ * t) * ge_.r, a * std::sin(W_ * t) * ge_.phi);
    const double mt = a * W_ * std::cos(W_ * t);
    Vec r2 = eps_ * mt * ge_.r + omega_ * std::cos(W_ * t) * ge_.r;
    Vec r3 = eps_ * mt * ge_.phi + omega_ * std::cos(W_ * t) * ge_.phi;
    return std::max({r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff(), r3.cwiseAbs().maxCoeff()});
  }

 private:
  GridPtr g_;
  AcousticMode mode_;
  double eps_, omega_, W_;
  VecPair ge_;
};

// Angular frequency of a scalar signal from its zero crossings (linear
// interpolation between samples). Needs at least two crossings.
class FrequencyProbe {
 public:
  void sample(double t, double v) {
    if (have_ && (v > 0) != (prev_ > 0) && v != prev_) {
      const double tc = t_prev_ - prev_ * (t - t_prev_) / (v - prev_);
      crossings_.push_back(tc);
    }
    t_prev_ = t;
    prev_ = v;
    have_ = true;
  }
  int crossings() const { return int(crossings_.size()); }
  double angular_frequency() const {
    if (crossings_.size() < 2) throw Error("frequency probe: fewer than two zero crossings");
    return std::numbers::pi * double(crossings_.size() - 1) / (crossings_.back() - crossings_.front());
  }

 private:
  std::vector<double> crossings_;
  double t_prev_ = 0, prev_ = 0;
  bool have_ = false;
};

// ---- wave-system weak residuals ---------------------------------------------------------

struct ResidualEntry {
  std::string functional, test;
  double value;
};

// Accumulates r1(phi) = |int int (eps Z d_t phi + m . grad phi)| and
// r2(vphi) = |int int (eps m . d_t vphi + omega Z div vphi)| with phi(t, x) =
// psi(t) phi(x), psi the time bump on (0, T). Trapezoid rule over the samples.
class WaveResiduals {
 public:
  WaveResiduals(GridPtr g, double eps, double omega, double T, std::vector<ScalarTest> st,
                std::vector<VectorTest> vt, double max_gap = INFINITY)
      : g_(std::move(g)), eps_(eps), omega_(omega), T_(T), max_gap_(max_gap), st_(std::move(st)),
        vt_(std::move(vt)), acc_(st_.size() + vt_.size(), 0.0), prev_(acc_.size(), 0.0) {}

  void sample(double t, const Vec& Z, const VectorField& m) {
    if (have_ && t - t_prev_ > max_gap_ * (1.0 + 1e-9)) {
      std::ostringstream os;
      os << "wave residuals: sample spacing " << t - t_prev_ << " exceeds the cadence limit " << max_gap_;
      throw Error(os.str());
    }
    if (have_ && !(t > t_prev_)) return;
    const auto& g = *g_;
    const double psi = time_bump(t, T_), dpsi = time_bump_dt(t, T_);
    std::vector<double> f(acc_.size());
    for (size_t k = 0; k < st_.size(); ++k) {
      const auto& s = st_[k];
      f[k] = eps_ * dpsi * integrate(g, Z.cwiseProduct(s.phi)) +
             psi * integrate(g, m.r.cwiseProduct(s.grad.r) + m.phi.cwiseProduct(s.grad.phi));
    }
    for (size_t k = 0; k < vt_.size(); ++k) {
      const auto& v = vt_[k];
      f[st_.size() + k] = eps_ * dpsi * integrate(g, m.r.cwiseProduct(v.r) + m.phi.cwiseProduct(v.phi)) +
                          omega_ * psi * integrate(g, Z.cwiseProduct(v.div));
    }
    if (have_) {
      const double h = t - t_prev_;
      for (size_t k = 0; k < acc_.size(); ++k) acc_[k] += 0.5 * h * (prev_[k] + f[k]);
    }
    prev_ = f;
    t_prev_ = t;
    have_ = true;
  }

  std::vector<ResidualEntry> results() const {
    std::vector<ResidualEntry> out;
    for (size_t k = 0; k < st_.size(); ++k) out.push_back({"r1", st_[k].name, std::abs(acc_[k])});
    for (size_t k = 0; k < vt_.size(); ++k) out.push_back({"r2", vt_[k].name, std::abs(acc_[st_.size() + k])});
    return out;
  }
  double max_r1() const {
    double m = 0;
    for (size_t k = 0; k < st_.size(); ++k) m = std::max(m, std::abs(acc_[k]));
    return m;
  }
  double max_r2() const {
    double m = 0;
    for (size_t k = 0; k < vt_.size(); ++k) m = std::max(m, std::abs(acc_[st_.size() + k]));
    return m;
  }

 private:
  GridPtr g_;
  double eps_, omega_, T_, max_gap_;
  std::vector<ScalarTest> st_;
  std::vector<VectorTest> vt_;
  std::vector<double> acc_, prev_;
  double t_prev_ = 0;
  bool have_ = false;
};

// Mass pairing with a time-independent test function: int W M(t).grad phi must
// equal int W (rho(t) - rho(0)) phi for the conservative scheme.
inline double mass_pairing_residual(const ScalarTest& test, const FluidState& s, const ScalarField& rho0) {
  const auto& g = *s.rho.grid;
  const double lhs = integrate(g, s.M.r.cwiseProduct(test.grad.r) + s.M.phi.cwiseProduct(test.grad.phi));
  const double rhs = integrate(g, (s.rho.v - rho0.v).cwiseProduct(test.phi));
  return std::abs(lhs - rhs);
}

// ---- OB reference trajectory ---------------------------------------------------------------

// Snapshots of an OB run with linear interpolation in time.
class OBTrajectory {
 public:
  struct Fields {
    Vec Ur, Uphi, R, T;  // T = Theta + lambda mean(T)
  };

  OBTrajectory() = default;
  OBTrajectory(double lambda) : lambda_(lambda) {}

  void push(const OBState& s) {
    if (!t_.empty() && !(s.t > t_.back())) return;
    t_.push_back(s.t);
    f_.push_back({s.U.r, s.U.phi, s.R.v, s.frak_T(lambda_).v});
  }
  bool empty() const { return t_.empty(); }
  double t_end() const { return t_.empty() ? 0.0 : t_.back(); }
  size_t size() const { return t_.size(); }

  Fields at(double t) const {
    if (t_.empty()) throw Error("OBTrajectory: empty");
    if (t <= t_.front()) return f_.front();
    if (t >= t_.back()) {
      if (t > t_.back() * (1.0 + 1e-9) + 1e-12) throw Error("OBTrajectory: time beyond the stored window");
      return f_.back();
    }
    const size_t k = std::upper_bound(t_.begin(), t_.end(), t) - t_.begin();
    const double a = (t - t_[k - 1]) / (t_[k] - t_[k - 1]);
    const auto& x = f_[k - 1];
    const auto& y = f_[k];
    return {(1 - a) * x.Ur + a * y.Ur, (1 - a) * x.Uphi + a * y.Uphi, (1 - a) * x.R + a * y.R,
            (1 - a) * x.T + a * y.T};
  }

 private:
  double lambda_ = 0.0;
  std::vector<double> t_;
  std::vector<Fields> f_;
};

// ---- convective functionals ----------------------------------------------------------------

// D(vphi) = int int (rho u (x) u - rho_bar U (x) U) : grad vphi and the filtered
// A(vphi) = int int H_perp[m] (x) H_perp[u] : grad vphi, both signed here.
class ConvectiveFunctionals {
 public:
  ConvectiveFunctionals(GridPtr g, const NeumannPoisson* P, std::vector<VectorTest> tests, double rho_bar)
      : g_(std::move(g)), P_(P), tests_(std::move(tests)), rho_bar_(rho_bar), D_(tests_.size(), 0.0),
        A_(tests_.size(), 0.0), pD_(tests_.size(), 0.0), pA_(tests_.size(), 0.0) {}

  // m, u from the NSF state; U the OB velocity at the same time (may be null)
  void sample(double t, const VectorField& m, const VectorField& u, const Vec* Ur, const Vec* Uphi) {
    if (have_ && !(t > t_prev_)) return;
    const auto& g = *g_;
    auto hm = helmholtz_split(*P_, m).gradient;
    auto hu = helmholtz_split(*P_, u).gradient;
    std::vector<double> fD(tests_.size()), fA(tests_.size()), fB(tests_.size(), 0.0);
    for (size_t k = 0; k < tests_.size(); ++k) {
      const auto& G = tests_[k].G;
      double d = tensor_pairing(g, m.r, m.phi, u.r, u.phi, G);
      if (Ur) d -= rho_bar_ * tensor_pairing(g, *Ur, *Uphi, *Ur, *Uphi, G);
      fD[k] = d;
      fA[k] = tensor_pairing(g, hm.r, hm.phi, hu.r, hu.phi, G);
      if (bump_T_ > 0) fB[k] = time_bump(t, bump_T_) * fA[k];
    }
    if (have_) {
      const double h = t - t_prev_;
      for (size_t k = 0; k < tests_.size(); ++k) {
        D_[k] += 0.5 * h * (pD_[k] + fD[k]);
        A_[k] += 0.5 * h * (pA_[k] + fA[k]);
        B_[k] += 0.5 * h * (pB_[k] + fB[k]);
      }
    }
    pD_ = fD;
    pA_ = fA;
    pB_ = fB;
    t_prev_ = t;
    have_ = true;
  }

  const std::vector<VectorTest>& tests() const { return tests_; }
  const std::vector<double>& D_signed() const { return D_; }
  const std::vector<double>& A_signed() const { return A_; }
  const std::vector<double>& A_bump_signed() const { return B_; }
  const std::vector<double>& last_A_integrand() const { return pA_; }
  void set_bump(double T) { bump_T_ = T; }

 private:
  GridPtr g_;
  const NeumannPoisson* P_;
  std::vector<VectorTest> tests_;
  double rho_bar_;
  std::vector<double> D_, A_, pD_, pA_, B_ = std::vector<double>(tests_.size(), 0.0), pB_ = B_;
  double bump_T_ = 0;
  double t_prev_ = 0;
  bool have_ = false;
};

// ---- limit error norms ---------------------------------------------------------------------

struct LimitErrors {
  double rho_avg = 0;      // || <(rho - rho_bar)/eps> - <R> ||_{5/3}
  double theta_avg = 0;    // || <(theta - theta_bar)/eps> - <T> ||_2
  double u_avg = 0;        // || <u> - <U> ||_2
  double u_inst_rms = 0;   // time RMS of || u - U ||_2, no averaging
  double rho_inst_rms = 0;
  double delta = 0;        // window width
  int windows = 0;
  std::string warning;
};

// Hann-windowed time averages of width delta; windows centred every delta/2
// inside [0, T]. Reported norms are the RMS over windows.
class LimitErrorAccumulator {
 public:
  LimitErrorAccumulator(GridPtr g, double T, double delta, double acoustic_period)
      : g_(std::move(g)), T_(T), delta_(std::min(delta, T)) {
    if (!(delta_ > 0)) throw ConfigError("limit errors: window width must be positive");
    const int nw = std::max(1, int(std::floor((T_ - delta_) / (0.5 * delta_) + 1e-9)) + 1);
    for (int k = 0; k < nw; ++k) {
      Window w;
      w.c = 0.5 * delta_ + k * 0.5 * delta_;
      w.dr = w.dt = w.dur = w.dup = Vec::Zero(g_->size());
      win_.push_back(w);
    }
    if (delta_ < 2.0 * acoustic_period) {
      std::ostringstream os;
      os << "averaging window " << delta_ << " is shorter than two acoustic periods (" << 2.0 * acoustic_period
         << ")";
      warning_ = os.str();
    }
  }

  // Pointwise differences (NSF - OB) at time t.
  void sample(double t, const Vec& drho, const Vec& dtheta, const Vec& dur, const Vec& dup) {
    if (have_ && !(t > t_prev_)) return;
    const auto& g = *g_;
    const double e2 = inner(g, dur, dur) + inner(g, dup, dup);
    const double r2 = inner(g, drho, drho);
    if (have_) {
      const double h = t - t_prev_;
      // trapezoid on the window-weighted fields: both endpoints contribute h/2
      add(t_prev_, 0.5 * h, prev_r_, prev_t_, prev_ur_, prev_up_);
      add(t, 0.5 * h, drho, dtheta, dur, dup);
      u2_ += 0.5 * h * (prev_e2_ + e2);
      r2_ += 0.5 * h * (prev_rr2_ + r2);
      span_ += h;
    }
    prev_r_ = drho;
    prev_t_ = dtheta;
    prev_ur_ = dur;
    prev_up_ = dup;
    prev_e2_ = e2;
    prev_rr2_ = r2;
    t_prev_ = t;
    have_ = true;
  }

  LimitErrors result() const {
    const auto& g = *g_;
    LimitErrors out;
    out.delta = delta_;
    out.windows = int(win_.size());
    out.warning = warning_;
    double a = 0, b = 0, c = 0;
    for (const auto& w : win_) {
      if (!(w.wsum > 0)) continue;
      Vec r = w.dr / w.wsum, t = w.dt / w.wsum, ur = w.dur / w.wsum, up = w.dup / w.wsum;
      a += std::pow(norm_lp(g, r, 5.0 / 3.0), 2);
      b += inner(g, t, t);
      c += inner(g, ur, ur) + inner(g, up, up);
    }
    const double n = double(win_.size());
    out.rho_avg = std::sqrt(a / n);
    out.theta_avg = std::sqrt(b / n);
    out.u_avg = std::sqrt(c / n);
    out.u_inst_rms = span_ > 0 ? std::sqrt(u2_ / span_) : 0.0;
    out.rho_inst_rms = span_ > 0 ? std::sqrt(r2_ / span_) : 0.0;
    return out;
  }

 private:
  struct Window {
    double c = 0, wsum = 0;
    Vec dr, dt, dur, dup;
  };

  void add(double t, double h, const Vec& dr, const Vec& dt, const Vec& dur, const Vec& dup) {
    for (auto& w : win_) {
      const double x = (t - w.c) / delta_;
      if (std::abs(x) >= 0.5) continue;
      const double wt = h * std::pow(std::cos(std::numbers::pi * x), 2);
      w.wsum += wt;
      w.dr += wt * dr;
      w.dt += wt * dt;
      w.dur += wt * dur;
      w.dup += wt * dup;
    }
  }

  GridPtr g_;
  double T_, delta_;
  std::vector<Window> win_;
  std::string warning_;
  Vec prev_r_, prev_t_, prev_ur_, prev_up_;
  double prev_e2_ = 0, prev_rr2_ = 0, u2_ = 0, r2_ = 0, span_ = 0, t_prev_ = 0;
  bool have_ = false;
};

// ---- uniform-bound monitors -------------------------------------------------------------------

struct UniformBounds {
  double ub1 = 0;   // sup_t int 1_res / eps^2
  double ub2 = 0;   // sup_t || [(rho - rho_bar)/eps]_ess ||_2
  double ub3 = 0;   // sup_t || [(theta - theta_bar)/eps]_ess ||_2
  double ub4 = 0;   // sup_t int ([rho^{5/3}]_res + [theta^4]_res) / eps^2
  double ub5 = 0;   // sup_t || sqrt(rho) u ||_2
  double ub5a = 0;  // int int sigma / eps^2
  double ub6 = 0;   // int || u ||_{H^1}^2 dt
  double ub7 = 0;   // int (|| (theta - theta_bar)/eps ||_{H^1} + || (log theta - log theta_bar)/eps ||_{H^1}) dt
  double rho_l53 = 0;    // sup_t || (rho - rho_bar)/eps ||_{5/3}
  double theta_l2 = 0;   // sup_t || (theta - theta_bar)/eps ||_2

  static std::vector<std::string> names() {
    return {"ub1", "ub2", "ub3", "ub4", "ub5", "ub5a", "ub6", "ub7", "rho_l53", "theta_l2"};
  }
  std::vector<double> values() const { return {ub1, ub2, ub3, ub4, ub5, ub5a, ub6, ub7, rho_l53, theta_l2}; }
};

class UniformBoundMonitor {
 public:
  UniformBoundMonitor(GridPtr g, ReferenceState ref, EssentialSet K) : g_(std::move(g)), ref_(ref), K_(K) {}

  void sample(const FluidState& s) {
    const auto& g = *g_;
    const double eps = s.epsilon, e2 = eps * eps;
    auto sp = ess_res_split(g, s.rho.v, s.theta.v, eps, ref_, K_);
    b_.ub1 = std::max(b_.ub1, sp.residual_measure / e2);
    b_.ub2 = std::max(b_.ub2, sp.ess_rho_norm);
    b_.ub3 = std::max(b_.ub3, sp.ess_theta_norm);
    b_.ub4 = std::max(b_.ub4, sp.residual_mass / e2);
    b_.ub5 = std::max(b_.ub5, std::sqrt(integrate(g, (s.m.r.cwiseAbs2() + s.m.phi.cwiseAbs2()).cwiseQuotient(s.rho.v))));
    b_.ub5a = s.dissipation / e2;
    Vec dr = (s.rho.v.array() - ref_.rho_bar).matrix() / eps;
    Vec dt = (s.theta.v.array() - ref_.theta_bar).matrix() / eps;
    b_.rho_l53 = std::max(b_.rho_l53, norm_lp(g, dr, 5.0 / 3.0));
    b_.theta_l2 = std::max(b_.theta_l2, norm_l2(g, dt));

    auto u = s.velocity();
    auto G = velocity_gradient(g, u.r, u.phi);
    const double h1u = inner(g, u.r, u.r) + inner(g, u.phi, u.phi) + inner(g, G.rr, G.rr) + inner(g, G.rp, G.rp) +
                       inner(g, G.pr, G.pr) + inner(g, G.pp, G.pp);
    Vec lt = (s.theta.v.array().log() - std::log(ref_.theta_bar)).matrix() / eps;
    const double q = h1(dt) + h1(lt);
    if (have_) {
      const double h = s.t - t_prev_;
      b_.ub6 += 0.5 * h * (prev_h1u_ + h1u);
      b_.ub7 += 0.5 * h * (prev_q_ + q);
    }
    prev_h1u_ = h1u;
    prev_q_ = q;
    t_prev_ = s.t;
    have_ = true;
  }

  const UniformBounds& bounds() const { return b_; }

 private:
  double h1(const Vec& f) const {
    auto gf = grad(*g_, f);
    return std::sqrt(inner(*g_, f, f) + inner(*g_, gf.r, gf.r) + inner(*g_, gf.phi, gf.phi));
  }

  GridPtr g_;
  ReferenceState ref_;
  EssentialSet K_;
  UniformBounds b_;
  double prev_h1u_ = 0, prev_q_ = 0, t_prev_ = 0;
  bool have_ = false;
};

// ---- per-run driver ----------------------------------------------------------------------------

struct RunDiagnosticsOptions {
  double T = 1.0;
  double averaging_width = 1.0;   // delta
  double acoustic_period = 0.0;   // lowest acoustic period at this epsilon (for the warning)
  EssentialSet K;
  std::vector<VectorTest> extra_tests;  // appended to the solenoidal family
};

struct RunDiagnosticsResult {
  double epsilon = 0;
  LimitErrors limit;
  std::vector<std::string> conv_tests;
  std::vector<double> D, A, A_bump;       // absolute values
  std::vector<ResidualEntry> wave;
  UniformBounds bounds;
  double mass_pairing = 0;        // max over scalar tests at T
  long samples = 0;
};

// Everything evaluated along one NSF run; call sample() at t = 0 and after
// every step, then result().
class RunDiagnostics {
 public:
  RunDiagnostics(const NSFSolver& nsf, const NeumannPoisson& P, const OBTrajectory* ob,
                 RunDiagnosticsOptions opt)
      : nsf_(nsf), P_(P), ob_(ob), opt_(opt), g_(nsf.config().grid),
        coeffs_(coefficients(nsf.config().model, nsf.config().ref)),
        wave_(g_, nsf.config().epsilon, coeffs_.omega, opt.T, scalar_tests(g_), gradient_tests(g_)),
        conv_(g_, &P, with_extra(solenoidal_tests(g_), opt.extra_tests), nsf.config().ref.rho_bar),
        limit_(g_, opt.T, opt.averaging_width, opt.acoustic_period),
        ub_(g_, nsf.config().ref, opt.K), mass_tests_(scalar_tests(g_)) {
    opt_.K.validate(nsf.config().ref);
    conv_.set_bump(opt_.T);
  }

  void sample(const FluidState& s) {
    const auto& cfg = nsf_.config();
    const auto& ref = cfg.ref;
    const double eps = s.epsilon;
    if (samples_ == 0) rho0_ = s.rho;
    ++samples_;
    auto ac = acoustic_state(s, cfg.model, ref, cfg.G);
    wave_.sample(s.t, ac.Z.v, ac.m);
    auto u = s.velocity();
    ub_.sample(s);
    if (ob_ && !ob_->empty()) {
      auto f = ob_->at(s.t);
      conv_.sample(s.t, s.m, u, &f.Ur, &f.Uphi);
      Vec dr = (s.rho.v.array() - ref.rho_bar).matrix() / eps - f.R;
      Vec dt = (s.theta.v.array() - ref.theta_bar).matrix() / eps - f.T;
      limit_.sample(s.t, dr, dt, u.r - f.Ur, u.phi - f.Uphi);
    } else {
      conv_.sample(s.t, s.m, u, nullptr, nullptr);
    }
    last_ = s;
  }

  RunDiagnosticsResult result() const {
    RunDiagnosticsResult r;
    r.epsilon = nsf_.config().epsilon;
    r.limit = limit_.result();
    for (size_t k = 0; k < conv_.tests().size(); ++k) {
      r.conv_tests.push_back(conv_.tests()[k].name);
      r.D.push_back(std::abs(conv_.D_signed()[k]));
      r.A.push_back(std::abs(conv_.A_signed()[k]));
      r.A_bump.push_back(std::abs(conv_.A_bump_signed()[k]));
    }
    r.wave = wave_.results();
    r.bounds = ub_.bounds();
    r.samples = samples_;
    for (const auto& t : mass_tests_) r.mass_pairing = std::max(r.mass_pairing, mass_pairing_residual(t, last_, rho0_));
    return r;
  }

 private:
  static std::vector<VectorTest> with_extra(std::vector<VectorTest> a, const std::vector<VectorTest>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  const NSFSolver& nsf_;
  const NeumannPoisson& P_;
  const OBTrajectory* ob_;
  RunDiagnosticsOptions opt_;
  GridPtr g_;
  MaterialCoefficients coeffs_;
  WaveResiduals wave_;
  ConvectiveFunctionals conv_;
  LimitErrorAccumulator limit_;
  UniformBoundMonitor ub_;
  std::vector<ScalarTest> mass_tests_;
  ScalarField rho0_;
  FluidState last_;
  long samples_ = 0;
};

}  // namespace lowmach
