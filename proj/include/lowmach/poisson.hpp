#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lowmach/calculus.hpp"
#include "lowmach/linear_solver.hpp"

namespace lowmach {

enum class PoissonMethod { spectral, pcg };

inline PoissonMethod parse_poisson_method(const std::string& s) {
  if (s == "spectral") return PoissonMethod::spectral;
  if (s == "pcg") return PoissonMethod::pcg;
  throw ConfigError("unknown poisson method '" + s + "' (expected spectral or pcg)");
}

// Radial SBP derivative as a dense (nr+1)x(nr+1) matrix.
inline Eigen::MatrixXd sbp_matrix(const DomainGrid& g) {
  const int n = g.nr();
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n + 1, n + 1);
  const double c = 0.5 / g.dr();
  for (int i = 1; i < n; ++i) {
    D(i, i + 1) = c;
    D(i, i - 1) = -c;
  }
  D(0, 0) = -1.0 / g.dr();
  D(0, 1) = 1.0 / g.dr();
  D(n, n) = 1.0 / g.dr();
  D(n, n - 1) = -1.0 / g.dr();
  return D;
}

// Weighted Neumann operator A q = -W div(P grad q), where P removes the radial
// component on the rings. A = dphi [R (x) I + diag(H/r) (x) K], with K the
// periodic central second difference (symbol s_m^2, s_m = sin(m dphi)/dphi).
// Its null space is span{1, (-1)^i} (x) span{1, (-1)^j}.
class NeumannPoisson {
 public:
  explicit NeumannPoisson(GridPtr g) : g_(std::move(g)) {
    const auto& gr = *g_;
    const int nrad = gr.nrad(), np = gr.nphi();
    Eigen::MatrixXd D = sbp_matrix(gr);
    Eigen::VectorXd hrp(nrad), hor(nrad);
    for (int i = 0; i < nrad; ++i) {
      hrp[i] = gr.is_boundary_row(i) ? 0.0 : gr.hw(i) * gr.r(i);
      hor[i] = gr.hw(i) / gr.r(i);
    }
    R_ = D.transpose() * hrp.asDiagonal() * D;
    hor_ = hor;

    // real orthonormal Fourier basis in phi
    F_.resize(np, np);
    col_mode_.resize(np);
    const double pi = std::numbers::pi;
    for (int j = 0; j < np; ++j) {
      F_(j, 0) = 1.0 / std::sqrt(double(np));
      F_(j, np - 1) = ((j % 2) ? -1.0 : 1.0) / std::sqrt(double(np));
      for (int m = 1; m < np / 2; ++m) {
        F_(j, 2 * m - 1) = std::sqrt(2.0 / np) * std::cos(2 * pi * m * j / np);
        F_(j, 2 * m) = std::sqrt(2.0 / np) * std::sin(2 * pi * m * j / np);
      }
    }
    col_mode_[0] = 0;
    col_mode_[np - 1] = np / 2;
    for (int m = 1; m < np / 2; ++m) col_mode_[2 * m - 1] = col_mode_[2 * m] = m;

    // per-mode pseudo-inverse through the symmetric eigendecomposition
    const int nm = np / 2 + 1;
    evec_.resize(nm);
    einv_.resize(nm);
    for (int m = 0; m < nm; ++m) {
      Eigen::MatrixXd M = gr.dphi() * mode_matrix(m);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
      Eigen::VectorXd inv(nrad);
      for (int k = 0; k < nrad; ++k) {
        double l = es.eigenvalues()[k];
        inv[k] = (std::abs(l) > 1e-11 * lmax) ? 1.0 / l : 0.0;
      }
      evec_[m] = es.eigenvectors();
      einv_[m] = inv;
    }

    // orthonormal null-space basis (Euclidean)
    Vec a(nrad), b(np);
    for (int i = 0; i < nrad; ++i) a[i] = (i % 2) ? -1.0 : 1.0;
    for (int j = 0; j < np; ++j) b[j] = (j % 2) ? -1.0 : 1.0;
    Vec oner = Vec::Ones(nrad), onep = Vec::Ones(np);
    const Vec* rad[2] = {&oner, &a};
    const Vec* ang[2] = {&onep, &b};
    for (auto* x : rad)
      for (auto* y : ang) {
        Vec v(gr.size());
        for (int i = 0; i < nrad; ++i) v.segment(i * np, np) = (*x)[i] * (*y);
        for (auto& u : null_) v -= u.dot(v) * u;
        null_.push_back(v / v.norm());
      }

    diag_.resize(gr.size());
    const double kjj = 1.0 / (2.0 * gr.dphi() * gr.dphi());
    for (int i = 0; i < nrad; ++i)
      diag_.segment(i * np, np).setConstant(gr.dphi() * (R_(i, i) + hor_[i] * kjj));
  }

  const GridPtr& grid() const { return g_; }
  const Eigen::MatrixXd& radial_matrix() const { return R_; }
  const Vec& h_over_r() const { return hor_; }

  double symbol(int m) const {
    return std::sin(m * g_->dphi()) / g_->dphi();
  }
  // R + s_m^2 diag(H/r), the operator of angular mode m divided by dphi
  Eigen::MatrixXd mode_matrix(int m) const {
    const double s = symbol(m);
    Eigen::MatrixXd M = R_;
    M.diagonal() += s * s * hor_;
    return M;
  }

  Vec apply(const Vec& q) const {
    const auto& g = *g_;
    Vec gr = ddr_sbp(g, q);
    zero_normal(g, gr);
    Vec gp = over_r(g, ddphi(g, q));
    Vec d = div(g, gr, gp);
    return -(g.weights().cwiseProduct(d));
  }

  void project_null(Vec& v) const {
    for (const auto& u : null_) v -= u.dot(v) * u;
  }

  // Minimum-norm solution of A q = b (b must be consistent).
  Vec solve(const Vec& b, PoissonMethod method = PoissonMethod::spectral, double tol = 1e-10,
            const Vec* guess = nullptr, CgResult* info = nullptr) const {
    if (method == PoissonMethod::spectral) return solve_spectral(b);
    Vec x = guess ? *guess : Vec::Zero(b.size());
    auto A = [this](const Vec& v) { return apply(v); };
    auto M = [this](const Vec& v) { return Vec(v.cwiseQuotient(diag_)); };
    auto proj = [this](Vec& v) { project_null(v); };
    CgResult r = pcg(A, M, b, x, tol, 20 * g_->size(), proj);
    if (info) *info = r;
    return x;
  }

  Vec solve_spectral(const Vec& b) const {
    const auto& g = *g_;
    Vec bb = b;
    project_null(bb);
    RowMat Bh = as_mat(g, bb) * F_;
    for (int c = 0; c < g.nphi(); ++c) {
      const int m = col_mode_[c];
      Eigen::VectorXd t = evec_[m].transpose() * Bh.col(c);
      t = t.cwiseProduct(einv_[m]);
      Bh.col(c) = evec_[m] * t;
    }
    Vec q(g.size());
    as_mat(g, q) = Bh * F_.transpose();
    project_null(q);
    return q;
  }

 private:
  GridPtr g_;
  Eigen::MatrixXd R_, F_;
  Vec hor_, diag_;
  std::vector<int> col_mode_;
  std::vector<Eigen::MatrixXd> evec_;
  std::vector<Eigen::VectorXd> einv_;
  std::vector<Vec> null_;
};

// sigma u - nu * laplace_compact(u) = f at interior nodes, u = boundary values
// on both rings. Weighted by W the interior operator is symmetric positive
// definite; solved by Jacobi-preconditioned CG.
inline Vec solve_dirichlet(const DomainGrid& g, double sigma, double nu, const Vec& f,
                           const Vec& bvals, double tol = 1e-10, const Vec* guess = nullptr,
                           CgResult* info = nullptr) {
  const int np = g.nphi(), n = g.nr();
  Vec w = g.weights();
  Vec gb = Vec::Zero(g.size());
  gb.head(np) = bvals.head(np);
  gb.tail(np) = bvals.tail(np);
  auto restrict_ = [np](Vec& v) {
    v.head(np).setZero();
    v.tail(np).setZero();
  };
  Vec rhs = w.cwiseProduct(f + nu * laplace_compact(g, gb));
  restrict_(rhs);
  Vec diag = Vec::Ones(g.size());
  const double dr2 = g.dr() * g.dr(), dp2 = g.dphi() * g.dphi();
  for (int i = 1; i < n; ++i) {
    const double r = g.r(i);
    diag.segment(i * np, np).setConstant(w[i * np] * (sigma + nu * (2.0 / dr2 + 2.0 / (r * r * dp2))));
  }
  auto A = [&](const Vec& x) {
    Vec y = w.cwiseProduct(sigma * x - nu * laplace_compact(g, x));
    restrict_(y);
    return y;
  };
  auto M = [&](const Vec& x) { return Vec(x.cwiseQuotient(diag)); };
  Vec x = guess ? Vec(*guess - gb) : Vec::Zero(g.size());
  restrict_(x);
  CgResult r = pcg(A, M, rhs, x, tol, 20 * g.size(), restrict_);
  if (info) *info = r;
  return x + gb;
}

}  // namespace lowmach
