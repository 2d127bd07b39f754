#pragma once

#include <optional>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "lowmach/calculus.hpp"
#include "lowmach/thermo.hpp"

namespace lowmach {

struct StaticProblem {
  GridPtr grid;
  ThermoModel model;
  ReferenceState ref;
  ScalarField G;      // zero mean
  ScalarField T_ext;  // harmonic extension of the boundary temperature
  double epsilon = 0.0;

  void validate() const {
    require_same_grid(grid, G.grid);
    require_same_grid(grid, T_ext.grid);
    const double scale = grid->area() * std::max(1.0, G.v.cwiseAbs().maxCoeff());
    if (std::abs(integrate(G)) > 1e-12 * scale)
      throw ConfigError("gravitational potential must have zero mean");
    if (!(epsilon >= 0.0) || epsilon > 1.0) throw ConfigError("epsilon must lie in [0, 1]");
  }
  Vec theta_tilde() const { return (ref.theta_bar + epsilon * T_ext.v.array()).matrix(); }
};

struct StaticSolution {
  ScalarField rho_tilde;
  ScalarField first_order;
  double s1_residual = 0.0;   // discrete L2 norm of grad p - eps rho grad G
  double optimality = 0.0;    // L2 norm of the constrained Gauss-Newton gradient
  double mean_defect = 0.0;   // |int (rho_bar - rho_tilde)|
  int iterations = 0;
  std::vector<double> history;  // optimality per iteration
};

// rho^(1) = (rho_bar G - p_theta T_ext) / p_rho, shifted to zero mean.
inline ScalarField solve_first_order(const StaticProblem& pb) {
  auto q = partials(pb.model, pb.ref.rho_bar, pb.ref.theta_bar);
  if (!(q.p_rho > 0.0)) throw SingularStateError("d p / d rho vanishes at the reference state");
  Vec r1 = (pb.ref.rho_bar * pb.G.v - q.p_theta * pb.T_ext.v) / q.p_rho;
  return ScalarField(pb.grid, remove_mean(*pb.grid, std::move(r1)));
}

inline Vec pressure_field(const ThermoModel& m, const Vec& rho, const Vec& theta) {
  Vec p(rho.size());
  for (Eigen::Index k = 0; k < rho.size(); ++k) p[k] = pressure(m, rho[k], theta[k]);
  return p;
}

// grad p(rho, theta_tilde) - eps rho grad G, second-order gradient.
inline VecPair static_residual(const StaticProblem& pb, const Vec& rho) {
  const auto& g = *pb.grid;
  auto gp = grad(g, pressure_field(pb.model, rho, pb.theta_tilde()));
  auto gG = grad(g, pb.G.v);
  gp.r -= pb.epsilon * rho.cwiseProduct(gG.r);
  gp.phi -= pb.epsilon * rho.cwiseProduct(gG.phi);
  return gp;
}

namespace detail {

using SpMat = Eigen::SparseMatrix<double>;

// Sparse second-order radial derivative and (1/r) d/dphi.
inline std::pair<SpMat, SpMat> gradient_matrices(const DomainGrid& g) {
  std::vector<Eigen::Triplet<double>> tr, tp;
  const int n = g.nr(), m = g.nphi();
  const double c = 0.5 / g.dr(), cp = 0.5 / g.dphi();
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j < m; ++j) {
      const int k = g.index(i, j);
      if (i == 0) {
        tr.emplace_back(k, g.index(0, j), -3 * c);
        tr.emplace_back(k, g.index(1, j), 4 * c);
        tr.emplace_back(k, g.index(2, j), -c);
      } else if (i == n) {
        tr.emplace_back(k, g.index(n, j), 3 * c);
        tr.emplace_back(k, g.index(n - 1, j), -4 * c);
        tr.emplace_back(k, g.index(n - 2, j), c);
      } else {
        tr.emplace_back(k, g.index(i + 1, j), c);
        tr.emplace_back(k, g.index(i - 1, j), -c);
      }
      tp.emplace_back(k, g.index(i, (j + 1) % m), cp / g.r(i));
      tp.emplace_back(k, g.index(i, (j + m - 1) % m), -cp / g.r(i));
    }
  SpMat Dr(g.size(), g.size()), Dp(g.size(), g.size());
  Dr.setFromTriplets(tr.begin(), tr.end());
  Dp.setFromTriplets(tp.begin(), tp.end());
  return {Dr, Dp};
}

inline SpMat diagonal_matrix(const Vec& d) {
  SpMat E(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  for (Eigen::Index k = 0; k < d.size(); ++k) t.emplace_back(k, k, d[k]);
  E.setFromTriplets(t.begin(), t.end());
  return E;
}

}  // namespace detail

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 30;
};

// Gauss-Newton least squares for the static equation with the mean constraint
// int rho_tilde = rho_bar |Omega| imposed by a Lagrange multiplier. The
// angular odd-even mode lies in the kernel of the central gradient and is
// pinned by a second multiplier.
inline StaticSolution solve_newton(const StaticProblem& pb, std::optional<ScalarField> initial = {},
                                   NewtonOptions opt = {}) {
  pb.validate();
  const auto& g = *pb.grid;
  const int N = g.size();
  StaticSolution sol;
  sol.first_order = solve_first_order(pb);
  if (pb.epsilon == 0.0) {
    sol.rho_tilde = ScalarField(pb.grid, pb.ref.rho_bar);
    return sol;
  }
  const Vec theta = pb.theta_tilde();
  if (theta.minCoeff() <= 0.0) throw StateError("static temperature is not positive");

  Vec rho = initial ? initial->v
                    : Vec((pb.ref.rho_bar + pb.epsilon * sol.first_order.v.array()).matrix());
  if (rho.minCoeff() <= 0.0) throw StateError("initial static density is not positive");

  auto [Dr, Dp] = detail::gradient_matrices(g);
  auto gG = grad(g, pb.G.v);
  const Vec w = g.weights();
  Vec alt(N);
  for (int i = 0; i <= g.nr(); ++i)
    for (int j = 0; j < g.nphi(); ++j) alt[g.index(i, j)] = (j % 2) ? -1.0 : 1.0;
  const Vec C0 = w, C1 = w.cwiseProduct(alt);

  for (int it = 0; it <= opt.max_iter; ++it) {
    VecPair R = static_residual(pb, rho);
    Vec prho(N);
    for (int k = 0; k < N; ++k) prho[k] = partials(pb.model, rho[k], theta[k]).p_rho;
    detail::SpMat Er = detail::diagonal_matrix(Vec(-pb.epsilon * gG.r));
    detail::SpMat Ep = detail::diagonal_matrix(Vec(-pb.epsilon * gG.phi));
    detail::SpMat Jr = detail::SpMat(Dr * prho.asDiagonal()) + Er;
    detail::SpMat Jp = detail::SpMat(Dp * prho.asDiagonal()) + Ep;
    // gradient of (1/2)||R||_W^2 and its constrained part
    Vec grad_f = Jr.transpose() * w.cwiseProduct(R.r) + Jp.transpose() * w.cwiseProduct(R.phi);
    Eigen::Matrix2d CC;
    CC << C0.dot(C0), C0.dot(C1), C1.dot(C0), C1.dot(C1);
    Eigen::Vector2d cl = CC.ldlt().solve(Eigen::Vector2d(C0.dot(grad_f), C1.dot(grad_f)));
    Vec pg = grad_f - cl[0] * C0 - cl[1] * C1;
    sol.optimality = norm_l2(g, pg.cwiseQuotient(w));
    sol.s1_residual = std::sqrt(inner(g, R.r, R.r) + inner(g, R.phi, R.phi));
    sol.history.push_back(sol.optimality);
    const double mass_defect = pb.ref.rho_bar * g.area() - w.dot(rho);
    const double alt_defect = -C1.dot(rho - Vec::Constant(N, pb.ref.rho_bar));
    if (sol.optimality <= opt.tol && std::abs(mass_defect) <= 1e-13 * g.area()) break;
    if (it == opt.max_iter)
      throw SolverError("static Gauss-Newton did not converge", sol.history);

    // KKT system [J^T W J, C; C^T, 0]
    detail::SpMat H = detail::SpMat(Jr.transpose()) * w.asDiagonal() * Jr +
                      detail::SpMat(Jp.transpose()) * w.asDiagonal() * Jp;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(H.nonZeros() + 4 * N);
    for (int k = 0; k < H.outerSize(); ++k)
      for (detail::SpMat::InnerIterator itH(H, k); itH; ++itH) t.emplace_back(itH.row(), itH.col(), itH.value());
    for (int k = 0; k < N; ++k) {
      t.emplace_back(N, k, C0[k]);
      t.emplace_back(k, N, C0[k]);
      t.emplace_back(N + 1, k, C1[k]);
      t.emplace_back(k, N + 1, C1[k]);
    }
    detail::SpMat K(N + 2, N + 2);
    K.setFromTriplets(t.begin(), t.end());
    Eigen::SparseLU<detail::SpMat> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) throw SolverError("static KKT factorization failed", sol.history);
    Vec rhs(N + 2);
    rhs.head(N) = -grad_f;
    rhs[N] = mass_defect;
    rhs[N + 1] = alt_defect;
    Vec d = lu.solve(rhs);
    rho += d.head(N);
    sol.iterations = it + 1;
    if (rho.minCoeff() <= 0.0) throw StateError("static density lost positivity");
  }
  sol.rho_tilde = ScalarField(pb.grid, rho);
  sol.mean_defect = std::abs(pb.ref.rho_bar * g.area() - integrate(sol.rho_tilde));
  if (rho.minCoeff() <= 0.0) throw StateError("static density is not positive");
  return sol;
}

}  // namespace lowmach
