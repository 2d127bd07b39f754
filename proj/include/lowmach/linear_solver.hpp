#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lowmach/grid.hpp"

namespace lowmach {

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  std::vector<double> history;
};

// Preconditioned conjugate gradients for a symmetric positive (semi)definite
// operator. `project` (optional) removes null-space components from the
// residual and the iterate; the system must then be consistent.
template <class Op, class Prec>
CgResult pcg(Op&& A, Prec&& M, const Vec& b, Vec& x, double tol, int max_iter,
             const std::function<void(Vec&)>& project = {}) {
  CgResult res;
  Vec bb = b;
  if (project) project(bb);
  const double bnorm = bb.norm();
  if (bnorm == 0.0) {
    x.setZero();
    return res;
  }
  if (project) project(x);
  Vec r = bb - A(x);
  if (project) project(r);
  Vec z = M(r);
  if (project) project(z);
  Vec p = z;
  double rz = r.dot(z);
  res.rel_residual = r.norm() / bnorm;
  res.history.push_back(res.rel_residual);
  while (res.rel_residual > tol) {
    if (res.iterations >= max_iter)
      throw SolverError("conjugate gradients did not converge: relative residual " +
                            std::to_string(res.rel_residual) + " after " +
                            std::to_string(res.iterations) + " iterations",
                        res.history);
    Vec Ap = A(p);
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0) || !std::isfinite(pAp))
      throw SolverError("conjugate gradients broke down (p.Ap = " + std::to_string(pAp) + ")",
                        res.history);
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    if (project) project(r);
    z = M(r);
    if (project) project(z);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    ++res.iterations;
    res.rel_residual = r.norm() / bnorm;
    res.history.push_back(res.rel_residual);
  }
  if (project) project(x);
  return res;
}

}  // namespace lowmach
