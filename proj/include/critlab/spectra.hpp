#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "critlab/operator.hpp"

namespace critlab {

/// Grid settings for dense spectral work: a few hundred nodes and a coarser
/// core step than the solver default, which keeps ||S|| small enough that
/// eigenvalues near the bottom of the truncated continuum stay resolved.
inline GridOptions spectral_grid_options(int n = 500) {
  GridOptions go;
  go.n = n;
  go.core_fraction = 1e-2;
  return go;
}

/// Classification threshold for negative and zero eigenvalues.
inline double spectral_tol(double constant, double rel = 1e-8) { return rel * (1.0 + std::abs(constant)); }

struct SpectrumReport {
  std::vector<double> eigenvalues;        // k lowest, ascending
  std::vector<RadialField> eigenfields;   // unit L2 norm, positive at the origin
  std::vector<double> residuals;          // ||L phi - lambda phi|| / ||phi||
  int neg_count = 0;                      // over the whole discrete spectrum
  std::vector<double> near_zero;
  double tol = 0.0;
  double scale = 0.0;                     // spectral radius bound of the matrix
};

/// Eigen decomposition of the symmetric tridiagonal matrix of an operator.
inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tridiagonal_eigen(const RadialOperator& op,
                                                                        bool vectors = true) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(op.diag, op.off,
                            vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("tridiagonal eigensolver did not converge");
  return es;
}

/// Rayleigh quotient from the sum-of-squares form.  Accurate for eigenvalues
/// far below the rounding level eps ||S|| of the matrix itself.
inline double rayleigh_quotient(const RadialOperator& op, const Vec& v) {
  return quadratic_form(op, op.to_field(v)) / v.squaredNorm();
}

namespace detail {

inline Eigen::SparseMatrix<double> shifted(const RadialOperator& op, double shift) {
  const auto m = op.dim();
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(3 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    t.emplace_back(i, i, op.diag[i] - shift);
    if (i + 1 < m) {
      t.emplace_back(i, i + 1, op.off[i]);
      t.emplace_back(i + 1, i, op.off[i]);
    }
  }
  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// Inverse iteration at a fixed shift.  The tridiagonal factorization is
// componentwise stable, so small eigenvalues of a strongly graded matrix come
// out far more accurately than from a normwise-stable dense solver.
inline Vec inverse_iterate(const RadialOperator& op, double shift, Vec v,
                           const std::vector<Vec>& deflate, int steps) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(shifted(op, shift));
  if (lu.info() != Eigen::Success) return v;
  for (int it = 0; it < steps; ++it) {
    Vec w = lu.solve(v);
    for (const auto& d : deflate) w -= d.dot(w) * d;
    if (!w.allFinite() || w.norm() == 0.0) break;
    v = w.normalized();
  }
  return v;
}

}  // namespace detail

/// The k lowest eigenpairs with residuals and counts.  Dense eigenvectors
/// below 3000 unknowns, inverse iteration from the eigenvalues above that;
/// in both cases each pair is polished by shifted inverse iteration and the
/// eigenvalue taken as the sum-of-squares Rayleigh quotient.
inline SpectrumReport eigs(const RadialOperator& op, int k, double rel_tol = 1e-8) {
  if (k < 1) throw InvalidArgument("eigs: k must be at least 1");
  const auto m = op.dim();
  k = static_cast<int>(std::min<Eigen::Index>(k, m));
  SpectrumReport rep;
  rep.tol = spectral_tol(op.constant, rel_tol);
  rep.scale = op.norm_bound();
  const bool dense = m <= 3000;
  const auto es = tridiagonal_eigen(op, dense);
  const Vec& lam = es.eigenvalues();
  std::vector<Vec> vecs;
  for (int j = 0; j < k; ++j) {
    Vec v = dense ? Vec(es.eigenvectors().col(j)) : Vec(Vec::Ones(m).normalized());
    const double gapj = std::min(j > 0 ? lam[j] - lam[j - 1] : INFINITY,
                                 j + 1 < m ? lam[j + 1] - lam[j] : INFINITY);
    const double offset = std::max(1e-3 * gapj, 1e-14 * rep.scale);
    v = detail::inverse_iterate(op, lam[j] - offset, v, vecs, dense ? 2 : 6);
    if (v[0] < 0.0) v = -v;
    v.normalize();
    vecs.push_back(v);
  }
  for (int j = 0; j < k; ++j) {
    const Vec& v = vecs[j];
    const double l = rayleigh_quotient(op, v);
    rep.eigenvalues.push_back(l);
    rep.residuals.push_back((op.multiply(v) - l * v).norm());
    rep.eigenfields.push_back(op.to_field(v));
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const double l = j < k ? rep.eigenvalues[j] : lam[j];
    if (l < -rep.tol) ++rep.neg_count;
    if (std::abs(l) <= rep.tol) rep.near_zero.push_back(l);
  }
  return rep;
}

/// Smallest |lambda| of the radial L_{omega,+} after removing its unique
/// negative eigenvalue.  A different negative count is an error.
inline double nondegeneracy_gap(const GroundStateSolution& gs, double rel_tol = 1e-8) {
  const auto op = assemble(OperatorKind::plus, gs);
  const auto rep = eigs(op, 3, rel_tol);
  if (rep.neg_count != 1) {
    throw SolverError("L+ has " + std::to_string(rep.neg_count) +
                      " negative eigenvalues; expected exactly one");
  }
  return std::abs(rep.eigenvalues[1]);
}

/// Ground state on a dense-spectral grid, sharing the shooting result.
inline GroundStateSolution spectral_ground_state(const ShootResult& sr, int n = 500,
                                                 const ShootTolerances& tol = {},
                                                 double core_fraction = 1e-2) {
  auto go = spectral_grid_options(n);
  go.core_fraction = core_fraction;
  return discretize(sr, ground_state_grid(sr.params, sr.m, go), tol);
}

}  // namespace critlab
