#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "critlab/spectra.hpp"

namespace critlab {

struct InstabilityReport {
  double nu = 0.0;                  // min of <L+ L-^{1/2} f, L-^{1/2} f> over unit f orthogonal to the profile
  std::optional<double> mu;         // sqrt(-nu) when nu < 0
  RadialField f_min;
  RadialField g_re, g_im;           // eigenfunction of -iL for +mu, up to normalization
  std::vector<std::complex<double>> block_eigs;
  double block_mu = 0.0;            // largest real part in the block spectrum
  double cross_error = 0.0;         // |mu - block_mu| / mu
  double symmetry_error = 0.0;      // max over lambda of min |lambda + lambda'|, relative to ||A||
  double block_scale = 0.0;
  double clamped_min = 0.0;         // most negative non-kernel eigenvalue of L- before clamping
};

/// Eigendecomposition of the rescaled L- with its kernel direction split off.
struct MinusBasis {
  RadialOperator plus, minus;
  Vec phi;       // unit profile in symmetric coordinates
  Eigen::MatrixXd Q;  // eigenvectors orthogonal to the kernel, ascending
  Vec D;         // matching eigenvalues, clamped to >= 0
  double clamped_min = 0.0;
};

inline MinusBasis minus_basis(const RescaledProfile& rp) {
  MinusBasis b{assemble(OperatorKind::rescaled_plus, rp), assemble(OperatorKind::rescaled_minus, rp),
               {}, {}, {}, 0.0};
  b.phi = b.minus.to_v(rp.field).normalized();
  const auto es = tridiagonal_eigen(b.minus);
  const auto m = b.minus.dim();
  Eigen::Index k0 = 0;
  (es.eigenvectors().transpose() * b.phi).cwiseAbs().maxCoeff(&k0);
  b.Q.resize(m, m - 1);
  b.D.resize(m - 1);
  b.clamped_min = INFINITY;
  for (Eigen::Index j = 0, c = 0; j < m; ++j) {
    if (j == k0) continue;
    double l = es.eigenvalues()[j];
    b.clamped_min = std::min(b.clamped_min, l);
    if (l < -1e-10) throw SolverError("L- has a negative eigenvalue below -1e-10 off its kernel");
    b.Q.col(c) = es.eigenvectors().col(j);
    b.D[c++] = std::max(l, 0.0);
  }
  return b;
}

/// Eigenvalues of the real 2m x 2m block [[0, S-], [-S+, 0]].
inline std::vector<std::complex<double>> block_spectrum(const RadialOperator& plus,
                                                        const RadialOperator& minus) {
  const auto m = plus.dim();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  A.block(0, m, m, m) = minus.dense();
  A.block(m, 0, m, m) = -plus.dense();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw SolverError("block eigensolver did not converge");
  std::vector<std::complex<double>> out(es.eigenvalues().begin(), es.eigenvalues().end());
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });
  return out;
}

inline double block_norm(const RadialOperator& plus, const RadialOperator& minus) {
  return std::max(plus.norm_bound(), minus.norm_bound());
}

/// Worst distance from -lambda to the spectrum, over all lambda, divided by ||A||.
inline double negation_symmetry_error(const std::vector<std::complex<double>>& ev, double scale) {
  double worst = 0.0;
  for (const auto& a : ev) {
    double best = INFINITY;
    for (const auto& b : ev) best = std::min(best, std::abs(a + b));
    worst = std::max(worst, best);
  }
  return worst / scale;
}

/// Symmetrized route to the unstable eigenvalue, cross-checked against the
/// block operator.
inline InstabilityReport unstable_eigenvalue(const MinusBasis& b, bool with_block = true) {
  InstabilityReport rep;
  rep.clamped_min = b.clamped_min;
  const Vec sd = b.D.cwiseSqrt();
  Eigen::MatrixXd PQ(b.Q.rows(), b.Q.cols());
  for (Eigen::Index j = 0; j < b.Q.cols(); ++j) PQ.col(j) = b.plus.multiply(b.Q.col(j));
  Eigen::MatrixXd T = sd.asDiagonal() * (b.Q.transpose() * PQ) * sd.asDiagonal();
  T = 0.5 * (T + T.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  if (es.info() != Eigen::Success) throw SolverError("symmetrized eigensolver did not converge");
  rep.nu = es.eigenvalues()[0];
  Vec y = es.eigenvectors().col(0);
  Vec f = b.Q * y;
  if (f[0] < 0.0) {
    f = -f;
    y = -y;
  }
  rep.f_min = b.minus.to_field(f);
  if (rep.nu < 0.0) {
    const double mu = std::sqrt(-rep.nu);
    rep.mu = mu;
    const Vec a = b.Q * sd.cwiseProduct(y);
    const Vec im = -b.plus.multiply(a) / mu;
    rep.g_re = b.minus.to_field(a);
    rep.g_im = b.minus.to_field(im);
  }
  if (with_block) {
    rep.block_eigs = block_spectrum(b.plus, b.minus);
    rep.block_scale = block_norm(b.plus, b.minus);
    rep.block_mu = rep.block_eigs.front().real();
    rep.symmetry_error = negation_symmetry_error(rep.block_eigs, rep.block_scale);
    if (rep.mu) rep.cross_error = std::abs(*rep.mu - rep.block_mu) / *rep.mu;
  }
  return rep;
}

inline InstabilityReport unstable_eigenvalue(const RescaledProfile& rp) {
  return unstable_eigenvalue(minus_basis(rp));
}

/// <L- ^{-1} g, g> over the complement of the kernel.
inline double inverse_minus_form(const MinusBasis& b, const Vec& gv) {
  const Vec c = b.Q.transpose() * gv;
  double s = 0.0;
  for (Eigen::Index j = 0; j < c.size(); ++j) {
    if (!(b.D[j] > 0.0)) throw SolverError("L- inverse undefined: clamped zero eigenvalue");
    s += c[j] * c[j] / b.D[j];
  }
  return s;
}

/// 1 on [0,1], 0 on [2,inf), smooth in between.
inline double smooth_cutoff(double t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  auto psi = [](double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; };
  const double s = t - 1.0;
  return psi(1.0 - s) / (psi(1.0 - s) + psi(s));
}

struct WitnessReport {
  double value = 0.0;        // <L+ g, g> for the rescaled L+
  double rayleigh = 0.0;     // value / <L-^{-1} g, g>
  double E = 0.0;            // -<L+(W) Z, Z> for the unit projected Z
  double cut_form = 0.0;     // <L+(W) Z_R, Z_R>
  double kappa = 0.0;
  double kappa_bound = 0.0;  // 2 |<profile, Z_R>| / ||profile||^2 on the unit ball
  RadialField g;
};

/// Test function built from the negative direction of L+(W), cut off at R_cut
/// and corrected by a multiple of the profile to meet the constraint.
inline WitnessReport instability_witness(const MinusBasis& b, const RescaledProfile& rp,
                                         double R_cut) {
  if (!(R_cut > 0.0)) throw InvalidArgument("witness cutoff radius must be positive");
  const auto& g = rp.field.grid;
  if (2.0 * R_cut >= g->r_max()) throw InvalidArgument("witness cutoff support exceeds the grid");
  const auto L0 = assemble(OperatorKind::talenti_plus, g);
  const auto sp = eigs(L0, 1);
  if (sp.neg_count < 1) throw SolverError("L+(W) shows no negative direction on this grid");
  const auto W = talenti(g);
  RadialField Z = sp.eigenfields[0];
  Z.values -= inner_product(Z, W) / inner_product(W, W) * W.values;
  Z.values /= std::sqrt(inner_product(Z, Z));
  WitnessReport w;
  w.E = -quadratic_form(L0, Z);
  RadialField ZR = Z;
  for (std::size_t i = 0; i < g->size(); ++i) ZR.values[i] *= smooth_cutoff(g->r(i) / R_cut);
  w.cut_form = quadratic_form(L0, ZR);
  if (!(w.cut_form < -0.5 * w.E))
    throw SolverError("cutoff destroyed negativity: R_cut too small");
  const double pz = inner_product(rp.field, ZR);
  w.kappa = -pz / inner_product(rp.field, rp.field);
  double ball = 0.0;
  const auto& V = g->weights();
  for (std::size_t i = 0; i < g->size() && g->r(i) <= 1.0; ++i) ball += V[i] * rp.field[i] * rp.field[i];
  w.kappa_bound = 2.0 * std::abs(pz) / ball;
  w.g = RadialField(g, w.kappa * rp.field.values + ZR.values);
  w.value = quadratic_form(b.plus, w.g);
  w.rayleigh = w.value / inverse_minus_form(b, b.minus.to_v(w.g));
  return w;
}

inline WitnessReport instability_witness(const RescaledProfile& rp, double R_cut) {
  return instability_witness(minus_basis(rp), rp, R_cut);
}

struct IndexReport {
  int n_R = 0;
  int i_L = 0;
  bool match = false;
  double tol = 0.0;        // classification threshold for R
  double block_tol = 0.0;  // real-part threshold for the block spectrum
};

/// Negative directions of L+ restricted to the profile's orthogonal
/// complement against unstable eigenvalues of the block operator.  Runs on the
/// rescaled operators: both counts are invariant under the scaling, and the
/// rescaled matrices carry smaller entries.
inline IndexReport gss_index(const GroundStateSolution& gs, double rel_tol = 1e-8) {
  const auto rp = rescale(gs);
  const auto plus = assemble(OperatorKind::rescaled_plus, rp);
  const auto minus = assemble(OperatorKind::rescaled_minus, rp);
  IndexReport rep;
  rep.tol = spectral_tol(plus.constant, rel_tol);
  const Vec phi = plus.to_v(rp.field).normalized();
  const auto m = plus.dim();
  const Eigen::MatrixXd P = Eigen::MatrixXd::Identity(m, m) - phi * phi.transpose();
  Eigen::MatrixXd R = P * plus.dense() * P;
  R = 0.5 * (R + R.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SolverError("projected eigensolver did not converge");
  for (Eigen::Index j = 0; j < m; ++j)
    if (es.eigenvalues()[j] < -rep.tol) ++rep.n_R;
  const auto ev = block_spectrum(plus, minus);
  const double scale = block_norm(plus, minus);
  rep.block_tol = std::max(rep.tol, 100.0 * std::sqrt(Eigen::NumTraits<double>::epsilon() * scale));
  for (const auto& l : ev)
    if (l.real() > rep.block_tol) ++rep.i_L;
  rep.match = rep.n_R == rep.i_L;
  return rep;
}

}  // namespace critlab
