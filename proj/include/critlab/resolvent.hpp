#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "critlab/field.hpp"
#include "critlab/fit.hpp"
#include "critlab/parallel.hpp"
#include "critlab/talenti.hpp"

namespace critlab {

// Radial kernel of (-Delta + lambda^2)^{-1} in three dimensions, obtained by
// averaging exp(-lambda|x-y|)/(4 pi |x-y|) over the sphere |y| = s:
//
//   K(r, s) = exp(-lambda |r - s|) psi(min(r, s)) / (4 pi max(r, s)),
//   psi(t)  = (1 - exp(-2 lambda t)) / (2 lambda t).
//
// The radial integral against the shell volumes V_j then approximates R0 f.
namespace detail {

inline void require_resolvent_input(const RadialField& f, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be positive");
  if (f.grid->d() != 3) throw InvalidArgument("the resolvent toolkit is three-dimensional");
  const double peak = f.values.cwiseAbs().maxCoeff();
  if (std::abs(f.values[f.values.size() - 1]) > 1e-8 * peak)
    throw InvalidArgument("resolvent input does not decay at the outer radius");
}

inline double psi(double lambda, double t) {
  const double x = 2.0 * lambda * t;
  return x < 1e-300 ? 1.0 : -std::expm1(-x) / x;
}

// Cell integral of the kernel's 1/s singularity at the origin: for r = 0 the
// node value K(0,0) is infinite, while the exact first-cell contribution is
// the integral of exp(-lambda s) s over [0, r_{1/2}].
inline double origin_cell(double lambda, double half) {
  const double x = lambda * half;
  if (x < 1e-4) return half * half * (0.5 - x / 3.0 + x * x / 8.0);
  return (1.0 - std::exp(-x) * (1.0 + x)) / (lambda * lambda);
}

}  // namespace detail

/// Dense matrix G with (R0 f)_i = sum_j G_ij f_j.
inline Eigen::MatrixXd resolvent_matrix(const GridPtr& g, double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
  if (g->d() != 3) throw InvalidArgument("the resolvent toolkit is three-dimensional");
  const auto n = static_cast<Eigen::Index>(g->size());
  const auto& V = g->weights();
  const double fourpi = 4.0 * std::numbers::pi;
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ri = g->r(i);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double rj = g->r(j);
      const double lo = std::min(ri, rj), hi = std::max(ri, rj);
      G(i, j) = hi > 0.0 ? std::exp(-lambda * (hi - lo)) * detail::psi(lambda, lo) / (fourpi * hi) * V[j]
                         : detail::origin_cell(lambda, 0.5 * g->r(1));
    }
  }
  return G;
}

/// R0(-lambda^2) f by quadrature of the radial kernel, in O(n) through the
/// two one-sided recursions of the separable kernel.
inline RadialField apply_resolvent(double lambda, const RadialField& f) {
  detail::require_resolvent_input(f, lambda);
  const auto& g = *f.grid;
  const std::size_t n = g.size();
  const auto& V = g.weights();
  const double fourpi = 4.0 * std::numbers::pi;
  // inner(i) = sum_{j <= i} exp(-lambda (r_i - r_j)) psi(r_j) f_j V_j, divided by 4 pi r_i
  // outer(i) = sum_{j > i} exp(-lambda (r_j - r_i)) f_j V_j / (4 pi r_j), times psi(r_i)
  Vec out = Vec::Zero(static_cast<Eigen::Index>(n));
  double acc = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    acc = acc * std::exp(-lambda * (g.r(i) - g.r(i - 1))) + detail::psi(lambda, g.r(i)) * f[i] * V[i];
    const double a0 = std::exp(-lambda * g.r(i)) * f[0] * V[0];
    out[static_cast<Eigen::Index>(i)] = (acc + a0) / (fourpi * g.r(i));
  }
  acc = 0.0;
  for (std::size_t i = n - 1; i-- > 0;) {
    acc = std::exp(-lambda * (g.r(i + 1) - g.r(i))) * (acc + f[i + 1] * V[i + 1] / (fourpi * g.r(i + 1)));
    out[static_cast<Eigen::Index>(i)] += i > 0 ? detail::psi(lambda, g.r(i)) * acc : acc;
  }
  out[0] += detail::origin_cell(lambda, 0.5 * g.r(1)) * f[0];
  return {f.grid, std::move(out)};
}

/// Relative residual of (-Delta_h + lambda^2) R0 f = f on nodes with r <= R/2.
inline double resolvent_identity_residual(double lambda, const RadialField& f) {
  const auto u = apply_resolvent(lambda, f);
  const auto& g = *f.grid;
  Vec res = neg_laplacian(g, u.values) + lambda * lambda * u.values - f.values;
  Vec ref = f.values;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.r(i) > 0.5 * g.r_max()) {
      res[static_cast<Eigen::Index>(i)] = 0.0;
      ref[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }
  return interior_l2(g, res) / interior_l2(g, ref);
}

/// L^q norm by grid quadrature (q = INFINITY for the sup norm).
inline double lq_norm(const RadialField& f, double q) {
  if (std::isinf(q)) return f.values.cwiseAbs().maxCoeff();
  const auto& V = f.grid->weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.grid->size(); ++i) s += V[i] * std::pow(std::abs(f[i]), q);
  return std::pow(s, 1.0 / q);
}

/// Exponent of lambda in the L^s -> L^q bound, after checking its hypothesis.
inline double resolvent_exponent(double s, double q) {
  if (!(s >= 1.0 && q >= s)) throw InvalidArgument("need 1 <= s <= q <= inf");
  const double gap = 3.0 * (1.0 / s - (std::isinf(q) ? 0.0 : 1.0 / q));
  if (!(gap < 2.0)) throw InvalidArgument("exponents violate 3(1/s - 1/q) < 2");
  return gap - 2.0;
}

struct ResolventProbe {
  double lambda = 0.0;
  double s = 0.0, q = 0.0;
  RadialField input, output;
  double norm_ratio = 0.0;
};

inline ResolventProbe probe(double lambda, double s, double q, const RadialField& f) {
  resolvent_exponent(s, q);
  ResolventProbe p{lambda, s, q, f, apply_resolvent(lambda, f), 0.0};
  p.norm_ratio = lq_norm(p.output, q) / lq_norm(f, s);
  return p;
}

/// Centered Gaussians exp(-r^2 / w^2) with widths w0 * sqrt(2)^k up to w1.
inline std::vector<RadialField> gaussian_family(const GridPtr& g, double w0, double w1) {
  std::vector<RadialField> out;
  for (double w = w0; w <= w1 * (1.0 + 1e-12); w *= std::numbers::sqrt2)
    out.push_back(sample(g, [w](double r) { return std::exp(-(r / w) * (r / w)); }));
  return out;
}

struct ScalingFit {
  double s = 0.0, q = 0.0;
  std::vector<double> lambdas;
  std::vector<double> ratios;  // max over the family of ||R0 f||_q / ||f||_s
  std::vector<std::size_t> argmax;
  LineFit fit;                 // log ratio against log lambda
  double expected_slope = 0.0;
};

/// Empirical lower-bound check of the lambda scaling of the L^s -> L^q norm.
inline ScalingFit norm_scaling_check(double s, double q, const std::vector<double>& lambdas,
                                     const std::vector<RadialField>& probes, int workers = 1) {
  ScalingFit out;
  out.expected_slope = resolvent_exponent(s, q);
  if (lambdas.size() < 2) throw InvalidArgument("need at least two lambda values");
  if (probes.empty()) throw InvalidArgument("empty probe family");
  out.s = s;
  out.q = q;
  out.lambdas = lambdas;
  out.ratios.assign(lambdas.size(), 0.0);
  out.argmax.assign(lambdas.size(), 0);
  parallel_for(lambdas.size(), workers, [&](std::size_t i) {
    for (std::size_t k = 0; k < probes.size(); ++k) {
      const double r = probe(lambdas[i], s, q, probes[k]).norm_ratio;
      if (r > out.ratios[i]) {
        out.ratios[i] = r;
        out.argmax[i] = k;
      }
    }
  });
  std::vector<double> x, y;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    x.push_back(std::log(lambdas[i]));
    y.push_back(std::log(out.ratios[i]));
  }
  out.fit = fit_line(x, y);
  return out;
}

inline double expansion_target() { return 5.0 / (3.0 * std::numbers::pi); }

struct ExpansionFit {
  std::vector<double> lambdas;       // decreasing
  std::vector<double> amplitudes;    // lambda <W^4 LW, x> / <W^4 LW, LW>
  double pairing = 0.0;              // <W^4 LW, f> by quadrature
  double pairing_solution_error = 0.0;  // worst relative gap to <W^4 LW, (1 - 5 R0 W^4) x>
  LineFit amplitude_fit;             // amplitude against lambda
  double coefficient_fit = 0.0;      // intercept / pairing
  double target = 0.0;
  double rel_error = 0.0;
  double cosine = 0.0;               // W^4-weighted, lambda x against LW at the smallest lambda
  std::vector<double> perturbed;     // sampled lambdas moved by 1% off a singular system
  std::vector<double> bounded_branch;  // ||x||_{L^4} for f projected off W^4 LW
  double branch_growth = 0.0;        // worst ratio over one lambda decade
};

/// Solution of (1 - 5 R0(-lambda^2) W^4) x = f by a dense solve.
inline RadialField birman_schwinger_solve(double lambda, const RadialField& f) {
  detail::require_resolvent_input(f, lambda);
  const auto& g = f.grid;
  const Vec w4 = talenti(g).values.array().pow(4.0).matrix();
  const auto n = static_cast<Eigen::Index>(g->size());
  Eigen::MatrixXd A = -5.0 * resolvent_matrix(g, lambda) * w4.asDiagonal();
  A.diagonal().array() += 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  Vec x = lu.solve(f.values);
  x += lu.solve(f.values - A * x);
  if (!x.allFinite() || n == 0 || (A * x - f.values).norm() > 1e-8 * f.values.norm())
    throw SolverError("singular Birman-Schwinger system");
  return {g, std::move(x)};
}

/// Leading lambda^{-1} coefficient of (1 - 5 R0 W^4)^{-1} f along LW.
inline ExpansionFit expansion_fit(const std::vector<double>& lambdas, const RadialField& f,
                                  int workers = 1) {
  if (lambdas.size() < 2) throw InvalidArgument("need at least two lambda values");
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0)) throw InvalidArgument("lambda must be positive");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1])) throw InvalidArgument("lambdas must decrease");
  }
  if (!(lambdas.front() / lambdas.back() >= 10.0 * (1.0 - 1e-12)))
    throw InvalidArgument("expansion fit needs at least one decade of lambda");
  const auto& g = f.grid;
  const auto LW = lambda_w(g);
  RadialField h(g, talenti(g).values.array().pow(4.0).matrix().cwiseProduct(LW.values));
  ExpansionFit out;
  out.lambdas = lambdas;
  out.target = expansion_target();
  out.pairing = inner_product(h, f);
  const double norm_h = inner_product(h, LW);
  const RadialField fperp(g, f.values - inner_product(h, f) / inner_product(h, h) * h.values);
  const std::size_t k = lambdas.size();
  out.amplitudes.assign(k, 0.0);
  out.bounded_branch.assign(k, 0.0);
  std::vector<double> pair_err(k, 0.0);
  RadialField last;
  std::vector<char> moved(k, 0);
  parallel_for(k, workers, [&](std::size_t i) {
    double lam = lambdas[i];
    RadialField x;
    try {
      x = birman_schwinger_solve(lam, f);
    } catch (const SolverError&) {
      lam *= 1.01;
      moved[i] = 1;
      x = birman_schwinger_solve(lam, f);
    }
    out.lambdas[i] = lam;
    out.amplitudes[i] = lam * inner_product(h, x) / norm_h;
    // Pairing recovered from the solution: <h, x - 5 R0(W^4 x)>.
    const Vec w4x = talenti(g).values.array().pow(4.0).matrix().cwiseProduct(x.values);
    const double back = inner_product(h, x) - 5.0 * inner_product(h, apply_resolvent(lam, {g, w4x}));
    pair_err[i] = std::abs(back - out.pairing) / std::abs(out.pairing);
    out.bounded_branch[i] = lq_norm(birman_schwinger_solve(lam, fperp), 4.0);
    if (i + 1 == k) last = RadialField(g, lam * x.values);
  });
  for (std::size_t i = 0; i < k; ++i)
    if (moved[i]) out.perturbed.push_back(out.lambdas[i]);
  out.pairing_solution_error = *std::max_element(pair_err.begin(), pair_err.end());
  out.amplitude_fit = fit_line(out.lambdas, out.amplitudes);
  out.coefficient_fit = out.amplitude_fit.intercept / out.pairing;
  out.rel_error = std::abs(out.coefficient_fit / out.target - 1.0);
  const Vec w4 = talenti(g).values.array().pow(4.0).matrix();
  const RadialField wl(g, w4.cwiseProduct(last.values));
  out.cosine = inner_product(wl, LW) /
               std::sqrt(inner_product(wl, last) * inner_product(RadialField(g, w4.cwiseProduct(LW.values)), LW));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k && out.lambdas[i] / out.lambdas[j] <= 10.0 * (1.0 + 1e-12); ++j)
      out.branch_growth = std::max(out.branch_growth, out.bounded_branch[j] / out.bounded_branch[i]);
  return out;
}

}  // namespace critlab
