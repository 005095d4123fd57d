#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "critlab/operator.hpp"
#include "critlab/parallel.hpp"
#include "critlab/spectra.hpp"

namespace critlab {

inline double mass(const RadialField& u) { return inner_product(u, u); }

struct DOmegaPhi {
  RadialField field;
  double solve_residual = 0.0;  // ||L+ x + phi|| / || |L+| |x| + |phi| ||
};

/// d phi / d omega from L+ x = -phi, using the same matrix as the spectral code.
inline DOmegaPhi domega_phi(const GroundStateSolution& gs) {
  const auto op = assemble(OperatorKind::plus, gs);
  const Vec b = -op.to_v(gs.field);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(detail::shifted(op, 0.0));
  if (lu.info() != Eigen::Success) throw SolverError("L+ is singular on this grid");
  Vec x = lu.solve(b);
  x += lu.solve(b - op.multiply(x));
  if (!x.allFinite()) throw SolverError("L+ solve produced non-finite values");
  // Backward error: the residual against the sizes of the terms that cancel
  // in it.  The graded grid puts ||L+|| many orders above the solution scale,
  // so a plain relative residual only measures rounding in the core.
  RadialOperator mag = op;
  mag.diag = op.diag.cwiseAbs();
  mag.off = op.off.cwiseAbs();
  const Vec scale = mag.multiply(x.cwiseAbs()) + b.cwiseAbs();
  DOmegaPhi out{op.to_field(x), (op.multiply(x) - b).norm() / scale.norm()};
  if (!(out.solve_residual <= 1e-8))
    throw SolverError("L+ solve residual " + std::to_string(out.solve_residual) +
                      " suggests a near-singular system");
  return out;
}

/// Ground state at a nearby frequency on a fixed grid.
inline GroundStateSolution resolve_on(const ProblemParams& pp, const GridPtr& g,
                                      const ShootTolerances& tol = {}) {
  return discretize(shoot_threshold(pp, tol), g, tol);
}

struct MassSample {
  double omega = 0.0;
  double mass = 0.0;
  std::vector<double> fd_steps;      // delta, delta/2, delta/4
  std::vector<double> fd_central;    // central differences at those steps
  std::vector<double> fd_richardson; // one extrapolation level on consecutive pairs
  double dmass_fd = 0.0;             // finest Richardson value
  double dmass_lin = 0.0;            // 2 <phi, d phi / d omega>
  double lin_residual = 0.0;
  double rel_agreement = 0.0;
  bool richardson_converging = false;
  bool sign_match = false;
};

struct MassCurve {
  ProblemParams params;
  std::vector<MassSample> samples;
  bool exploratory = false;  // d = 4 runs carry no assertions
};

/// Both mass derivatives at one frequency.  The finite differences use the
/// grid of the central solve so that both routes differentiate the same
/// discrete mass.
inline MassSample mass_sample(const ProblemParams& pp, double rel_step = 1e-3,
                              const ShootTolerances& tol = {}, const GridOptions& go = {}) {
  if (!(rel_step > 0.0 && rel_step < 0.1)) throw InvalidArgument("mass step must lie in (0, 0.1)");
  const auto gs = shoot(pp, tol, go);
  MassSample s;
  s.omega = pp.omega;
  s.mass = mass(gs.field);
  const auto dphi = domega_phi(gs);
  s.dmass_lin = 2.0 * inner_product(gs.field, dphi.field);
  s.lin_residual = dphi.solve_residual;
  for (int k = 0; k < 3; ++k) {
    const double delta = std::ldexp(rel_step * pp.omega, -k);
    ProblemParams lo = pp, hi = pp;
    lo.omega -= delta;
    hi.omega += delta;
    const double mp = mass(resolve_on(hi, gs.field.grid, tol).field);
    const double mm = mass(resolve_on(lo, gs.field.grid, tol).field);
    s.fd_steps.push_back(delta);
    s.fd_central.push_back((mp - mm) / (2.0 * delta));
  }
  for (std::size_t i = 0; i + 1 < s.fd_central.size(); ++i)
    s.fd_richardson.push_back((4.0 * s.fd_central[i + 1] - s.fd_central[i]) / 3.0);
  s.dmass_fd = s.fd_richardson.back();
  s.richardson_converging = std::abs(s.fd_central[1] - s.fd_central[2]) <
                            std::abs(s.fd_central[0] - s.fd_central[1]);
  s.rel_agreement = std::abs(s.dmass_fd - s.dmass_lin) / std::abs(s.dmass_lin);
  s.sign_match = (s.dmass_fd < 0.0) == (s.dmass_lin < 0.0);
  return s;
}

inline MassCurve mass_curve(const ProblemParams& base, const std::vector<double>& omegas,
                            double rel_step = 1e-3, const ShootTolerances& tol = {},
                            const GridOptions& go = {}, int workers = 1) {
  for (std::size_t i = 1; i < omegas.size(); ++i)
    if (!(omegas[i] > omegas[i - 1])) throw InvalidArgument("mass curve frequencies must increase");
  MassCurve mc;
  mc.params = base;
  mc.exploratory = base.d == 4;
  mc.samples.resize(omegas.size());
  parallel_for(omegas.size(), workers, [&](std::size_t i) {
    ProblemParams pp = base;
    pp.omega = omegas[i];
    mc.samples[i] = mass_sample(pp, rel_step, tol, go);
  });
  return mc;
}

/// Slope of omega -> ||phi_omega||^2 for a single power, from the exact
/// scaling phi_omega(x) = omega^{1/(p-1)} phi_1(sqrt(omega) x).
inline double single_power_slope(int d, double p, double omega, double unit_mass) {
  const double e = 2.0 / (p - 1.0) - 0.5 * d;
  return e * std::pow(omega, e - 1.0) * unit_mass;
}

}  // namespace critlab
