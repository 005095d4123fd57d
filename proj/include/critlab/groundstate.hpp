#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/numeric/odeint.hpp>

#include "critlab/error.hpp"
#include "critlab/field.hpp"
#include "critlab/fit.hpp"

namespace critlab {

/// omega u - Delta u - epsilon |u|^{p-1} u - [critical_on] |u|^{4/(d-2)} u = 0.
struct ProblemParams {
  int d = 3;
  double p = 4.0;
  double omega = 10.0;
  double epsilon = 1.0;
  bool critical_on = true;
};

inline double critical_power(int d) { return (d + 2.0) / (d - 2.0); }

inline std::string admissible_set() {
  return "(d=3, 3<p<5), (d=4, 2<=p<3), (d>=5, 1<p<(d+2)/(d-2)); with the critical term off, "
         "any 1<p<(d+2)/(d-2)";
}

inline bool admissible(int d, double p, bool critical_on) {
  if (d < 3 || !std::isfinite(p)) return false;
  const double top = critical_power(d);
  if (!critical_on) return p > 1.0 && p < top;
  if (d == 3) return p > 3.0 && p < 5.0;
  if (d == 4) return p >= 2.0 && p < 3.0;
  return p > 1.0 && p < top;
}

inline void validate(const ProblemParams& pp) {
  if (!admissible(pp.d, pp.p, pp.critical_on)) {
    std::ostringstream os;
    os << "parameters (d=" << pp.d << ", p=" << pp.p << ") are not admissible; admissible set: "
       << admissible_set();
    throw InvalidArgument(os.str());
  }
  if (!(pp.omega > 0.0) || !std::isfinite(pp.omega)) throw InvalidArgument("omega must be positive");
  if (!(pp.epsilon >= 0.0) || !std::isfinite(pp.epsilon))
    throw InvalidArgument("epsilon must be nonnegative");
  if (!pp.critical_on && pp.epsilon == 0.0)
    throw InvalidArgument("equation without nonlinearity has no ground state");
}

/// Power nonlinearity f(u) and its derivative.
struct Nonlinearity {
  double p, eps, s, crit;

  explicit Nonlinearity(const ProblemParams& pp)
      : p(pp.p), eps(pp.epsilon), s(critical_power(pp.d)), crit(pp.critical_on ? 1.0 : 0.0) {}

  double f(double u) const {
    const double a = std::abs(u);
    return eps * std::pow(a, p - 1.0) * u + crit * std::pow(a, s - 1.0) * u;
  }
  double df(double u) const {
    const double a = std::abs(u);
    return eps * p * std::pow(a, p - 1.0) + crit * s * std::pow(a, s - 1.0);
  }
  // f(u)/u, the potential of the imaginary-part operator.
  double f_over_u(double u) const {
    const double a = std::abs(u);
    return eps * std::pow(a, p - 1.0) + crit * std::pow(a, s - 1.0);
  }
};

struct ShootTolerances {
  double bracket = 1e-12;   // relative width of the final m interval
  double residual = 1e-8;   // relative discrete residual accepted after polishing
  double ode_rtol = 1e-12;  // integrator relative tolerance
};

struct GridOptions {
  int n = 20000;
  Spacing spacing = Spacing::graded;
  // First step as a fraction of the core width.  The threshold is sensitive
  // to the resolution near the origin, so this is much finer than the
  // 1e-6 R floor for large omega.
  double core_fraction = 3e-4;
  double decay_lengths = 40.0;  // R = decay_lengths / sqrt(omega)
  double r_cap = 400.0;
};

struct ShootResult {
  ProblemParams params;
  double m = 0.0;
  std::array<double, 2> bracket{0.0, 0.0};
  int trajectories = 0;
};

struct GroundStateSolution {
  ProblemParams params;
  RadialField field;
  double M = 0.0;
  double residual = 0.0;
  double decay_rate = 0.0;
  double decay_r2 = 0.0;
  std::array<double, 2> shoot_bracket{0.0, 0.0};
  double m_shoot = 0.0;
  double discretization_error = 0.0;  // |M - m_shoot|
};

namespace detail {

using State = std::array<double, 2>;
enum class Shot { undershoot, overshoot };

// Length scale of the core where the nonlinearity dominates.
inline double core_scale(const ProblemParams& pp, double m) {
  double l = 1.0 / std::sqrt(pp.omega);
  if (pp.critical_on) l = std::min(l, std::pow(m, -2.0 / (pp.d - 2)));
  if (pp.epsilon > 0.0) l = std::min(l, 1.0 / std::sqrt(pp.epsilon * std::pow(m, pp.p - 1.0)));
  return l;
}

inline double truncation_radius(const ProblemParams& pp, const GridOptions& go) {
  return std::min(go.decay_lengths / std::sqrt(pp.omega), go.r_cap);
}

// Integrate the radial ODE from a Taylor start at the origin.  `visit` is
// called after every accepted step with the dense-output stepper and
// returns false to stop.  The return value classifies the trajectory.
template <class Visit>
Shot integrate(const ProblemParams& pp, double m, double R, double rtol, Visit&& visit) {
  namespace odeint = boost::numeric::odeint;
  const Nonlinearity nl(pp);
  const int d = pp.d;
  const double w = pp.omega;
  auto rhs = [&](const State& x, State& dx, double r) {
    dx[0] = x[1];
    dx[1] = w * x[0] - nl.f(x[0]) - (d - 1) * x[1] / r;
  };
  const double r0 = 1e-4 * core_scale(pp, m);
  const double a = w * m - nl.f(m);
  State x{m + a * r0 * r0 / (2.0 * d), a * r0 / d};
  if (x[1] > 0.0) return Shot::undershoot;
  auto stepper = odeint::make_dense_output(1e-14 * m, rtol, odeint::runge_kutta_dopri5<State>());
  stepper.initialize(x, r0, r0);
  try {
    while (stepper.current_time() < R) {
      stepper.do_step(rhs);
      const State& s = stepper.current_state();
      if (!std::isfinite(s[0]) || !std::isfinite(s[1]))
        throw IntegratorFailure("non-finite state in radial integration");
      if (stepper.current_time_step() < 1e-15 * stepper.current_time())
        throw IntegratorFailure("step size underflow in radial integration");
      if (!visit(stepper)) return Shot::undershoot;
      if (s[0] < 0.0) return Shot::overshoot;
      if (s[1] > 0.0) return Shot::undershoot;
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw IntegratorFailure(std::string("radial integration failed: ") + e.what());
  }
  return Shot::undershoot;
}

inline Shot classify(const ProblemParams& pp, double m, double R, double rtol) {
  return integrate(pp, m, R, rtol, [](auto&) { return true; });
}

}  // namespace detail

/// Bisection on the initial value u(0) = m between the first undershoot and
/// overshoot found on a decade scan starting from [1, 1e8].
inline ShootResult shoot_threshold(const ProblemParams& pp, const ShootTolerances& tol = {},
                                   const GridOptions& go = {}) {
  validate(pp);
  const double R = detail::truncation_radius(pp, go);
  ShootResult out;
  out.params = pp;
  auto shot = [&](double m) {
    ++out.trajectories;
    return detail::classify(pp, m, R, tol.ode_rtol);
  };
  using detail::Shot;
  double lo = 1.0, hi = 0.0;
  if (shot(lo) == Shot::overshoot) {
    hi = lo;
    for (lo = 1e-2; shot(lo) == Shot::overshoot; lo *= 1e-2)
      if (lo < 1e-16) throw BracketNotFound("no undershoot found for small initial values");
  } else {
    double top = 1e8;
    for (double m = 10.0;; m *= 10.0) {
      if (shot(m) == Shot::overshoot) {
        hi = m;
        break;
      }
      lo = m;
      if (m >= top) {
        top *= 100.0;
        if (top > 1e20) throw BracketNotFound("no overshoot found up to u(0) = 1e20");
      }
    }
  }
  while (hi / lo - 1.0 > tol.bracket) {
    const double mid = std::sqrt(lo * hi);
    if (mid <= lo || mid >= hi) break;
    (shot(mid) == Shot::overshoot ? hi : lo) = mid;
  }
  out.bracket = {lo, hi};
  out.m = lo;
  return out;
}

/// Default grid for a ground state with peak m.
inline GridPtr ground_state_grid(const ProblemParams& pp, double m, const GridOptions& go = {}) {
  const double R = detail::truncation_radius(pp, go);
  const double h0 = std::min(1e-6 * R, go.core_fraction * detail::core_scale(pp, m));
  return make_grid(pp.d, R, go.n, go.spacing, h0);
}

/// Shooting profile sampled on a grid: the integrated trajectory up to the
/// point where it falls below 1e-4 m, then the decaying linear tail.
inline RadialField trace_profile(const ShootResult& sr, const GridPtr& g,
                                 const ShootTolerances& tol = {}) {
  const auto& pp = sr.params;
  const auto& nodes = g->nodes();
  const std::size_t n = nodes.size();
  const double m = sr.m;
  Vec u = Vec::Zero(static_cast<Eigen::Index>(n));
  const double a = pp.omega * m - Nonlinearity(pp).f(m);
  const double r0 = 1e-4 * detail::core_scale(pp, m);
  std::size_t i = 0;
  for (; i < n && nodes[i] <= r0; ++i) u[i] = m + a * nodes[i] * nodes[i] / (2.0 * pp.d);
  bool stop = false;
  detail::integrate(pp, m, g->r_max(), tol.ode_rtol, [&](auto& st) {
    detail::State x;
    while (!stop && i < n && nodes[i] <= st.current_time()) {
      st.calc_state(nodes[i], x);
      if (x[0] < 1e-4 * m || x[1] > 0.0) {
        stop = true;
        break;
      }
      u[i++] = x[0];
    }
    return !stop;
  });
  if (i < 2) throw SolverError("shooting trajectory left the core immediately");
  const double nu = 0.5 * pp.d - 1.0;
  const double k = std::sqrt(pp.omega);
  auto tail = [&](double r) { return std::pow(r, -nu) * std::cyl_bessel_k(nu, k * r); };
  const double amp = u[i - 1] / tail(nodes[i - 1]);
  for (; i + 1 < n; ++i) u[i] = amp * tail(nodes[i]);
  u[n - 1] = 0.0;
  return {g, std::move(u)};
}

namespace detail {

// March the finite-volume equation outward from u_0 = m, one node at a time.
// Returns the classification and the number of nodes filled before the
// trajectory crossed zero or turned upward.
inline std::pair<Shot, std::size_t> march(const ProblemParams& pp, const RadialGrid& g, double m,
                                          Vec& u) {
  const Nonlinearity nl(pp);
  const auto& c = g.faces();
  const auto& w = g.weights();
  const std::size_t n = g.size();
  u.resize(static_cast<Eigen::Index>(n));
  u[0] = m;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double flux = w[i] * (pp.omega * u[i] - nl.f(u[i]));
    if (i > 0) flux += c[i - 1] * (u[i] - u[i - 1]);
    const double next = u[i] + flux / c[i];
    if (next < 0.0) return {Shot::overshoot, i + 1};
    if (next > u[i]) return {Shot::undershoot, i + 1};
    u[i + 1] = next;
  }
  return {Shot::undershoot, n};
}

}  // namespace detail

/// Discrete ground state by shooting the grid equation itself: bisection on
/// u_0 near m to full precision, the decaying linear tail past the point
/// where the bracketing trajectories separate, then Newton to settle the tail.
inline RadialField discrete_profile(const ProblemParams& pp, const GridPtr& gp, double m) {
  using detail::Shot;
  const auto& g = *gp;
  Vec ulo, uhi;
  double lo = m, hi = m;
  const Shot first = detail::march(pp, g, m, ulo).first;
  for (double step = 1e-4;; step *= 2.0) {
    if (step > 10.0) throw BracketNotFound("no discrete threshold near the shooting value");
    const double trial = first == Shot::overshoot ? m / (1.0 + step) : m * (1.0 + step);
    if (detail::march(pp, g, trial, uhi).first != first) {
      (first == Shot::overshoot ? lo : hi) = trial;
      break;
    }
    (first == Shot::overshoot ? hi : lo) = trial;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (detail::march(pp, g, mid, ulo).first == Shot::overshoot ? hi : lo) = mid;
  }
  const auto [slo, nlo] = detail::march(pp, g, lo, ulo);
  const auto [shi, nhi] = detail::march(pp, g, hi, uhi);
  const std::size_t n = g.size();
  std::size_t cut = 1;
  while (cut < std::min(nlo, nhi) && std::abs(uhi[cut] - ulo[cut]) <= 1e-8 * ulo[cut]) ++cut;
  const double nu = 0.5 * pp.d - 1.0;
  const double k = std::sqrt(pp.omega);
  auto tail = [&](double r) { return std::pow(r, -nu) * std::cyl_bessel_k(nu, k * r); };
  Vec u = Vec::Zero(static_cast<Eigen::Index>(n));
  u.head(cut) = ulo.head(cut);
  if (cut < n) {
    const double amp = ulo[cut - 1] / tail(g.r(cut - 1));
    for (std::size_t i = cut; i + 1 < n; ++i) u[i] = amp * tail(g.r(i));
  }
  u[n - 1] = 0.0;
  return {gp, std::move(u)};
}

/// Relative discrete residual of the stationary equation:
/// ||-Delta_h u + omega u - f(u)|| / (omega ||u|| + ||f(u)||), interior nodes.
inline double equation_residual(const ProblemParams& pp, const RadialField& u) {
  const auto& g = *u.grid;
  const Nonlinearity nl(pp);
  const Vec fu = u.values.unaryExpr([&](double x) { return nl.f(x); });
  const Vec res = neg_laplacian(g, u.values) + pp.omega * u.values - fu;
  return interior_l2(g, res) / (pp.omega * interior_l2(g, u.values) + interior_l2(g, fu));
}

struct DecayFit {
  double rate = 0.0;
  double r2 = 0.0;
};

/// Fit log(r^{(d-1)/2} u) against r on [R/10, R/2]; the rate is minus the slope.
inline DecayFit fit_decay(const RadialField& u) {
  const auto& g = *u.grid;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g.r(i);
    if (r < 0.1 * g.r_max() || r > 0.5 * g.r_max() || !(u[i] > 0.0)) continue;
    x.push_back(r);
    y.push_back(std::log(u[i]) + 0.5 * (g.d() - 1) * std::log(r));
  }
  if (x.size() < 2) throw SolverError("not enough tail nodes for a decay fit");
  const auto f = fit_line(x, y);
  return {-f.slope, f.r2};
}

/// Newton iteration for the discrete equation, started from u0.
inline RadialField newton_polish(const ProblemParams& pp, const RadialField& u0, double target = 1e-13) {
  const auto& g = *u0.grid;
  const Nonlinearity nl(pp);
  const auto m = static_cast<Eigen::Index>(g.size()) - 1;
  const auto K = stiffness(g);
  const Eigen::Map<const Vec> V(g.weights().data(), m);
  Vec u = u0.values.head(m);
  auto residual = [&](const Vec& v) {
    Vec r = K.diag.cwiseProduct(v);
    r.head(m - 1) += K.off.cwiseProduct(v.tail(m - 1));
    r.tail(m - 1) += K.off.cwiseProduct(v.head(m - 1));
    for (Eigen::Index i = 0; i < m; ++i) r[i] += V[i] * (pp.omega * v[i] - nl.f(v[i]));
    return r;
  };
  auto scaled = [&](const Vec& r) { return std::sqrt((r.array().square() / V.array()).sum()); };
  Vec r = residual(u);
  double norm = scaled(r);
  const double ref = pp.omega * std::sqrt((V.array() * u.array().square()).sum());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  for (int it = 0; it < 40 && norm > target * ref; ++it) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(3 * m);
    // Symmetrically scaled Jacobian V^{-1/2} J V^{-1/2}; the raw one spans
    // too many orders of magnitude between the origin and the outer radius.
    for (Eigen::Index i = 0; i < m; ++i) {
      t.emplace_back(i, i, K.diag[i] / V[i] + pp.omega - nl.df(u[i]));
      if (i + 1 < m) {
        const double o = K.off[i] / std::sqrt(V[i] * V[i + 1]);
        t.emplace_back(i, i + 1, o);
        t.emplace_back(i + 1, i, o);
      }
    }
    Eigen::SparseMatrix<double> J(m, m);
    J.setFromTriplets(t.begin(), t.end());
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw SolverError("Newton Jacobian factorization failed");
    const Vec step = lu.solve(Vec(r.array() / V.array().sqrt())).array() / V.array().sqrt();
    double lambda = 1.0;
    Vec trial;
    double tn = 0.0;
    for (int k = 0; k < 30; ++k, lambda *= 0.5) {
      trial = u - lambda * step;
      tn = scaled(residual(trial));
      if (tn < norm) break;
    }
    if (!(tn < norm)) break;
    u = trial;
    norm = tn;
  }
  Vec full = Vec::Zero(m + 1);
  full.head(m) = u;
  return {u0.grid, std::move(full)};
}

/// Ground state on a given grid from a shooting result.
inline GroundStateSolution discretize(const ShootResult& sr, const GridPtr& g,
                                      const ShootTolerances& tol = {}) {
  GroundStateSolution gs;
  gs.params = sr.params;
  gs.m_shoot = sr.m;
  gs.shoot_bracket = sr.bracket;
  gs.field = newton_polish(sr.params, discrete_profile(sr.params, g, sr.m));
  gs.M = gs.field[0];
  gs.discretization_error = std::abs(gs.M - sr.m);
  gs.residual = equation_residual(sr.params, gs.field);
  if (!(gs.residual <= tol.residual)) {
    std::ostringstream os;
    os << "ground state residual " << gs.residual << " exceeds " << tol.residual;
    throw SolverError(os.str());
  }
  const auto& v = gs.field.values;
  for (Eigen::Index i = 0; i + 1 < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw SolverError("ground state is not positive");
    if (i > 0 && !(v[i] < v[i - 1])) throw SolverError("ground state is not strictly decreasing");
  }
  const auto fit = fit_decay(gs.field);
  gs.decay_rate = fit.rate;
  gs.decay_r2 = fit.r2;
  return gs;
}

inline GroundStateSolution shoot(const ProblemParams& pp, const ShootTolerances& tol = {},
                                 const GridOptions& go = {}) {
  const auto sr = shoot_threshold(pp, tol, go);
  return discretize(sr, ground_state_grid(pp, sr.m, go), tol);
}

/// Peak-normalized profile on the stretched grid, with its induced
/// frequency alpha and subcritical coefficient beta.
struct RescaledProfile {
  RadialField field;
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;
  ProblemParams source;  // parameters of the original solution
  double M = 0.0;

  /// The rescaled equation in the same family: omega -> alpha, epsilon -> beta.
  ProblemParams equation() const {
    ProblemParams q = source;
    q.omega = alpha;
    q.epsilon = beta;
    return q;
  }
};

inline RescaledProfile rescale(const GroundStateSolution& gs) {
  const auto& pp = gs.params;
  const double M = gs.M;
  const double sc = std::pow(M, 2.0 / (pp.d - 2));
  RescaledProfile rp;
  rp.source = pp;
  rp.M = M;
  auto g = std::make_shared<const RadialGrid>(gs.field.grid->scaled(sc));
  Vec v = gs.field.values / M;
  v[0] = 1.0;
  rp.field = RadialField(g, std::move(v));
  const double crit = 4.0 / (pp.d - 2);
  rp.alpha = pp.omega * std::pow(M, -crit);
  rp.beta = pp.epsilon * std::pow(M, pp.p - 1.0 - crit);
  rp.residual = equation_residual(rp.equation(), rp.field);
  return rp;
}

}  // namespace critlab
