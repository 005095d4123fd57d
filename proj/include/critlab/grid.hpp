#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "critlab/error.hpp"

namespace critlab {

enum class Spacing { uniform, graded };

inline std::string to_string(Spacing s) { return s == Spacing::uniform ? "uniform" : "graded"; }

/// Surface area of the unit sphere in R^d.
inline double sphere_area(int d) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
}

/// Vertex-centred radial mesh on [0, R].
///
/// Node i owns the shell between the neighbouring face midpoints, so the
/// weights are exact shell volumes and sum to the ball volume.  The same
/// faces define the flux coefficients used by the discrete Laplacian.
class RadialGrid {
 public:
  RadialGrid(int d, std::vector<double> nodes) : d_(d), r_(std::move(nodes)) {
    if (d_ < 3) throw InvalidArgument("dimension must be at least 3");
    if (r_.size() < 3) throw InvalidArgument("grid needs at least 3 nodes");
    if (r_.front() != 0.0) throw InvalidArgument("first node must be r = 0");
    for (std::size_t i = 1; i < r_.size(); ++i)
      if (!(r_[i] > r_[i - 1]) || !std::isfinite(r_[i]))
        throw InvalidArgument("grid nodes must be finite and strictly increasing");
    build();
  }

  int d() const noexcept { return d_; }
  std::size_t size() const noexcept { return r_.size(); }
  double r(std::size_t i) const { return r_[i]; }
  double r_max() const noexcept { return r_.back(); }
  const std::vector<double>& nodes() const noexcept { return r_; }
  /// Control volume of node i.
  const std::vector<double>& weights() const noexcept { return w_; }
  /// Flux coefficient sigma * r_{i+1/2}^{d-1} / (r_{i+1} - r_i), one per gap.
  const std::vector<double>& faces() const noexcept { return c_; }

  /// Same node layout stretched by s > 0; weights scale as s^d, faces as s^{d-2}.
  RadialGrid scaled(double s) const {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("scale factor must be positive");
    std::vector<double> r(r_.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s * r_[i];
    return RadialGrid(d_, std::move(r));
  }

 private:
  // a^d - b^d without cancellation for a close to b.
  static double pow_diff(double a, double b, int d) {
    double sum = 0.0, ak = 1.0;
    for (int k = 0; k < d; ++k) {
      sum += ak * std::pow(b, d - 1 - k);
      ak *= a;
    }
    return (a - b) * sum;
  }

  void build() {
    const std::size_t n = r_.size();
    const double sigma = sphere_area(d_);
    std::vector<double> mid(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) mid[i] = 0.5 * (r_[i] + r_[i + 1]);
    w_.resize(n);
    w_[0] = sigma / d_ * std::pow(mid[0], d_);
    for (std::size_t i = 1; i + 1 < n; ++i) w_[i] = sigma / d_ * pow_diff(mid[i], mid[i - 1], d_);
    w_[n - 1] = sigma / d_ * pow_diff(r_[n - 1], mid[n - 2], d_);
    c_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      c_[i] = sigma * std::pow(mid[i], d_ - 1) / (r_[i + 1] - r_[i]);
  }

  int d_;
  std::vector<double> r_;
  std::vector<double> w_;
  std::vector<double> c_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Build a grid with n nodes on [0, R].  Graded grids use geometric steps
/// starting from first_step (default 1e-6 R).
inline GridPtr make_grid(int d, double R, int n, Spacing policy, double first_step = 0.0) {
  if (d < 3) throw InvalidArgument("dimension must be at least 3");
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidArgument("R_max must be positive and finite");
  if (n < 16) throw InvalidArgument("grid needs at least 16 nodes");
  if (!(first_step >= 0.0) || !std::isfinite(first_step))
    throw InvalidArgument("first step must be nonnegative and finite");
  const int m = n - 1;
  std::vector<double> r(n);
  if (policy == Spacing::uniform) {
    for (int i = 0; i < n; ++i) r[i] = R * i / m;
  } else {
    const double h0 = first_step > 0.0 ? first_step : 1e-6 * R;
    if (h0 * m >= R) {
      for (int i = 0; i < n; ++i) r[i] = R * i / m;
    } else {
      // h0 (q^m - 1)/(q - 1) = R, solved in log q.
      auto excess = [&](double t) { return h0 * std::expm1(m * t) / std::expm1(t) - R; };
      double hi = 1e-6;
      while (excess(hi) < 0.0) hi *= 2.0;
      double lo = 0.5 * hi;
      while (excess(lo) > 0.0) lo *= 0.5;
      boost::math::tools::eps_tolerance<double> tol(50);
      std::uintmax_t iters = 200;
      auto [a, b] = boost::math::tools::toms748_solve(excess, lo, hi, tol, iters);
      const double t = 0.5 * (a + b);
      r[0] = 0.0;
      for (int i = 1; i < n; ++i) r[i] = h0 * std::expm1(i * t) / std::expm1(t);
    }
  }
  r[m] = R;
  return std::make_shared<const RadialGrid>(d, std::move(r));
}

}  // namespace critlab
