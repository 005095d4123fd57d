#pragma once

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "critlab/field.hpp"

namespace critlab {

// Closed-form bubble W(r) = (1 + r^2/(d(d-2)))^{-(d-2)/2}, normalized to W(0) = 1.
inline double talenti_value(double r, int d) {
  const double k = d * (d - 2.0);
  return std::pow(1.0 + r * r / k, -0.5 * (d - 2));
}

// Scaling generator (d-2)/2 W + r W'.
inline double lambda_w_value(double r, int d) {
  const double k = d * (d - 2.0);
  const double s = r * r / k;
  return 0.5 * (d - 2) * (1.0 - s) * std::pow(1.0 + s, -0.5 * d);
}

inline RadialField talenti(const GridPtr& g) {
  const int d = g->d();
  return sample(g, [d](double r) { return talenti_value(r, d); });
}

inline RadialField lambda_w(const GridPtr& g) {
  const int d = g->d();
  return sample(g, [d](double r) { return lambda_w_value(r, d); });
}

/// sigma_{d-1} * int_0^inf f(r) r^{d-1} dr by double-exponential quadrature.
template <class F>
double radial_integral(F f, int d) {
  boost::math::quadrature::tanh_sinh<double> core;
  boost::math::quadrature::exp_sinh<double> tail;
  auto g = [&](double r) { return f(r) * std::pow(r, d - 1); };
  const double inner = core.integrate(g, 0.0, 1.0);
  const double outer = tail.integrate(g, 1.0, std::numeric_limits<double>::infinity());
  return sphere_area(d) * (inner + outer);
}

/// <Lambda W, W^p> in dimension d.
inline double lambda_w_pairing(int d, double p) {
  return radial_integral(
      [=](double r) { return lambda_w_value(r, d) * std::pow(talenti_value(r, d), p); }, d);
}

/// Leading coefficient of the frequency law alpha ~ C1 beta^2 (d = 3).
inline double cg_constant(double p) {
  const double a = lambda_w_pairing(3, p);
  return a * a / (36.0 * std::numbers::pi * std::numbers::pi);
}

/// Weighted L2 norm of -Delta_h W - W^{(d+2)/(d-2)} over the interior nodes.
inline double talenti_residual(const GridPtr& g) {
  const auto W = talenti(g);
  const double s = (g->d() + 2.0) / (g->d() - 2.0);
  const Vec r = neg_laplacian(*g, W.values) - W.values.array().pow(s).matrix();
  return interior_l2(*g, r);
}

}  // namespace critlab
