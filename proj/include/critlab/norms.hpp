#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "critlab/field.hpp"
#include "critlab/fit.hpp"

namespace critlab {

struct NormValue {
  double value = 0.0;      // includes the extrapolated exterior tail
  bool divergent = false;  // value is then the truncated integral only
};

struct NormReport {
  NormValue l2;
  NormValue h1dot;
  std::map<double, NormValue> lq;  // keyed by q; q = infinity gives the sup norm
  // Power a of the fitted |f| ~ r^{-a} over the last decade; infinity when
  // the field has settled to zero before R.
  double tail_power = std::numeric_limits<double>::infinity();
};

namespace detail {

struct Tail {
  bool settled = true;
  double fitted = std::numeric_limits<double>::infinity();  // last-decade power
  double local = std::numeric_limits<double>::infinity();   // last-gap power
  double edge = 0.0;                                        // |f(R)|
};

inline Tail tail_of(const RadialField& f) {
  Tail t;
  const auto& g = *f.grid;
  const std::size_t n = g.size();
  const double peak = f.values.cwiseAbs().maxCoeff();
  t.edge = std::abs(f[n - 1]);
  if (peak == 0.0 || t.edge <= 1e-14 * peak) return t;
  t.settled = false;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.r(i) < 0.1 * g.r_max() || f[i] == 0.0) continue;
    x.push_back(std::log(g.r(i)));
    y.push_back(std::log(std::abs(f[i])));
  }
  if (x.size() >= 2) t.fitted = -fit_line(x, y).slope;
  const double prev = std::abs(f[n - 2]);
  if (prev > 0.0) t.local = -std::log(t.edge / prev) / std::log(g.r(n - 1) / g.r(n - 2));
  return t;
}

}  // namespace detail

/// L^q, L^2 and Hdot^1 norms with algebraic-tail handling.
///
/// A norm is flagged divergent when the last-decade power a fails q a > d
/// (2(a+1) > d for the gradient).  Convergent norms add the exterior
/// integral of the local power law continued from the last node.
inline NormReport norms(const RadialField& f, const std::vector<double>& q_list) {
  if (!f.grid || f.values.size() == 0) throw InvalidArgument("norms of an empty field");
  for (double q : q_list)
    if (!(q >= 1.0)) throw InvalidArgument("norm exponents must satisfy q >= 1");
  const auto& g = *f.grid;
  const int d = g.d();
  const double R = g.r_max();
  const double sigma = sphere_area(d);
  const auto t = detail::tail_of(f);

  NormReport rep;
  rep.tail_power = t.fitted;

  auto lq = [&](double q) {
    NormValue v;
    if (std::isinf(q)) {
      v.value = f.values.cwiseAbs().maxCoeff();
      return v;
    }
    double s = (weights_of(g).array() * f.values.array().abs().pow(q)).sum();
    if (!t.settled) {
      if (q * t.fitted <= d) {
        v.divergent = true;
      } else if (q * t.local > d) {
        s += sigma * std::pow(t.edge, q) * std::pow(R, d) / (q * t.local - d);
      }
    }
    v.value = std::pow(s, 1.0 / q);
    return v;
  };

  rep.l2 = lq(2.0);
  for (double q : q_list) rep.lq[q] = lq(q);

  double e = dirichlet_energy(g, f.values);
  if (!t.settled) {
    if (2.0 * (t.fitted + 1.0) <= d) {
      rep.h1dot.divergent = true;
    } else if (2.0 * (t.local + 1.0) > d) {
      e += sigma * t.local * t.local * t.edge * t.edge * std::pow(R, d - 2) /
           (2.0 * (t.local + 1.0) - d);
    }
  }
  rep.h1dot.value = std::sqrt(e);
  return rep;
}

}  // namespace critlab
