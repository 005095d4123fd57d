#pragma once

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "critlab/error.hpp"
#include "critlab/grid.hpp"

namespace critlab {

using Vec = Eigen::VectorXd;

/// Real radial samples on a shared grid.
struct RadialField {
  GridPtr grid;
  Vec values;

  RadialField() = default;
  RadialField(GridPtr g, Vec v) : grid(std::move(g)), values(std::move(v)) {
    if (!grid) throw InvalidArgument("field without grid");
    if (static_cast<std::size_t>(values.size()) != grid->size())
      throw InvalidArgument("field length does not match grid");
    if (!values.allFinite()) throw InvalidArgument("field values must be finite");
  }

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
  double operator[](std::size_t i) const { return values[static_cast<Eigen::Index>(i)]; }
};

inline RadialField sample(const GridPtr& g, const std::function<double(double)>& f) {
  Vec v(static_cast<Eigen::Index>(g->size()));
  for (std::size_t i = 0; i < g->size(); ++i) v[static_cast<Eigen::Index>(i)] = f(g->r(i));
  return {g, std::move(v)};
}

inline Eigen::Map<const Vec> weights_of(const RadialGrid& g) {
  return {g.weights().data(), static_cast<Eigen::Index>(g.size())};
}

inline void require_same_grid(const RadialField& f, const RadialField& g) {
  if (f.grid != g.grid && f.grid->nodes() != g.grid->nodes())
    throw InvalidArgument("fields live on different grids");
}

inline double inner_product(const RadialField& f, const RadialField& g) {
  require_same_grid(f, g);
  return (f.values.array() * g.values.array() * weights_of(*f.grid).array()).sum();
}

/// Finite-volume -Delta u at every node.  The outer node is the Dirichlet
/// node: it carries 0 and its value enters only as a neighbour.
inline Vec neg_laplacian(const RadialGrid& g, const Vec& u) {
  const auto n = static_cast<Eigen::Index>(g.size());
  const auto& c = g.faces();
  const auto& w = g.weights();
  Vec out = Vec::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    double flux = c[i] * (u[i] - u[i + 1]);
    if (i > 0) flux += c[i - 1] * (u[i] - u[i - 1]);
    out[i] = flux / w[i];
  }
  return out;
}

/// Sum of c_{i+1/2} (u_{i+1} - u_i)^2: the discrete Dirichlet energy.
inline double dirichlet_energy(const RadialGrid& g, const Vec& u) {
  const auto& c = g.faces();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double du = u[static_cast<Eigen::Index>(i + 1)] - u[static_cast<Eigen::Index>(i)];
    s += c[i] * du * du;
  }
  return s;
}

/// Symmetric tridiagonal stiffness matrix K on the interior nodes 0..n-2
/// (Dirichlet at the outer node), so that -Delta_h u = V^{-1} K u.
struct Tridiag {
  Vec diag;
  Vec off;  // off[i] couples i and i+1
};

inline Tridiag stiffness(const RadialGrid& g) {
  const auto m = static_cast<Eigen::Index>(g.size()) - 1;
  const auto& c = g.faces();
  Tridiag k{Vec(m), Vec(m - 1)};
  for (Eigen::Index i = 0; i < m; ++i) {
    k.diag[i] = c[i] + (i > 0 ? c[i - 1] : 0.0);
    if (i + 1 < m) k.off[i] = -c[i];
  }
  return k;
}

/// Weighted L2 norm over the interior nodes (the Dirichlet node excluded).
inline double interior_l2(const RadialGrid& g, const Vec& r) {
  const auto n = static_cast<Eigen::Index>(g.size());
  return std::sqrt((weights_of(g).head(n - 1).array() * r.head(n - 1).array().square()).sum());
}

}  // namespace critlab
