#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "critlab/field.hpp"
#include "critlab/groundstate.hpp"
#include "critlab/talenti.hpp"

namespace critlab {

enum class OperatorKind { plus, minus, rescaled_plus, rescaled_minus, talenti_plus };

inline std::string to_string(OperatorKind k) {
  switch (k) {
    case OperatorKind::plus: return "plus";
    case OperatorKind::minus: return "minus";
    case OperatorKind::rescaled_plus: return "rescaled_plus";
    case OperatorKind::rescaled_minus: return "rescaled_minus";
    case OperatorKind::talenti_plus: return "talenti_plus";
  }
  return "unknown";
}

/// A subtracted potential term coefficient * values.
struct Potential {
  std::string name;
  double coefficient = 0.0;
  Vec values;
};

/// -Delta + constant - sum of potentials, with Dirichlet data at the outer node.
///
/// The matrix acts on v = sqrt(V) u over the interior nodes, which makes it
/// symmetric tridiagonal: S = V^{-1/2} K V^{-1/2} + diag(constant - potential).
struct RadialOperator {
  OperatorKind kind{};
  GridPtr grid;
  double constant = 0.0;
  std::vector<Potential> potentials;
  Vec diag;    // interior size m = n - 1
  Vec off;     // size m - 1
  Vec sqrt_w;  // sqrt of the interior control volumes
  Vec total_potential;

  Eigen::Index dim() const { return diag.size(); }

  Eigen::MatrixXd dense() const {
    const auto m = dim();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
    A.diagonal() = diag;
    A.diagonal(1) = off;
    A.diagonal(-1) = off;
    return A;
  }

  /// Gershgorin bound on the spectral radius of S.
  double norm_bound() const {
    double b = 0.0;
    for (Eigen::Index i = 0; i < dim(); ++i) {
      double row = std::abs(diag[i]);
      if (i > 0) row += std::abs(off[i - 1]);
      if (i + 1 < dim()) row += std::abs(off[i]);
      b = std::max(b, row);
    }
    return b;
  }

  Vec multiply(const Vec& v) const {
    Vec out = diag.cwiseProduct(v);
    const auto m = dim();
    out.head(m - 1) += off.cwiseProduct(v.tail(m - 1));
    out.tail(m - 1) += off.cwiseProduct(v.head(m - 1));
    return out;
  }

  /// Field to the symmetric coordinates (outer node dropped).
  Vec to_v(const RadialField& f) const { return f.values.head(dim()).cwiseProduct(sqrt_w); }

  RadialField to_field(const Vec& v) const {
    Vec u = Vec::Zero(dim() + 1);
    u.head(dim()) = v.cwiseQuotient(sqrt_w);
    return {grid, std::move(u)};
  }
};

namespace detail {

inline RadialOperator build_operator(OperatorKind kind, const GridPtr& g, double constant,
                                     std::vector<Potential> pots) {
  RadialOperator op;
  op.kind = kind;
  op.grid = g;
  op.constant = constant;
  const auto K = stiffness(*g);
  const auto m = K.diag.size();
  const Eigen::Map<const Vec> V(g->weights().data(), m);
  op.sqrt_w = V.cwiseSqrt();
  op.total_potential = Vec::Zero(m);
  for (const auto& p : pots) op.total_potential += p.coefficient * p.values.head(m);
  op.potentials = std::move(pots);
  op.diag = K.diag.cwiseQuotient(V) + (Vec::Constant(m, constant) - op.total_potential);
  op.off.resize(m - 1);
  for (Eigen::Index i = 0; i + 1 < m; ++i) op.off[i] = K.off[i] / (op.sqrt_w[i] * op.sqrt_w[i + 1]);
  return op;
}

inline std::vector<Potential> linearized_potentials(const ProblemParams& eq, const RadialField& phi,
                                                    bool plus) {
  const double s = critical_power(eq.d);
  std::vector<Potential> pots;
  const Vec a = phi.values.cwiseAbs();
  if (eq.epsilon > 0.0)
    pots.push_back({"phi^(p-1)", eq.epsilon * (plus ? eq.p : 1.0), a.array().pow(eq.p - 1.0).matrix()});
  if (eq.critical_on)
    pots.push_back({"phi^(4/(d-2))", plus ? s : 1.0, a.array().pow(s - 1.0).matrix()});
  return pots;
}

}  // namespace detail

/// L_{omega,+} or L_{omega,-} around a ground state.
inline RadialOperator assemble(OperatorKind kind, const GroundStateSolution& gs) {
  if (kind != OperatorKind::plus && kind != OperatorKind::minus)
    throw InvalidArgument("a ground state source needs kind plus or minus");
  return detail::build_operator(
      kind, gs.field.grid, gs.params.omega,
      detail::linearized_potentials(gs.params, gs.field, kind == OperatorKind::plus));
}

/// Rescaled operators: constant alpha and the subcritical term weighted by beta.
inline RadialOperator assemble(OperatorKind kind, const RescaledProfile& rp) {
  if (kind != OperatorKind::rescaled_plus && kind != OperatorKind::rescaled_minus)
    throw InvalidArgument("a rescaled source needs kind rescaled_plus or rescaled_minus");
  const auto eq = rp.equation();
  return detail::build_operator(
      kind, rp.field.grid, eq.omega,
      detail::linearized_potentials(eq, rp.field, kind == OperatorKind::rescaled_plus));
}

/// -Delta - (d+2)/(d-2) W^{4/(d-2)} on the given grid.
inline RadialOperator assemble(OperatorKind kind, const GridPtr& g) {
  if (kind != OperatorKind::talenti_plus)
    throw InvalidArgument("a bare grid source needs kind talenti_plus");
  const double s = critical_power(g->d());
  Vec w = talenti(g).values.array().pow(s - 1.0).matrix();
  return detail::build_operator(kind, g, 0.0, {{"W^(4/(d-2))", s, std::move(w)}});
}

/// L f as a field; the outer (Dirichlet) node carries 0.
inline RadialField apply(const RadialOperator& op, const RadialField& f) {
  require_same_grid(RadialField(op.grid, Vec::Zero(op.dim() + 1)), f);
  return op.to_field(op.multiply(op.to_v(f)));
}

/// <L f, f> as a sum of squares: sum c (Delta f)^2 + sum V (constant - potential) f^2,
/// with f taken as 0 at the outer node.
inline double quadratic_form(const RadialOperator& op, const RadialField& f) {
  require_same_grid(RadialField(op.grid, Vec::Zero(op.dim() + 1)), f);
  const auto& g = *op.grid;
  Vec u = f.values;
  u[u.size() - 1] = 0.0;
  const auto m = op.dim();
  double s = dirichlet_energy(g, u);
  for (Eigen::Index i = 0; i < m; ++i)
    s += g.weights()[i] * (op.constant - op.total_potential[i]) * u[i] * u[i];
  return s;
}

}  // namespace critlab
