#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "critlab/resolvent.hpp"

using namespace critlab;
using std::numbers::pi;

namespace {

GridPtr grid(double R = 20.0, int n = 4000) { return make_grid(3, R, n, Spacing::graded, 1e-4); }

RadialField gauss(const GridPtr& g, double w = 1.0) {
  return sample(g, [w](double r) { return std::exp(-(r / w) * (r / w)); });
}

}  // namespace

TEST(Resolvent, MatrixAndRecursionAgree) {
  const auto g = make_grid(3, 20.0, 600, Spacing::graded, 1e-3);
  const auto f = gauss(g);
  const Vec dense = resolvent_matrix(g, 0.7) * f.values;
  const auto fast = apply_resolvent(0.7, f);
  EXPECT_LE((dense - fast.values).lpNorm<Eigen::Infinity>(), 1e-13 * dense.lpNorm<Eigen::Infinity>());
}

TEST(Resolvent, InvertsAKnownFunction) {
  // u = exp(-r^2) solves (-Delta + lambda^2) u = (6 - 4 r^2 + lambda^2) exp(-r^2).
  const double lam = 0.5;
  const auto g = grid();
  const auto f = sample(g, [lam](double r) { return (6.0 - 4.0 * r * r + lam * lam) * std::exp(-r * r); });
  const auto u = apply_resolvent(lam, f);
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) err = std::max(err, std::abs(u[i] - std::exp(-g->r(i) * g->r(i))));
  EXPECT_LE(err, 1e-4);
}

TEST(Resolvent, LinearSelfAdjointPositive) {
  const auto g = grid();
  const auto f = gauss(g), h = gauss(g, 2.5);
  const auto rf = apply_resolvent(1.3, f), rh = apply_resolvent(1.3, h);
  const auto sum = apply_resolvent(1.3, RadialField(g, 2.0 * f.values - 3.0 * h.values));
  EXPECT_LE((sum.values - 2.0 * rf.values + 3.0 * rh.values).norm(), 1e-12 * sum.values.norm());
  EXPECT_NEAR(inner_product(rf, h), inner_product(f, rh), 1e-10 * std::abs(inner_product(rf, h)));
  for (std::size_t i = 0; i < g->size(); ++i) ASSERT_GT(rf[i], 0.0);
}

TEST(Resolvent, IdentityResidualShrinksUnderRefinement) {
  const double coarse = resolvent_identity_residual(1.0, gauss(make_grid(3, 20.0, 2000, Spacing::graded, 4e-4)));
  const double fine = resolvent_identity_residual(1.0, gauss(make_grid(3, 20.0, 8000, Spacing::graded, 1e-4)));
  EXPECT_LT(fine, coarse);
  EXPECT_LE(fine, 1e-6);
}

TEST(Resolvent, SmallLambdaLimitOnTheBubble) {
  // -Delta W = W^5, so R0 W^5 tends to W as lambda goes to 0.
  const auto g = make_grid(3, 500.0, 3000, Spacing::graded, 1e-3);
  const auto W = talenti(g);
  const RadialField w5(g, W.values.array().pow(5.0).matrix());
  const auto u = apply_resolvent(1e-7, w5);
  double err = 0.0;
  for (std::size_t i = 0; g->r(i) < 50.0; ++i) err = std::max(err, std::abs(u[i] - W[i]));
  EXPECT_LE(err, 1e-4);
}

TEST(Resolvent, RejectsBadInput) {
  const auto g = grid();
  EXPECT_THROW(apply_resolvent(0.0, gauss(g)), InvalidArgument);
  EXPECT_THROW(apply_resolvent(1.0, sample(g, [](double) { return 1.0; })), InvalidArgument);
  const auto g5 = make_grid(5, 20.0, 500, Spacing::graded);
  EXPECT_THROW(apply_resolvent(1.0, gauss(g5)), InvalidArgument);
}

TEST(Exponents, HypothesisIsEnforced) {
  EXPECT_THROW(resolvent_exponent(1.0, INFINITY), InvalidArgument);
  EXPECT_THROW(resolvent_exponent(3.0, 2.0), InvalidArgument);
  EXPECT_DOUBLE_EQ(resolvent_exponent(1.5, 3.0), -1.0);
  EXPECT_DOUBLE_EQ(resolvent_exponent(2.0, 2.0), -2.0);
}

TEST(Norms, GaussianClosedForms) {
  const auto g = grid();
  const auto f = gauss(g);
  EXPECT_NEAR(lq_norm(f, 2.0) / std::pow(pi / 2.0, 0.75), 1.0, 1e-5);
  EXPECT_NEAR(lq_norm(f, 1.0) / std::pow(pi, 1.5), 1.0, 1e-5);
  EXPECT_DOUBLE_EQ(lq_norm(f, INFINITY), 1.0);
}

TEST(Scaling, SlopeFollowsTheExponent) {
  const auto g = make_grid(3, 1000.0, 6000, Spacing::graded, 1e-2);
  const auto fit = norm_scaling_check(1.5, 3.0, {0.1, 0.2, 0.4, 0.8}, gaussian_family(g, 0.25, 64.0));
  EXPECT_NEAR(fit.fit.slope, -1.0, 0.05);
}

TEST(Expansion, PairingAgreesWithQuadrature) {
  const auto g = make_grid(3, 500.0, 1500, Spacing::graded, 1e-3);
  const auto f = gauss(g, 2.0);
  const double oracle = radial_integral(
      [](double r) { return std::pow(talenti_value(r, 3), 4) * lambda_w_value(r, 3) * std::exp(-r * r / 4.0); }, 3);
  const auto ef = expansion_fit({1e-2, 3e-3, 1e-3}, f);
  EXPECT_NEAR(ef.pairing / oracle, 1.0, 1e-4);
  EXPECT_LE(ef.pairing_solution_error, 1e-8);
  EXPECT_NEAR(ef.coefficient_fit / expansion_target(), 1.0, 0.05);
}

TEST(Expansion, RejectsShortLambdaRange) {
  const auto g = make_grid(3, 500.0, 300, Spacing::graded, 1e-3);
  EXPECT_THROW(expansion_fit({1e-2, 5e-3}, gauss(g)), InvalidArgument);
  EXPECT_THROW(expansion_fit({1e-3, 1e-2}, gauss(g)), InvalidArgument);
}
