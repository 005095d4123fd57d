#include <cmath>

#include <gtest/gtest.h>

#include "critlab/mass.hpp"

using namespace critlab;

TEST(Mass, IsTheSquaredL2Norm) {
  const auto g = make_grid(3, 10.0, 2000, Spacing::graded);
  const auto f = sample(g, [](double r) { return std::exp(-r * r); });
  EXPECT_DOUBLE_EQ(mass(f), inner_product(f, f));
  EXPECT_NEAR(mass(f) / std::pow(std::numbers::pi / 2.0, 1.5), 1.0, 1e-4);
}

TEST(DOmegaPhi, MatchesDifferenceOfNeighbouringSolutions) {
  const ProblemParams pp{3, 4.0, 100.0};
  const auto gs = shoot(pp);
  const auto d = domega_phi(gs);
  EXPECT_LE(d.solve_residual, 1e-12);
  const double h = 1e-3 * pp.omega;
  ProblemParams lo = pp, hi = pp;
  lo.omega -= h;
  hi.omega += h;
  const auto up = resolve_on(hi, gs.field.grid).field;
  const auto dn = resolve_on(lo, gs.field.grid).field;
  const RadialField fd(gs.field.grid, (up.values - dn.values) / (2.0 * h));
  const RadialField diff(gs.field.grid, fd.values - d.field.values);
  EXPECT_LE(std::sqrt(mass(diff) / mass(d.field)), 1e-4);
}

TEST(MassSample, RoutesAgreeWithCriticalTerm) {
  const auto s = mass_sample(ProblemParams{3, 4.0, 100.0});
  EXPECT_LT(s.dmass_lin, 0.0);
  EXPECT_TRUE(s.sign_match);
  EXPECT_LE(s.rel_agreement, 1e-4);
  EXPECT_EQ(s.fd_steps.size(), 3u);
  EXPECT_DOUBLE_EQ(s.fd_steps[0], 2.0 * s.fd_steps[1]);
}

TEST(MassSample, SinglePowerControlMatchesClosedForm) {
  // d = 3, p = 2 without the critical term: mass grows like omega^{1/2}.
  ProblemParams pp{3, 2.0, 1.0, 1.0, false};
  const double unit = mass(shoot(pp).field);
  pp.omega = 10.0;
  const auto s = mass_sample(pp);
  const double exact = single_power_slope(3, 2.0, 10.0, unit);
  EXPECT_GT(exact, 0.0);
  EXPECT_NEAR(s.dmass_lin / exact, 1.0, 0.02);
  EXPECT_NEAR(s.dmass_fd / exact, 1.0, 0.02);
}

TEST(MassSample, RejectsBadStep) {
  EXPECT_THROW(mass_sample(ProblemParams{}, 0.0), InvalidArgument);
  EXPECT_THROW(mass_sample(ProblemParams{}, 0.5), InvalidArgument);
}

TEST(MassCurve, RejectsUnorderedFrequencies) {
  EXPECT_THROW(mass_curve(ProblemParams{}, {100.0, 10.0}), InvalidArgument);
}

TEST(MassCurve, DimensionFourIsExploratory) {
  const auto mc = mass_curve(ProblemParams{4, 2.5, 10.0}, {100.0});
  EXPECT_TRUE(mc.exploratory);
  ASSERT_EQ(mc.samples.size(), 1u);
  EXPECT_TRUE(std::isfinite(mc.samples[0].dmass_lin));
}
