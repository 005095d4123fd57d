#include <cmath>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include "critlab/groundstate.hpp"
#include "critlab/sweep.hpp"

using namespace critlab;

namespace {

// Independent shooting with a Bulirsch-Stoer integrator and plain bisection.
// Returns the threshold central value separating profiles that cross zero
// from profiles that turn upward.
double oracle_threshold(const ProblemParams& pp) {
  namespace odeint = boost::numeric::odeint;
  using State = std::array<double, 2>;
  const double s = critical_power(pp.d);
  auto f = [&](double u) {
    const double a = std::abs(u);
    double v = pp.epsilon * std::pow(a, pp.p - 1.0) * u;
    if (pp.critical_on) v += std::pow(a, s - 1.0) * u;
    return v;
  };
  struct Done {
    bool over;
  };
  auto overshoots = [&](double m) {
    const double r0 = 1e-6 / std::sqrt(pp.omega);
    State x{m + (pp.omega * m - f(m)) * r0 * r0 / (2.0 * pp.d), (pp.omega * m - f(m)) * r0 / pp.d};
    auto rhs = [&](const State& y, State& dy, double r) {
      dy[0] = y[1];
      dy[1] = -(pp.d - 1.0) / r * y[1] + pp.omega * y[0] - f(y[0]);
    };
    try {
      odeint::integrate_adaptive(odeint::bulirsch_stoer<State>(1e-14, 1e-13), rhs, x, r0,
                                 200.0 / std::sqrt(pp.omega), 1e-3 / std::sqrt(pp.omega),
                                 [](const State& y, double) {
                                   if (y[0] < 0.0) throw Done{true};
                                   if (y[1] > 0.0) throw Done{false};
                                 });
    } catch (const Done& d) {
      return d.over;
    }
    throw std::runtime_error("oracle shot did not classify");
  };
  double lo = 1e-6, hi = 1.0;
  while (!overshoots(hi)) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (overshoots(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Shooting, ThresholdMatchesIndependentIntegrator) {
  for (auto pp : {ProblemParams{3, 4.0, 10.0}, ProblemParams{5, 2.0, 10.0}, ProblemParams{4, 2.5, 10.0}}) {
    const double m = shoot_threshold(pp).m;
    EXPECT_NEAR(m / oracle_threshold(pp), 1.0, 1e-6) << "d=" << pp.d << " p=" << pp.p;
  }
}

TEST(Shooting, SinglePowerScalingLaw) {
  ProblemParams pp{3, 3.0, 1.0, 1.0, false};
  const double m1 = shoot_threshold(pp).m;
  for (double w : {10.0, 100.0, 1000.0}) {
    pp.omega = w;
    EXPECT_NEAR(shoot_threshold(pp).m / (std::pow(w, 0.5) * m1), 1.0, 1e-6) << w;
  }
}

TEST(Shooting, RejectsInadmissibleParameters) {
  EXPECT_THROW(shoot_threshold(ProblemParams{3, 2.0, 10.0}), InvalidArgument);
  EXPECT_THROW(shoot_threshold(ProblemParams{3, 4.0, -1.0}), InvalidArgument);
  EXPECT_THROW(shoot_threshold(ProblemParams{4, 3.0, 1.0}), InvalidArgument);
}

TEST(GroundState, SolvesEquationAndDecays) {
  const ProblemParams pp{3, 4.0, 100.0};
  const auto gs = shoot(pp);
  EXPECT_LE(gs.residual, 1e-8);
  EXPECT_NEAR(gs.decay_rate / std::sqrt(pp.omega), 1.0, 0.02);
  EXPECT_NEAR(gs.field[0], gs.M, 0.0);
  for (std::size_t i = 1; i < gs.field.size(); ++i) {
    ASSERT_GE(gs.field[i], 0.0);
    ASSERT_LE(gs.field[i], gs.field[i - 1]);
  }
  EXPECT_LE(gs.discretization_error / gs.M, 1e-3);
}

TEST(GroundState, ConvergesUnderRefinement) {
  const ProblemParams pp{3, 4.0, 10.0};
  GridOptions coarse;
  coarse.n = 5000;
  GridOptions fine;
  fine.n = 20000;
  const double mc = shoot(pp, {}, coarse).M;
  const double mf = shoot(pp, {}, fine).M;
  const double exact = oracle_threshold(pp);
  EXPECT_LT(std::abs(mf - exact), std::abs(mc - exact));
  EXPECT_NEAR(mf / exact, 1.0, 1e-4);
}

TEST(GroundState, DeterministicAcrossRuns) {
  const ProblemParams pp{3, 4.0, 1000.0};
  const auto a = shoot(pp);
  const auto b = shoot(pp);
  EXPECT_EQ(a.M, b.M);
  EXPECT_TRUE(a.field.values == b.field.values);
}

TEST(GroundState, HigherDimensionWithCriticalTerm) {
  const auto gs = shoot(ProblemParams{5, 2.0, 100.0});
  EXPECT_LE(gs.residual, 1e-8);
  EXPECT_NEAR(gs.decay_rate / 10.0, 1.0, 0.02);
}

TEST(Rescale, InducedFrequencyAndCoefficient) {
  const ProblemParams pp{3, 4.0, 1000.0};
  const auto gs = shoot(pp);
  const auto rp = rescale(gs);
  EXPECT_DOUBLE_EQ(rp.field[0], 1.0);
  EXPECT_NEAR(rp.alpha, pp.omega / std::pow(gs.M, 4.0), 1e-12 * rp.alpha);
  EXPECT_NEAR(rp.beta, std::pow(gs.M, -1.0), 1e-12 * rp.beta);
  EXPECT_LE(rp.residual, 1e-6);
  EXPECT_EQ(rp.equation().omega, rp.alpha);
}

TEST(Sweep, EntriesShrinkTowardTheBubble) {
  const ProblemParams pp{3, 4.0, 10.0};
  const auto sw = asymptotic_sweep(pp, {100.0, 1000.0, 10000.0}, {4.0, 6.0});
  ASSERT_EQ(sw.entries.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_LT(sw.entries[i].h1_dev, sw.entries[i - 1].h1_dev);
    EXPECT_LT(sw.entries[i].alpha, sw.entries[i - 1].alpha);
    EXPECT_LT(sw.entries[i].beta, sw.entries[i - 1].beta);
  }
}

TEST(Sweep, RejectsDecreasingFrequencies) {
  EXPECT_THROW(asymptotic_sweep(ProblemParams{}, {100.0, 10.0}, {4.0}), InvalidArgument);
}
