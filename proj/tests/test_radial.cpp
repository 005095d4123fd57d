#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "critlab/norms.hpp"
#include "critlab/talenti.hpp"

using namespace critlab;
using std::numbers::pi;

namespace {

// Independent adaptive quadrature of 4 pi int_0^inf f(r) r^2 dr, split at r = 1
// and mapped to a finite interval with r = t / (1 - t).
template <class F>
double oracle_radial3(F f) {
  using boost::math::quadrature::gauss_kronrod;
  auto g = [&](double t) {
    const double r = t / (1.0 - t);
    return f(r) * r * r / ((1.0 - t) * (1.0 - t));
  };
  return 4.0 * pi * gauss_kronrod<double, 61>::integrate(g, 0.0, 1.0, 15, 1e-13);
}

double w3(double r) { return 1.0 / std::sqrt(1.0 + r * r / 3.0); }

}  // namespace

TEST(Grid, UniformBallVolumeDimension3) {
  auto g = make_grid(3, 1.0, 2001, Spacing::uniform);
  double vol = 0.0;
  for (double w : g->weights()) vol += w;
  EXPECT_NEAR(vol / (4.0 * pi / 3.0), 1.0, 1e-10);
}

TEST(Grid, BallVolumeDimension5) {
  auto g = make_grid(5, 2.0, 3000, Spacing::graded);
  double vol = 0.0;
  for (double w : g->weights()) vol += w;
  EXPECT_NEAR(vol / (8.0 * pi * pi / 15.0 * 32.0), 1.0, 1e-10);
}

TEST(Grid, GradedClustersNearOrigin) {
  auto g = make_grid(3, 100.0, 4000, Spacing::graded);
  EXPECT_LE(g->r(1), 1e-3);
  EXPECT_DOUBLE_EQ(g->r_max(), 100.0);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < g->size(); ++i) {
    ASSERT_GT(g->r(i + 1), g->r(i));
    worst = std::max(worst, g->r(i + 1) / g->r(i));
  }
  EXPECT_LE(worst, 2.01);
  for (double w : g->weights()) EXPECT_GE(w, 0.0);
}

TEST(Grid, RejectsBadInput) {
  EXPECT_THROW(make_grid(2, 1.0, 100, Spacing::uniform), InvalidArgument);
  EXPECT_THROW(make_grid(3, 0.0, 100, Spacing::uniform), InvalidArgument);
  EXPECT_THROW(make_grid(3, -1.0, 100, Spacing::uniform), InvalidArgument);
  EXPECT_THROW(make_grid(3, std::nan(""), 100, Spacing::uniform), InvalidArgument);
  EXPECT_THROW(make_grid(3, INFINITY, 100, Spacing::graded), InvalidArgument);
  EXPECT_THROW(make_grid(3, 1.0, 15, Spacing::uniform), InvalidArgument);
}

TEST(Grid, QuadratureIsSecondOrder) {
  // int_B r^2 dx over the unit ball in d = 3 is 4 pi / 5.
  double err[2];
  int k = 0;
  for (int n : {201, 401}) {
    auto g = make_grid(3, 1.0, n, Spacing::uniform);
    auto f = sample(g, [](double r) { return r * r; });
    auto one = sample(g, [](double) { return 1.0; });
    err[k++] = std::abs(inner_product(f, one) - 4.0 * pi / 5.0);
  }
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.2);
}

TEST(InnerProduct, UnitBall) {
  auto g = make_grid(3, 1.0, 500, Spacing::uniform);
  auto one = sample(g, [](double) { return 1.0; });
  EXPECT_NEAR(inner_product(one, one), 4.0 * pi / 3.0, 1e-12);
}

TEST(InnerProduct, SymmetricAndBilinear) {
  auto g = make_grid(3, 10.0, 800, Spacing::graded);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const double a = nd(rng), b = nd(rng), s1 = 0.5 + std::abs(nd(rng)), s2 = 0.5 + std::abs(nd(rng));
    auto f = sample(g, [&](double r) { return std::exp(-r * r / s1); });
    auto h = sample(g, [&](double r) { return std::cos(r) * std::exp(-r / s2); });
    auto k = sample(g, [&](double r) { return 1.0 / (1.0 + r * r); });
    EXPECT_EQ(inner_product(f, h), inner_product(h, f));
    RadialField comb(g, a * f.values + b * h.values);
    const double lhs = inner_product(comb, k);
    const double rhs = a * inner_product(f, k) + b * inner_product(h, k);
    EXPECT_NEAR(lhs, rhs, 1e-14 * (std::abs(lhs) + std::abs(rhs) + 1.0));
  }
}

TEST(InnerProduct, RejectsGridMismatch) {
  auto g1 = make_grid(3, 1.0, 100, Spacing::uniform);
  auto g2 = make_grid(3, 1.0, 101, Spacing::uniform);
  EXPECT_THROW(inner_product(talenti(g1), talenti(g2)), InvalidArgument);
}

TEST(InnerProduct, LambdaWAgainstWp) {
  // For d = 3, p = 4 the pairing equals (1/2 - 3/5) ||W||_5^5 with ||W||_5^5 = 4 sqrt(3) pi.
  auto g = make_grid(3, 1e5, 200000, Spacing::graded, 1e-4);
  auto W = talenti(g);
  auto LW = lambda_w(g);
  RadialField W4(g, W.values.array().pow(4.0));
  RadialField W5(g, W.values.array().pow(5.0));
  auto one = sample(g, [](double) { return 1.0; });
  const double pairing = inner_product(LW, W4);
  const double l5 = inner_product(W5, one);
  EXPECT_NEAR(pairing / ((0.5 - 3.0 / 5.0) * l5), 1.0, 1e-6);
  EXPECT_NEAR(l5 / (4.0 * std::sqrt(3.0) * pi), 1.0, 1e-6);
}

TEST(InnerProduct, W6AgainstQuadratureOracle) {
  const double oracle = oracle_radial3([](double r) { return std::pow(w3(r), 6); });
  EXPECT_NEAR(oracle, 3.0 * std::sqrt(3.0) * pi * pi / 4.0, 1e-10);
  auto g = make_grid(3, 1e3, 20000, Spacing::graded, 1e-4);
  auto norm = norms(talenti(g), {6.0});
  EXPECT_NEAR(std::pow(norm.lq.at(6.0).value, 6) / oracle, 1.0, 1e-6);
}

TEST(Talenti, PointValues) {
  auto g = make_grid(3, 10.0, 100, Spacing::graded);
  EXPECT_EQ(talenti(g)[0], 1.0);
  EXPECT_NEAR(talenti_value(std::sqrt(3.0), 3), 1.0 / std::sqrt(2.0), 1e-15);
  for (int d : {4, 5, 6}) EXPECT_EQ(talenti_value(0.0, d), 1.0);
}

TEST(Talenti, DiscreteResidualIsSecondOrder) {
  double res[2];
  int k = 0;
  for (int n : {2000, 4000}) {
    auto g = make_grid(3, 100.0, n, Spacing::graded, 2e-3 * 2000.0 / n);
    auto W = talenti(g);
    Vec r = neg_laplacian(*g, W.values) - W.values.array().pow(5.0).matrix();
    res[k++] = interior_l2(*g, r);
  }
  EXPECT_LT(res[1], 1e-5);
  EXPECT_NEAR(res[0] / res[1], 4.0, 0.6);
}

TEST(Talenti, ResidualInHigherDimension) {
  auto g = make_grid(5, 50.0, 4000, Spacing::graded, 1e-3);
  auto W = talenti(g);
  Vec r = neg_laplacian(*g, W.values) - W.values.array().pow(7.0 / 3.0).matrix();
  EXPECT_LT(interior_l2(*g, r), 1e-4);
}

TEST(LambdaW, ValuesAndZeroCrossing) {
  EXPECT_DOUBLE_EQ(lambda_w_value(0.0, 3), 0.5);
  EXPECT_DOUBLE_EQ(lambda_w_value(0.0, 5), 1.5);
  EXPECT_NEAR(lambda_w_value(std::sqrt(3.0), 3), 0.0, 1e-16);
  EXPECT_GT(lambda_w_value(1.7, 3), 0.0);
  EXPECT_LT(lambda_w_value(1.8, 3), 0.0);
}

TEST(LambdaW, MatchesNumericalGenerator) {
  // (d-2)/2 W + r W' with W' by central differences.
  for (int d : {3, 5}) {
    for (double r : {0.1, 0.7, 1.9, 4.0, 25.0}) {
      const double h = 1e-5 * (1.0 + r);
      const double dw = (talenti_value(r + h, d) - talenti_value(r - h, d)) / (2 * h);
      const double oracle = 0.5 * (d - 2) * talenti_value(r, d) + r * dw;
      EXPECT_NEAR(lambda_w_value(r, d), oracle, 1e-8);
    }
  }
}

TEST(Profiles, GridIndependentSamples) {
  auto g1 = make_grid(3, 20.0, 101, Spacing::uniform);
  auto g2 = make_grid(3, 20.0, 201, Spacing::uniform);
  auto a = talenti(g1), b = talenti(g2);
  auto la = lambda_w(g1), lb = lambda_w(g2);
  for (std::size_t i = 0; i < g1->size(); ++i) {
    ASSERT_EQ(g1->r(i), g2->r(2 * i));
    EXPECT_EQ(a[i], b[2 * i]);
    EXPECT_EQ(la[i], lb[2 * i]);
  }
}

TEST(Norms, GradientAgainstCriticalNorm) {
  auto g = make_grid(3, 200.0, 20000, Spacing::graded, 2e-4);
  auto rep = norms(talenti(g), {6.0});
  ASSERT_FALSE(rep.h1dot.divergent);
  ASSERT_FALSE(rep.lq.at(6.0).divergent);
  const double grad2 = rep.h1dot.value * rep.h1dot.value;
  const double l66 = std::pow(rep.lq.at(6.0).value, 6);
  EXPECT_NEAR(grad2 / l66, 1.0, 1e-6);
  EXPECT_NEAR(grad2 / (3.0 * std::sqrt(3.0) * pi * pi / 4.0), 1.0, 1e-6);
}

TEST(Norms, TalentiNotSquareIntegrableInDimension3) {
  auto g = make_grid(3, 200.0, 4000, Spacing::graded);
  auto rep = norms(talenti(g), {4.0});
  EXPECT_TRUE(rep.l2.divergent);
  EXPECT_FALSE(rep.lq.at(4.0).divergent);
  EXPECT_NEAR(rep.tail_power, 1.0, 0.01);
}

TEST(Norms, DivergenceFlagMonotoneInRadius) {
  bool seen = false;
  for (double R : {5.0, 10.0, 20.0, 50.0, 100.0, 400.0, 1000.0}) {
    auto g = make_grid(3, R, 2000, Spacing::graded);
    const bool flag = norms(talenti(g), {}).l2.divergent;
    if (seen) EXPECT_TRUE(flag) << "R = " << R;
    seen = seen || flag;
  }
  EXPECT_TRUE(seen);
}

TEST(Norms, ZeroFieldHasZeroNorms) {
  auto g = make_grid(3, 10.0, 100, Spacing::uniform);
  RadialField z(g, Vec::Zero(100));
  auto rep = norms(z, {1.0, 4.0, INFINITY});
  EXPECT_EQ(rep.l2.value, 0.0);
  EXPECT_EQ(rep.h1dot.value, 0.0);
  for (auto& [q, v] : rep.lq) {
    EXPECT_EQ(v.value, 0.0);
    EXPECT_FALSE(v.divergent);
  }
}

TEST(Norms, GaussianAgainstClosedForm) {
  // ||e^{-r^2}||_2^2 = (pi/2)^{3/2} in d = 3.
  auto g = make_grid(3, 12.0, 3000, Spacing::graded, 1e-4);
  auto f = sample(g, [](double r) { return std::exp(-r * r); });
  auto rep = norms(f, {INFINITY});
  EXPECT_NEAR(rep.l2.value * rep.l2.value / std::pow(pi / 2.0, 1.5), 1.0, 1e-5);
  EXPECT_EQ(rep.lq.at(INFINITY).value, 1.0);
  EXPECT_TRUE(std::isinf(rep.tail_power));
}

TEST(Norms, RejectsBadExponent) {
  auto g = make_grid(3, 10.0, 100, Spacing::uniform);
  EXPECT_THROW(norms(talenti(g), {0.5}), InvalidArgument);
}

TEST(CGConstant, MatchesClosedFormForP4) {
  const double pairing = -0.1 * 4.0 * std::sqrt(3.0) * pi;
  EXPECT_NEAR(lambda_w_pairing(3, 4.0) / pairing, 1.0, 1e-10);
  EXPECT_NEAR(cg_constant(4.0), pairing * pairing / (36 * pi * pi), 1e-12);
}
