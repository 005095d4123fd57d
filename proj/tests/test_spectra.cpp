#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "critlab/instability.hpp"

using namespace critlab;

namespace {

class Spectra : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    gs_ = new GroundStateSolution(spectral_ground_state(shoot_threshold(ProblemParams{3, 4.0, 1000.0})));
    rp_ = new RescaledProfile(rescale(*gs_));
    basis_ = new MinusBasis(minus_basis(*rp_));
  }
  static void TearDownTestSuite() {
    delete basis_;
    delete rp_;
    delete gs_;
  }
  static GroundStateSolution* gs_;
  static RescaledProfile* rp_;
  static MinusBasis* basis_;
};

GroundStateSolution* Spectra::gs_ = nullptr;
RescaledProfile* Spectra::rp_ = nullptr;
MinusBasis* Spectra::basis_ = nullptr;

// Smooth random field: a few random Gaussian bumps.
RadialField random_field(const GridPtr& g, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> c(0.0, 3.0 * scale), w(0.2 * scale, scale);
  double a[4], x0[4], s[4];
  for (int k = 0; k < 4; ++k) {
    a[k] = n(rng);
    x0[k] = c(rng);
    s[k] = w(rng);
  }
  return sample(g, [&](double r) {
    double v = 0.0;
    for (int k = 0; k < 4; ++k) v += a[k] * std::exp(-std::pow((r - x0[k]) / s[k], 2));
    return v;
  });
}

}  // namespace

TEST_F(Spectra, QuadraticFormMatchesMatrix) {
  std::mt19937_64 rng(7);
  for (auto kind : {OperatorKind::plus, OperatorKind::minus}) {
    const auto op = assemble(kind, *gs_);
    for (int t = 0; t < 5; ++t) {
      auto f = random_field(gs_->field.grid, rng, 0.05);
      f.values[f.size() - 1] = 0.0;
      const Vec v = op.to_v(f);
      const double direct = v.dot(op.multiply(v));
      EXPECT_NEAR(quadratic_form(op, f), direct, 1e-9 * op.norm_bound() * v.squaredNorm());
    }
  }
}

TEST_F(Spectra, OperatorsAreSymmetricTridiagonal) {
  const auto op = assemble(OperatorKind::plus, *gs_);
  const Eigen::MatrixXd A = op.dense();
  EXPECT_EQ((A - A.transpose()).norm(), 0.0);
  EXPECT_EQ(op.off.size(), op.dim() - 1);
}

TEST_F(Spectra, MinusIsNonnegativeOnRandomFields) {
  const auto op = assemble(OperatorKind::minus, *gs_);
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    const auto f = random_field(gs_->field.grid, rng, 0.05);
    EXPECT_GE(quadratic_form(op, f), -1e-10 * inner_product(f, f) * gs_->params.omega);
  }
}

TEST_F(Spectra, MinusKernelIsTheProfile) {
  const auto op = assemble(OperatorKind::minus, *gs_);
  const auto rep = eigs(op, 2);
  EXPECT_LE(std::abs(rep.eigenvalues[0]) / gs_->params.omega, 1e-6);
  const Vec v = op.to_v(rep.eigenfields[0]).normalized();
  const Vec phi = op.to_v(gs_->field).normalized();
  EXPECT_GE(std::abs(v.dot(phi)), 1.0 - 1e-8);
  EXPECT_GT(rep.eigenvalues[1], 0.0);
  for (double r : rep.residuals) EXPECT_LE(r / rep.scale, 1e-8);
}

TEST_F(Spectra, PlusHasOneNegativeEigenvalue) {
  const auto rep = eigs(assemble(OperatorKind::plus, *gs_), 3);
  EXPECT_EQ(rep.neg_count, 1);
  EXPECT_LT(rep.eigenvalues[0], 0.0);
  EXPECT_GT(nondegeneracy_gap(*gs_), 0.0);
}

TEST_F(Spectra, PlusFormOnProfileHasClosedForm) {
  const auto op = assemble(OperatorKind::plus, *gs_);
  const auto& g = *gs_->field.grid;
  double s5 = 0.0, s6 = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double u = gs_->field[i];
    s5 += g.weights()[i] * std::pow(u, 5);
    s6 += g.weights()[i] * std::pow(u, 6);
  }
  // The discrete equation holds to the solve residual, so the identity
  // <L+ phi, phi> = -(p-1) int phi^{p+1} - 4 int phi^6 holds to rounding.
  const double expect = -3.0 * s5 - 4.0 * s6;
  EXPECT_NEAR(quadratic_form(op, gs_->field) / expect, 1.0, 1e-6);
}

TEST(TalentiOperator, OneNegativeDirectionAndNearZeroMode) {
  double previous = INFINITY;
  for (double R : {50.0, 200.0}) {
    const auto g = make_grid(3, R, 1500, Spacing::graded, 1e-3);
    const auto rep = eigs(assemble(OperatorKind::talenti_plus, g), 2);
    EXPECT_EQ(rep.neg_count, 1);
    EXPECT_LT(rep.eigenvalues[0], 0.0);
    EXPECT_GT(rep.eigenvalues[1], 0.0);
    EXPECT_LT(rep.eigenvalues[1], previous);
    previous = rep.eigenvalues[1];
  }
}

TEST(TalentiOperator, GeneratorIsNearlyAnnihilated) {
  // Lambda W decays like 1/r in d = 3, so compare pointwise away from the
  // Dirichlet edge rather than through the truncated form.
  const auto g = make_grid(3, 100.0, 4000, Spacing::graded);
  const auto lw = lambda_w(g);
  const Vec lap = neg_laplacian(*g, lw.values);
  Vec res = lap - 5.0 * talenti(g).values.array().pow(4.0).matrix().cwiseProduct(lw.values);
  Vec ref = lap;
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (g->r(i) > 0.5 * g->r_max()) res[static_cast<Eigen::Index>(i)] = ref[static_cast<Eigen::Index>(i)] = 0.0;
  }
  EXPECT_LE(interior_l2(*g, res) / interior_l2(*g, ref), 1e-4);
}

TEST_F(Spectra, SymmetrizedMinimumBoundsRandomDirections) {
  const auto ir = unstable_eigenvalue(*basis_, false);
  ASSERT_LT(ir.nu, 0.0);
  const auto& b = *basis_;
  const Vec sd = b.D.cwiseSqrt();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int t = 0; t < 1000; ++t) {
    Vec c(b.Q.cols());
    for (auto& x : c) x = n(rng);
    const Vec h = b.Q * sd.cwiseProduct(c);
    const double value = h.dot(b.plus.multiply(h)) / c.squaredNorm();
    ASSERT_GE(value, ir.nu - 1e-10 * std::abs(ir.nu));
  }
}

TEST_F(Spectra, BlockSpectrumAgreesAndIsSymmetric) {
  const auto ir = unstable_eigenvalue(*basis_);
  ASSERT_TRUE(ir.mu.has_value());
  EXPECT_LE(ir.cross_error, 1e-4);
  EXPECT_LE(ir.symmetry_error, 1e-8);
  EXPECT_NEAR(ir.block_eigs.front().imag(), 0.0, 1e-8 * ir.block_scale);
}

TEST_F(Spectra, WitnessDoesNotBeatTheMinimum) {
  const auto ir = unstable_eigenvalue(*basis_, false);
  const auto w = instability_witness(*basis_, *rp_, 10.0);
  EXPECT_LT(w.value, 0.0);
  EXPECT_GE(w.rayleigh, ir.nu);
  EXPECT_LE(std::abs(inner_product(rp_->field, w.g)), 1e-10 * std::sqrt(inner_product(w.g, w.g)));
}

TEST_F(Spectra, WitnessRejectsOversizedCutoff) {
  EXPECT_THROW(instability_witness(*basis_, *rp_, rp_->field.grid->r_max()), InvalidArgument);
}

TEST_F(Spectra, IndexCountsAgree) {
  const auto ix = gss_index(*gs_);
  EXPECT_EQ(ix.n_R, 1);
  EXPECT_EQ(ix.i_L, 1);
  EXPECT_TRUE(ix.match);
}

TEST(SmoothCutoff, ProfileShape) {
  EXPECT_EQ(smooth_cutoff(0.5), 1.0);
  EXPECT_EQ(smooth_cutoff(2.5), 0.0);
  EXPECT_NEAR(smooth_cutoff(1.5), 0.5, 1e-15);
  for (double t = 1.0; t < 2.0; t += 0.01) EXPECT_GE(smooth_cutoff(t), smooth_cutoff(t + 0.01));
}

TEST(PlusSpectrum, ClusterAboveOmegaDensifiesWithDomain) {
  const ProblemParams pp{3, 4.0, 100.0};
  const auto sr = shoot_threshold(pp);
  int below[2], cluster[2];
  for (int k = 0; k < 2; ++k) {
    auto go = spectral_grid_options(600);
    go.decay_lengths = k == 0 ? 20.0 : 60.0;
    const auto gs = discretize(sr, ground_state_grid(pp, sr.m, go));
    const auto es = tridiagonal_eigen(assemble(OperatorKind::plus, gs), false);
    below[k] = cluster[k] = 0;
    for (double l : es.eigenvalues()) {
      if (l < pp.omega) ++below[k];
      else if (l < 2.0 * pp.omega) ++cluster[k];
    }
  }
  EXPECT_EQ(below[0], below[1]);
  EXPECT_GT(cluster[1], 2 * cluster[0]);
}
