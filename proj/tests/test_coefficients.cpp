// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "greenmat/coefficients.hpp"
#include "greenmat/error.hpp"

using namespace greenmat;

namespace {
const Rect kUnit{0, 1, 0, 1};
}

TEST(Ellipticity, Laplacian) {
  CoefficientField f = laplace();
  const auto c = validate_ellipticity(f);
  EXPECT_DOUBLE_EQ(c.lambda, 1.0);
  EXPECT_DOUBLE_EQ(c.Lambda, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(f.lambda(), 1.0);
}

TEST(Ellipticity, CheckerboardWorstCell) {
  CoefficientField f = checkerboard(1.0, 10.0, 16, kUnit);
  const auto c = validate_ellipticity(f);
  EXPECT_DOUBLE_EQ(c.lambda, 1.0);
  EXPECT_NEAR(c.Lambda, std::sqrt(200.0), 1e-14);
}

TEST(Ellipticity, DecoupledPairOfLaplacians) {
  CoefficientField f = laplace(2);
  const auto c = validate_ellipticity(f);
  EXPECT_NEAR(c.lambda, 1.0, 1e-14);
  EXPECT_NEAR(c.Lambda, 2.0, 1e-14);
}

TEST(Ellipticity, RejectsIndefinite) {
  Block b = Block::identity(1);
  b.a[1][1](0, 0) = -0.5;
  CoefficientField f(1, {{0, b}}, nullptr);
  EXPECT_THROW(validate_ellipticity(f), CoefficientError);
}

TEST(Ellipticity, SkewDriftKeepsLambda) {
  CoefficientField f = skew(0.3, 4, kUnit);
  const auto c = validate_ellipticity(f);
  EXPECT_NEAR(c.lambda, 1.0, 1e-14);
  EXPECT_NEAR(c.Lambda, std::sqrt(2.0 + 2 * 0.09), 1e-14);
}

TEST(Transpose, FixedPointInvolutionAndIndexSwap) {
  const CoefficientField sym = random_spd(3, 0.5, 6.0, 3, kUnit, 2);
  const CoefficientField st = transpose_field(sym);
  for (const auto& [id, b] : sym.blocks())
    for (int al = 0; al < 2; ++al)
      for (int be = 0; be < 2; ++be)
        EXPECT_LE((st.sample_block(id).a[al][be] - b.a[al][be]).cwiseAbs().maxCoeff(), 1e-15);

  const CoefficientField sk = skew(0.3, 4, kUnit);
  const CoefficientField tt = transpose_field(transpose_field(sk));
  for (const auto& [id, b] : sk.blocks()) EXPECT_TRUE(tt.sample_block(id) == b);

  const CoefficientField t = transpose_field(sk);
  EXPECT_DOUBLE_EQ(sk.sample_block(0).a[0][1](0, 0), 0.3);
  EXPECT_DOUBLE_EQ(sk.sample_block(0).a[1][0](0, 0), -0.3);
  EXPECT_DOUBLE_EQ(t.sample_block(0).a[0][1](0, 0), -0.3);
  EXPECT_DOUBLE_EQ(t.sample_block(0).a[1][0](0, 0), 0.3);
}

TEST(Transpose, SameConstantsExactly) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    CoefficientField f = random_spd(seed, 0.7, 9.0, 2, kUnit, 2);
    // add an antisymmetric perturbation so the transpose differs
    std::map<int, Block> blocks = f.blocks();
    for (auto& [id, b] : blocks) {
      b.a[0][1](0, 1) += 0.2;
      b.a[1][0](1, 0) -= 0.2;
    }
    CoefficientField g(2, blocks, f.regions());
    CoefficientField gt = transpose_field(g);
    const auto c1 = validate_ellipticity(g);
    const auto c2 = validate_ellipticity(gt);
    EXPECT_EQ(c1.lambda, c2.lambda);
    EXPECT_EQ(c1.Lambda, c2.Lambda);
  }
}

TEST(Ellipticity, ScalingIsExact) {
  CoefficientField f = random_spd(11, 1.0, 5.0, 2, kUnit, 1);
  const auto c = validate_ellipticity(f);
  CoefficientField g = f.scaled(4.0);
  const auto d = validate_ellipticity(g);
  EXPECT_DOUBLE_EQ(d.lambda, 4.0 * c.lambda);
  EXPECT_DOUBLE_EQ(d.Lambda, 4.0 * c.Lambda);
}

TEST(Ellipticity, RandomDirectionsRespectLambda) {
  CoefficientField f = random_spd(5, 0.8, 7.0, 3, kUnit, 2);
  Block b = f.sample_block(4);
  b.a[0][1](0, 0) += 0.4;  // non-symmetric part
  b.a[1][0](0, 0) -= 0.4;
  CoefficientField g(2, {{0, b}}, nullptr);
  const double lambda = validate_ellipticity(g).lambda;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 10000; ++k) {
    Eigen::VectorXd xi(4);
    for (int i = 0; i < 4; ++i) xi(i) = nd(rng);
    EXPECT_GE(quadratic_form(b, xi), lambda * xi.squaredNorm() - 1e-12 * xi.squaredNorm());
  }
}

TEST(Generators, RandomSpdHitsTargets) {
  CoefficientField f = random_spd(9, 0.5, 4.0, 4, kUnit, 1);
  const auto c = validate_ellipticity(f);
  EXPECT_NEAR(c.lambda, 0.5, 1e-12);
  EXPECT_LE(c.Lambda, 4.0 + 1e-12);
  CoefficientField g = random_spd(9, 0.5, 4.0, 4, kUnit, 1);
  for (const auto& [id, b] : f.blocks()) EXPECT_TRUE(g.sample_block(id) == b);
}

TEST(SampleBlock, CheckerboardAndUnknownRegion) {
  const CoefficientField f = checkerboard(1.0, 10.0, 2, kUnit);
  EXPECT_EQ(f.region_of({0.25, 0.25}), 0);
  EXPECT_EQ(f.region_of({0.75, 0.25}), 1);
  EXPECT_EQ(f.region_of({1.25, 0.25}), 0);  // periodic
  EXPECT_TRUE(f.sample_block(1) == Block::identity(1, 10.0));
  EXPECT_THROW(f.sample_block(7), CoefficientError);
  const CoefficientField l = laplace();
  EXPECT_EQ(l.region_of({5, -3}), 0);
}

TEST(CoefficientFile, ParsesCellsLayout) {
  std::istringstream in(
      "N 1\nlayout cells 2 0 1 0 1\n"
      "region 0 1 0 0 1\nregion 1 2 0 0 2\nregion 2 3 0.1 0.1 3\nregion 3 1 0 0 1\n");
  CoefficientField f = read_coefficients(in);
  EXPECT_EQ(f.region_of({0.75, 0.25}), 2);
  EXPECT_DOUBLE_EQ(f.sample_block(2).a[0][1](0, 0), 0.1);
  EXPECT_NO_THROW(validate_ellipticity(f));
  std::istringstream bad("N 2\nregion 0 1 2 3\n");
  EXPECT_THROW(read_coefficients(bad), CoefficientError);
}
