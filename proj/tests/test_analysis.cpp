// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "greenmat/analysis.hpp"
#include "greenmat/error.hpp"
#include "greenmat/oracles.hpp"

using namespace greenmat;

namespace {

constexpr double kInvTwoPi = 0.5 / std::numbers::pi;

std::shared_ptr<const Mesh> make_mesh(const Domain& d, double h, const CoefficientField& f) {
  auto m = std::make_shared<Mesh>(triangulate(d, h));
  assign_regions(*m, f);
  return m;
}

Domain unit_disk(double h) {
  return Domain::disk({0, 0}, 1.0, static_cast<int>(std::ceil(2 * std::numbers::pi / h)));
}

}  // namespace

TEST(Report, ValueLookupAndFormat) {
  EstimateReport r;
  r.id = "demo";
  r.set("a", 1.5);
  r.set("a", 2.5);
  EXPECT_EQ(r.value("a"), 2.5);
  EXPECT_EQ(r.values.size(), 1u);
  EXPECT_THROW(r.value("missing"), AnalysisError);
  r.pass = true;
  const std::string s = format_report(r);
  EXPECT_NE(s.find("[report demo]"), std::string::npos);
  EXPECT_NE(s.find("pass = true"), std::string::npos);
}

TEST(FitLine, RecoversExactLineAndRefinementBand) {
  std::vector<double> x, y;
  for (int i = 0; i < 10; ++i) {
    x.push_back(i);
    y.push_back(3.0 - 0.5 * i);
  }
  const LinearFit f = fit_line(x, y);
  EXPECT_NEAR(f.slope, -0.5, 1e-13);
  EXPECT_NEAR(f.intercept, 3.0, 1e-12);
  EXPECT_NEAR(f.slope_stderr, 0.0, 1e-12);
  EXPECT_TRUE(refinement_stability("c", 1.0, 1.2).pass);
  EXPECT_FALSE(refinement_stability("c", 1.0, 1.3).pass);
  EXPECT_FALSE(refinement_stability("c", 1.0, 0.7).pass);
}

TEST(Oracle, SelfValidationAndKnownValues) {
  for (auto g : {OracleGeometry::disk, OracleGeometry::halfplane}) {
    const Point y = g == OracleGeometry::disk ? Point{0.3, -0.2} : Point{0.4, 0.7};
    const OracleValidation v = validate_oracle(g, y);
    EXPECT_TRUE(v.pass);
    EXPECT_LE(v.boundary_max, 1e-12);
  }
  // reflection: points (0,1) and (0,2) give ln(3)/(2 pi)
  EXPECT_NEAR(oracle_green(OracleGeometry::halfplane, {0, 1}, {0, 2}), std::log(3.0) * kInvTwoPi, 1e-14);
  // disk centre: -(1/2 pi) ln |x|
  EXPECT_NEAR(oracle_green(OracleGeometry::disk, {std::exp(-1.0), 0}, {0, 0}), kInvTwoPi, 1e-14);
  // swap symmetry
  EXPECT_NEAR(oracle_green(OracleGeometry::disk, {0.1, 0.5}, {-0.3, 0.2}),
              oracle_green(OracleGeometry::disk, {-0.3, 0.2}, {0.1, 0.5}), 1e-14);
  EXPECT_THROW(oracle_green(OracleGeometry::halfplane, {0, 1}, {0, 0}), DomainError);
}

TEST(Symmetry, SkewFieldNeedsTransposedOperator) {
  const Rect box{-1, 1, -1, 1};
  CoefficientField f = skew(0.8, 4, box);
  validate_ellipticity(f);
  CoefficientField ft = transpose_field(f);
  const auto m = make_mesh(unit_disk(0.08), 0.08, f);
  const EllipticProblem p(m, f), pt(m, ft);
  std::vector<GreenColumn> g, gt;
  for (Point y : {Point{0.1, 0.2}, Point{-0.35, 0.05}, Point{0.2, -0.4}}) {
    g.push_back(green_column_direct(p, y));
    gt.push_back(green_column_direct(pt, y));
  }
  const EstimateReport r = symmetry_defect(g, gt, 1e-9);
  EXPECT_TRUE(r.pass) << format_report(r);
  EXPECT_GE(r.value("naive_defect"), 1e-3);
  // swapping the roles of field and transpose gives the same defect
  const EstimateReport rs = symmetry_defect(gt, g, 1e-9);
  EXPECT_NEAR(rs.value("defect"), r.value("defect"), 1e-9);
}

TEST(LogBound, EvaluatorArithmeticAndScaling) {
  EXPECT_DOUBLE_EQ(log_bound_shape(2.0, 0.5, 0.5), 1.0 / (2.0 * 0.25));
  EXPECT_NEAR(log_bound_shape(1.0, 1.0, std::exp(-2.0)), 3.0, 1e-14);
  const double h = 0.04;
  const Domain d = unit_disk(h);
  CoefficientField f = laplace();
  const auto m = make_mesh(d, h, f);
  const auto dx = vertex_distances(*m, d);
  const double gamma = compute_gamma(d);
  const EllipticProblem p(m, f);
  const GreenColumn g = green_column_direct(p, {0, 0}, 1.0);
  const EstimateReport r = verify_log_bound(g, dx, gamma);
  EXPECT_NEAR(r.value("near_field_slope"), kInvTwoPi, 0.05 * kInvTwoPi);
  // A -> c A scales G by 1/c; C_fit follows exactly
  const double c = 3.0;
  CoefficientField fc = f.scaled(c);
  const EllipticProblem pc(m, fc);
  const EstimateReport rc = verify_log_bound(green_column_direct(pc, {0, 0}, 1.0), dx, gamma);
  EXPECT_NEAR(rc.value("C_fit") * c, r.value("C_fit"), 1e-9 * r.value("C_fit"));
}

TEST(Decay, MinFormBoundShape) {
  EXPECT_DOUBLE_EQ(min_form_bound(1.0, 2.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(min_form_bound(2.0, 1.0, 1.0), 1.0 + std::log(2.0));
  // nonincreasing in r
  double prev = kInf;
  for (double r = 0.01; r < 100; r *= 1.3) {
    const double b = min_form_bound(1.0, r, 0.7);
    EXPECT_LE(b, prev);
    prev = b;
  }
}

TEST(Decay, HalfPlaneOracleCalibration) {
  // |G| of the half-plane oracle decays like d/r: the fit must see mu near 1
  const Point y{0, 0.1};
  std::vector<DecaySample> s;
  for (int j = 0; j <= 15; ++j)
    for (double a : {std::numbers::pi / 4, 3 * std::numbers::pi / 4}) {
      const double r = 0.41 * std::pow(13.0 / 0.41, j / 15.0);
      const Point x = y + Point{r * std::cos(a), r * std::sin(a)};
      s.push_back({r, std::min(x.y, y.y), std::abs(oracle_green(OracleGeometry::halfplane, x, y))});
    }
  const EstimateReport r = fit_decay_exponent(s);
  EXPECT_GE(r.value("mu_hat"), 0.95);
  EXPECT_LE(r.value("mu_hat"), 1.05);
  EXPECT_TRUE(r.pass);
  // too short a span is refused
  std::vector<DecaySample> short_span(s.begin(), s.begin() + 6);
  EXPECT_THROW(fit_decay_exponent(short_span), AnalysisError);
}

TEST(Convolution, DeltaConstantAndLinearity) {
  const double h = 0.05;
  CoefficientField f = laplace();
  const auto m = make_mesh(unit_disk(h), h, f);
  const EllipticProblem p(m, f);
  const Eigen::Index nv = static_cast<Eigen::Index>(m->num_vertices());
  // f = 1: u = (1 - |x|^2)/4
  const ConvolutionResult one = convolution_check(p, Vector::Ones(nv));
  EXPECT_TRUE(one.report.pass) << format_report(one.report);
  const MeshLocator loc(*m);
  const Location l0 = loc.locate({0, 0});
  double u0 = 0;
  for (int a = 0; a < 3; ++a) u0 += l0.bary[static_cast<std::size_t>(a)] * one.u_conv(m->triangles[static_cast<std::size_t>(l0.triangle)][static_cast<std::size_t>(a)]);
  EXPECT_NEAR(u0, 0.25, 0.01 * 0.25);
  // linearity in f
  Vector g(nv), hh(nv);
  for (Eigen::Index v = 0; v < nv; ++v) {
    const Point x = m->vertices[static_cast<std::size_t>(v)];
    g(v) = std::sin(3 * x.x) * x.y;
    hh(v) = x.x * x.x - 0.2;
  }
  const ConvolutionResult cg = convolution_check(p, g), ch = convolution_check(p, hh);
  const ConvolutionResult cs = convolution_check(p, 2.0 * g - hh);
  EXPECT_LE((cs.u_conv - (2.0 * cg.u_conv - ch.u_conv)).cwiseAbs().maxCoeff(), 1e-10);
  // zero source gives zero
  EXPECT_EQ(convolution_check(p, Vector::Zero(nv)).u_conv.cwiseAbs().maxCoeff(), 0.0);
}

TEST(BallNorm, ZeroConstantAndLinear) {
  CoefficientField f = laplace();
  const auto m = make_mesh(Domain::rectangle({-1, 1, -1, 1}), 0.05, f);
  const Eigen::Index nv = static_cast<Eigen::Index>(m->num_vertices());
  EXPECT_EQ(ball_lp_norm(*m, 1, Vector::Zero(nv), 2.0, {0, 0}, 0.5, false), 0.0);
  // |B_r|^(1/p) for u = 1
  const double r = 0.5;
  EXPECT_NEAR(ball_lp_norm(*m, 1, Vector::Ones(nv), 2.0, {0, 0}, r, false), std::sqrt(std::numbers::pi * r * r), 2e-3);
  // u = x1: |Du| = 1 everywhere
  Vector u(nv);
  for (Eigen::Index v = 0; v < nv; ++v) u(v) = m->vertices[static_cast<std::size_t>(v)].x;
  EXPECT_NEAR(ball_lp_norm(*m, 1, u, 1.5, {0.1, 0}, r, true), std::pow(std::numbers::pi * r * r, 1 / 1.5), 5e-3);
}

TEST(WeakType, ProfileMonotoneAndEmptyAboveMax) {
  const double h = 0.04;
  CoefficientField f = laplace();
  const auto m = make_mesh(unit_disk(h), h, f);
  const EllipticProblem p(m, f);
  const GreenColumn g = green_column_direct(p, {0, 0}, 1.0);
  std::vector<double> th;
  for (double t = 1.0; t < 1e3; t *= 1.5) th.push_back(t);
  th.push_back(1e7);  // above max |DG|: empty set
  const EstimateReport r = gradient_weak_type_profile(g, th);
  EXPECT_EQ(r.value("monotone"), 1.0);
  EXPECT_FALSE(r.warnings.empty());  // thresholds at or below max(t0, e)
  EXPECT_TRUE(r.pass) << format_report(r);
  // |DG| ~ 1/(2 pi r): |A_t| t^2 ~ 1/(4 pi), so the profile stays bounded
  EXPECT_LE(r.value("profile_max"), 1.0);
}
