// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "greenmat/error.hpp"
#include "greenmat/parabolic.hpp"

using namespace greenmat;

namespace {

struct HeatProblem {
  std::shared_ptr<Mesh> mesh;
  std::unique_ptr<EllipticProblem> problem;
  std::unique_ptr<ParabolicStepper> stepper;
  double gamma = 0;

  HeatProblem(const Domain& d, double h, CoefficientField f) {
    validate_ellipticity(f);
    mesh = std::make_shared<Mesh>(triangulate(d, h));
    assign_regions(*mesh, f);
    problem = std::make_unique<EllipticProblem>(mesh, std::move(f));
    stepper = std::make_unique<ParabolicStepper>(*problem);
    gamma = compute_gamma(d);
  }
};

Domain unit_disk(double h) {
  return Domain::disk({0, 0}, 1.0, static_cast<int>(std::ceil(2 * std::numbers::pi / h)));
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST(TimeGrid, GradedThenUniform) {
  const TimeGrid g = TimeGrid::graded(1e-4, 1.3, 0.05, 2.0);
  EXPECT_DOUBLE_EQ(g.t[1], 1e-4);
  EXPECT_DOUBLE_EQ(g.T(), 2.0);
  for (std::size_t n = 2; n + 1 < g.t.size(); ++n) {
    EXPECT_LE(g.dt(n), 1.3 * g.dt(n - 1) * (1 + 1e-12));
    EXPECT_LE(g.dt(n), 0.05 * (1 + 1e-12));
  }
  TimeGrid e = g;
  e.extend_to(4.0);
  for (std::size_t n = 0; n + 1 < g.t.size(); ++n) EXPECT_EQ(e.t[n], g.t[n]);
}

TEST(Truncation, ClosedFormAndDoubling) {
  const double T = truncation_time(1.0, 1.0, 1.0, 1e-8);
  EXPECT_NEAR(T, std::log(5e7) / 2.0, 1e-12);
  EXPECT_NEAR(truncation_time(1.0, 1.0, 1.0, 0.5e-8) - T, std::log(2.0) / 2.0, 1e-12);
  EXPECT_THROW(truncation_time(1.0, 0.0, 1.0, 1e-8), DomainError);
}

TEST(ParabolicStep, ZeroAndEigenfunctionDecay) {
  HeatProblem s(Domain::rectangle({0, 1, 0, 1}), 0.02, laplace());
  const Mesh& m = *s.mesh;
  const DofMap& dofs = s.problem->dofs();
  EXPECT_EQ(parabolic_step(*s.stepper, Vector::Zero(dofs.size()), 1e-3).cwiseAbs().maxCoeff(), 0.0);
  const double pi = std::numbers::pi;
  Vector nodal(static_cast<Eigen::Index>(m.num_vertices()));
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    nodal(v) = std::sin(pi * m.vertices[v].x) * std::sin(pi * m.vertices[v].y);
  const Vector u = restrict_free(dofs, nodal);
  const double rayleigh = u.dot(s.problem->stiffness().matrix * u) / u.dot(s.problem->mass() * u);
  EXPECT_NEAR(rayleigh, 2 * pi * pi, 0.05 * 2 * pi * pi);
  const double dt = 1e-3;
  const Vector next = parabolic_step(*s.stepper, u, dt);
  const double expect = 1.0 / (1.0 + dt * rayleigh);
  // nodal ratio at interior points
  for (Eigen::Index i = 0; i < u.size(); i += 97)
    if (std::abs(u(i)) > 0.3) EXPECT_NEAR(next(i) / u(i), expect, 0.05 * expect);
  const double e0 = u.dot(s.problem->mass() * u), e1 = next.dot(s.problem->mass() * next);
  EXPECT_LE(std::sqrt(e1), std::sqrt(e0) + 1e-12);
}

TEST(HeatKernel, MassSlopeAndDecayOnDisk) {
  HeatProblem s(unit_disk(0.02), 0.02, laplace());
  const double h = 0.02;
  HeatKernelOptions opt;
  opt.fixed_T = 3.0;
  const HeatKernelRun run = heat_kernel_column(*s.stepper, {0, 0}, 1.0, default_grid(h, s.gamma, 3.0), s.gamma, opt);
  EXPECT_GE(run.mass_t1, 0.95);
  EXPECT_LE(run.mass_t1, 1.0);
  std::vector<double> lx, ly;
  // window (h^2, d_y^2/4): before the boundary is felt
  for (std::size_t i = 1; i < run.times.size(); ++i)
    if (run.times[i] > h * h && run.times[i] < 0.25) {
      lx.push_back(std::log(run.times[i]));
      ly.push_back(std::log(run.l2_norms[i]));
    }
  const double sl = slope(lx, ly);
  EXPECT_GE(sl, -1.3);
  EXPECT_LE(sl, -0.7);
  // L2 norm nonincreasing after the first step
  for (std::size_t i = 2; i < run.l2_norms.size(); ++i) EXPECT_LE(run.l2_norms[i], run.l2_norms[i - 1] * (1 + 1e-12));
  // consecutive uniform steps decay at least at the certified rate 4 lambda gamma
  const double rate = 4.0 * s.problem->field().lambda() * s.gamma;
  for (std::size_t i = run.times.size() - 10; i < run.times.size(); ++i) {
    const double dt = run.times[i] - run.times[i - 1];
    EXPECT_LE(run.l2_norms[i] / run.l2_norms[i - 1], std::exp(-rate * dt) * 1.1);
  }
  EXPECT_GT(run.pointwise_C, 0.0);
}

TEST(TimeIntegral, ZeroSliceAndAdditivity) {
  KernelSlice z{0.0, {Vector::Zero(5)}, 0.0}, z1{1.0, {Vector::Zero(5)}, 0.0};
  EXPECT_EQ(accumulate_time_integral({z, z1})[0].cwiseAbs().maxCoeff(), 0.0);
  std::vector<KernelSlice> all;
  for (int i = 0; i <= 8; ++i) all.push_back({0.25 * i, {Vector::Constant(3, std::exp(-0.25 * i))}, 0});
  for (TimeRule rule : {TimeRule::right_endpoint, TimeRule::trapezoid}) {
    const Vector whole = accumulate_time_integral(all, rule)[0];
    const std::vector<KernelSlice> a(all.begin(), all.begin() + 5), b(all.begin() + 4, all.end());
    const Vector parts = accumulate_time_integral(a, rule)[0] + accumulate_time_integral(b, rule)[0];
    EXPECT_LE((whole - parts).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(HeatKernel, RouteAgreementAndMeasuredTail) {
  const double h = 0.04;
  CoefficientField f = checkerboard(1.0, 10.0, 16, {-1, 1, -1, 1});
  HeatProblem s(unit_disk(h), h, f);
  const Point y{0.3, 0.0};
  const double dy = 0.7;
  HeatKernelOptions opt;
  opt.epsilon = 1e-6;
  opt.fit_pointwise = false;
  const HeatKernelRun run = heat_kernel_column(*s.stepper, y, dy, default_grid(h, s.gamma, 1.0), s.gamma, opt);
  const GreenColumn gd = green_column_direct(*s.problem, y);
  double err = 0, ref = 0;
  for (std::size_t v = 0; v < s.mesh->num_vertices(); ++v) {
    if (distance(s.mesh->vertices[v], y) < 4 * h) continue;
    err = std::max(err, std::abs(run.green.at(v, 0, 0) - gd.at(v, 0, 0)));
    ref = std::max(ref, std::abs(gd.at(v, 0, 0)));
  }
  EXPECT_LE(err / ref, 0.01);

  HeatKernelOptions twice = opt;
  twice.fixed_T = 2.0 * run.T;
  const HeatKernelRun run2 = heat_kernel_column(*s.stepper, y, dy, default_grid(h, s.gamma, 1.0), s.gamma, twice);
  const double tail = (run2.green.values[0] - run.green.values[0]).cwiseAbs().maxCoeff();
  EXPECT_LE(tail, 2 * opt.epsilon);
}
