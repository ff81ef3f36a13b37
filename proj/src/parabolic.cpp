// SPDX-License-Identifier: Apache-2.0
#include "greenmat/parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "greenmat/error.hpp"
#include "greenmat/simd/kernels.hpp"

namespace greenmat {

TimeGrid TimeGrid::graded(double t1, double ratio, double dt_max, double T) {
  if (!(t1 > 0) || !(ratio >= 1.0) || !(dt_max >= t1)) throw Error("invalid time grid parameters");
  TimeGrid g;
  g.t1 = t1;
  g.ratio = ratio;
  g.dt_max = dt_max;
  g.extend_to(T);
  return g;
}

void TimeGrid::extend_to(double T) {
  if (!(T > 0)) throw Error("time grid end must be positive");
  t.assign(1, 0.0);
  double tn = 0.0, dt = t1;
  while (tn + dt < T * (1 - 1e-12)) {
    tn += dt;
    t.push_back(tn);
    dt = std::min(dt * ratio, dt_max);
  }
  for (double e : extra)
    if (e > 0 && e < T) t.push_back(e);
  t.push_back(T);
  std::sort(t.begin(), t.end());
  // drop near-duplicates
  std::vector<double> u{0.0};
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] - u.back() > 1e-12 * std::max(1.0, t[i])) u.push_back(t[i]);
  if (u.back() < T) u.back() = T;
  t = std::move(u);
}

void TimeGrid::insert_node(double s) {
  extra.push_back(s);
  extend_to(std::max(T(), s));
}

TimeGrid default_grid(double h, double gamma, double T) {
  return TimeGrid::graded(h * h / 8.0, 1.3, 1.0 / (16.0 * gamma), T);
}

ParabolicStepper::ParabolicStepper(const EllipticProblem& problem)
    : problem_(&problem), mass_solver_(problem.mass(), true) {}

const LinearSolver& ParabolicStepper::factor(double dt) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_.find(dt);
  if (it == cache_.end()) {
    SparseMatrix a = problem_->mass() + dt * problem_->stiffness().matrix;
    it = cache_.emplace(dt, std::make_unique<LinearSolver>(a, problem_->stiffness().symmetric)).first;
  }
  return *it->second;
}

Vector ParabolicStepper::step(const Vector& u, double dt) const {
  if (!(dt > 0)) throw SolverError("time step must be positive", {});
  return factor(dt).solve(Vector(problem_->mass() * u), problem_->tol());
}

Vector ParabolicStepper::project(const Vector& b) const { return mass_solver_.solve(b, problem_->tol()); }

Vector parabolic_step(const ParabolicStepper& stepper, const Vector& u, double dt) {
  return stepper.step(u, dt);
}

void TimeAccumulator::add(const KernelSlice& prev, const KernelSlice& cur) {
  const double dt = cur.t - prev.t;
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    if (rule_ == TimeRule::right_endpoint)
      simd::axpy(dt, cur.values[k].data(), sum_[k].data(), static_cast<std::size_t>(sum_[k].size()));
    else
      sum_[k] += 0.5 * dt * (prev.values[k] + cur.values[k]);
  }
}

std::vector<Vector> accumulate_time_integral(const std::vector<KernelSlice>& slices, TimeRule rule) {
  if (slices.empty()) return {};
  TimeAccumulator acc(static_cast<int>(slices[0].values.size()), slices[0].values[0].size(), rule);
  for (std::size_t i = 1; i < slices.size(); ++i) acc.add(slices[i - 1], slices[i]);
  return acc.sum();
}

double truncation_time(double lambda, double gamma, double A, double epsilon) {
  if (!(gamma > 0)) throw DomainError("gamma must be positive");
  if (!(lambda > 0) || !(epsilon > 0) || !(A > 0)) throw Error("truncation_time: invalid arguments");
  const double rate = 2.0 * lambda * gamma;
  return std::max(0.0, std::log(A / (rate * epsilon)) / rate);
}

double tail_prefactor(double l2_norm_squared, double t_probe, double d_y, double lambda, double gamma) {
  const double rho = 0.5 * d_y;
  return std::sqrt(l2_norm_squared) * std::exp(2.0 * lambda * gamma * t_probe) / (std::sqrt(std::numbers::pi) * rho);
}

double integrate(const Mesh& m, const Vector& u) {
  double s = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tr = m.triangles[t];
    s += m.triangle_area(t) / 3.0 * (u(tr[0]) + u(tr[1]) + u(tr[2]));
  }
  return s;
}

HeatKernelRun heat_kernel_column(const ParabolicStepper& stepper, Point y, double d_y, TimeGrid grid,
                                 double gamma, const HeatKernelOptions& opt) {
  const EllipticProblem& p = stepper.problem();
  const Mesh& mesh = p.mesh();
  const int n = p.field().n();
  if (!(d_y > 0)) throw DomainError("source must have positive distance to the boundary");
  if (!p.field().certified()) throw CoefficientError("field must be validated before time stepping");
  const double lambda = p.field().lambda();

  const double t_probe = std::max(0.25 * d_y * d_y, grid.t1);
  if (opt.fixed_T > 0) {
    grid.extend_to(opt.fixed_T);
  } else {
    grid.extra.push_back(t_probe);
    grid.extend_to(t_probe);
  }

  HeatKernelRun run;
  KernelSlice prev, cur;
  prev.t = 0.0;
  for (int k = 0; k < n; ++k) prev.values.push_back(stepper.project(p.delta(y, k)));
  auto l2 = [&](const KernelSlice& s) {
    double v = 0.0;
    for (const Vector& u : s.values) v += u.dot(p.mass() * u);
    return v;
  };
  prev.l2_norm = l2(prev);
  run.times.push_back(0.0);
  run.l2_norms.push_back(prev.l2_norm);
  if (opt.observer) opt.observer(prev);

  TimeAccumulator acc(n, p.dofs().size(), opt.rule);
  const double R = 0.5 * d_y;
  bool truncated = opt.fixed_T > 0;
  for (std::size_t i = 1; i < grid.t.size(); ++i) {
    cur.t = grid.t[i];
    const double dt = cur.t - prev.t;
    cur.values.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) cur.values[static_cast<std::size_t>(k)] = stepper.step(prev.values[static_cast<std::size_t>(k)], dt);
    cur.l2_norm = l2(cur);
    run.times.push_back(cur.t);
    run.l2_norms.push_back(cur.l2_norm);
    if (i == 1) {
      const Vector k0 = expand(p.dofs(), cur.values[0], mesh.num_vertices());
      Vector comp(static_cast<Eigen::Index>(mesh.num_vertices()));
      for (Eigen::Index v = 0; v < comp.size(); ++v) comp(v) = k0(v * n);
      run.mass_t1 = integrate(mesh, comp);
    }
    if (opt.fit_pointwise && std::sqrt(cur.t) < R) {
      for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const int f = p.dofs().free_index[v];
        if (f < 0) continue;
        const double s = std::max(std::sqrt(cur.t), distance(mesh.vertices[v], y));
        if (s >= R) continue;
        double m2 = 0.0;
        for (int k = 0; k < n; ++k)
          for (int c = 0; c < n; ++c) m2 += std::pow(cur.values[static_cast<std::size_t>(k)](f * n + c), 2);
        run.pointwise_C = std::max(run.pointwise_C, std::sqrt(m2) * s * s);
      }
    }
    acc.add(prev, cur);
    if (opt.observer) opt.observer(cur);
    if (!truncated && cur.t >= t_probe) {
      run.A = tail_prefactor(cur.l2_norm, cur.t, d_y, lambda, gamma);
      const double T = std::max(truncation_time(lambda, gamma, run.A, opt.epsilon), cur.t);
      grid.extend_to(T);
      truncated = true;
    }
    std::swap(prev, cur);
  }
  run.T = grid.T();
  run.grid = grid;
  run.last = prev.values;
  run.green.mesh = p.mesh_ptr();
  run.green.y = y;
  run.green.n = n;
  run.green.route = Route::parabolic;
  run.green.h = mesh.h;
  run.green.T = run.T;
  run.green.epsilon = opt.epsilon;
  run.green.d_y = d_y;
  for (const Vector& s : acc.sum()) run.green.values.push_back(expand(p.dofs(), s, mesh.num_vertices()));
  return run;
}

}  // namespace greenmat
