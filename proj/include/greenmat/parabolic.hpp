// SPDX-License-Identifier: Apache-2.0
//
// Dirichlet heat kernel K(t, ., y) by implicit Euler, and the Green column
// as its time integral truncated at T.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "greenmat/fem.hpp"

namespace greenmat {

/// Nodes 0 = t_0 < t_1 < ... < t_M. Steps grow geometrically from t_1 by
/// `ratio` until they reach dt_max, then stay uniform.
struct TimeGrid {
  std::vector<double> t;
  double t1 = 0.0;
  double ratio = 1.3;
  double dt_max = 0.0;
  std::vector<double> extra;  ///< nodes inserted on top of the pattern

  static TimeGrid graded(double t1, double ratio, double dt_max, double T);
  /// Regenerates the nodes up to T, keeping inserted nodes; the prefix
  /// below the old T is unchanged.
  void extend_to(double T);
  /// Inserts a node at s if it is not one already.
  void insert_node(double s);
  double T() const { return t.back(); }
  std::size_t steps() const { return t.size() - 1; }
  /// Step size of step n (from t[n-1] to t[n]).
  double dt(std::size_t n) const { return t[n] - t[n - 1]; }
};

/// Default grid for mesh size h and domain constant gamma: t_1 = h^2/8,
/// ratio 1.3, dt_max = 1 / (16 gamma).
TimeGrid default_grid(double h, double gamma, double T);

/// Factorizations of (M + dt A) cached by dt; safe to share between threads.
class ParabolicStepper {
 public:
  explicit ParabolicStepper(const EllipticProblem& problem);
  /// One implicit Euler step: (M + dt A) u_next = M u (free dofs).
  Vector step(const Vector& u, double dt) const;
  /// L2 projection of a load vector: M u = b.
  Vector project(const Vector& b) const;
  const EllipticProblem& problem() const { return *problem_; }

 private:
  const LinearSolver& factor(double dt) const;
  const EllipticProblem* problem_;
  LinearSolver mass_solver_;
  mutable std::mutex mu_;
  mutable std::map<double, std::unique_ptr<LinearSolver>> cache_;
};

Vector parabolic_step(const ParabolicStepper& stepper, const Vector& u, double dt);

/// K(t, ., y): one nodal field per source component.
struct KernelSlice {
  double t = 0.0;
  std::vector<Vector> values;  ///< free dofs
  double l2_norm = 0.0;        ///< integral of |K|^2 (Frobenius, all components)
};

enum class TimeRule { right_endpoint, trapezoid };

/// Running time integral of slices. The right-endpoint rule is the one
/// consistent with implicit Euler: it telescopes to A^{-1}(M u_0 - M u_N).
class TimeAccumulator {
 public:
  TimeAccumulator(int n, Eigen::Index size, TimeRule rule) : rule_(rule), sum_(static_cast<std::size_t>(n), Vector::Zero(size)) {}
  void add(const KernelSlice& prev, const KernelSlice& cur);
  const std::vector<Vector>& sum() const { return sum_; }

 private:
  TimeRule rule_;
  std::vector<Vector> sum_;
};

/// Integral of stored slices over their time span.
std::vector<Vector> accumulate_time_integral(const std::vector<KernelSlice>& slices,
                                             TimeRule rule = TimeRule::right_endpoint);

/// T with A exp(-2 lambda gamma T) / (2 lambda gamma) <= epsilon.
double truncation_time(double lambda, double gamma, double A, double epsilon);

/// Tail prefactor from the measured L2 norm at the probe time t_p = d_y^2/4,
/// through local boundedness on a ball of radius d_y/2:
///   A = ||K(t_p)||_{L2} exp(2 lambda gamma t_p) / (sqrt(pi) d_y/2).
double tail_prefactor(double l2_norm_squared, double t_probe, double d_y, double lambda, double gamma);

struct HeatKernelOptions {
  double epsilon = 1e-6;
  /// If > 0, run to this time instead of deriving T from epsilon.
  double fixed_T = 0.0;
  TimeRule rule = TimeRule::right_endpoint;
  /// Fit C in |K| <= C max(sqrt t, |x-y|)^-2 on sampled points.
  bool fit_pointwise = true;
  /// Called for every slice including t = 0.
  std::function<void(const KernelSlice&)> observer;
};

struct HeatKernelRun {
  std::vector<double> times;
  std::vector<double> l2_norms;  ///< integral of |K|^2 per node (index 0 is the projected delta)
  double mass_t1 = 0.0;          ///< integral of K_{11}(t_1, ., y)
  double T = 0.0;
  double A = 0.0;
  double pointwise_C = 0.0;
  TimeGrid grid;
  GreenColumn green;  ///< route = parabolic
  std::vector<Vector> last;  ///< K(T, ., y), free dofs
};

/// Runs the heat kernel with source y. The grid is extended on the fly to
/// the truncation time derived from the probe norm at t = d_y^2/4 unless
/// options.fixed_T is set.
HeatKernelRun heat_kernel_column(const ParabolicStepper& stepper, Point y, double d_y,
                                 TimeGrid grid, double gamma, const HeatKernelOptions& options);

/// Integral over the domain of a nodal scalar field (P1 exact).
double integrate(const Mesh& mesh, const Vector& nodal_scalar);

}  // namespace greenmat
