// SPDX-License-Identifier: Apache-2.0
//
// Whole-plane fundamental matrix, renormalized:
//   Gamma(x, y) = int_0^s K(t, x, y) dt + int_s^inf (K(t, x, y) - K(t, x, x)) dt,
// computed on a Dirichlet box [-L, L]^2 standing in for the plane.
#pragma once

#include <memory>
#include <vector>

#include "greenmat/analysis.hpp"
#include "greenmat/parabolic.hpp"

namespace greenmat {

struct FundamentalOptions {
  double box_half_width = 16.0;
  double h = 0.05;          ///< edge length in the core
  double core_radius = 4.5; ///< uniform-h disk around the origin
  double grading = 0.1;     ///< growth of h outside the core
  double h_max = 2.0;
  double split_time = 1.0;
  double epsilon = 1e-3;    ///< tail tolerance on the renormalized integrand
  double max_time = 1e7;
};

/// Gamma(x, .) as a nodal field: values[i] component k is Gamma_{ik}(x, y_v),
/// i.e. the transposed kernel run with source x in component i.
struct FundamentalColumn {
  Point x;
  int n = 1;
  std::vector<Vector> values;
  Eigen::MatrixXd self_integral;  ///< int_s^T K(t, x, x) dt (N x N)
  double T = 0.0;
  double tail_estimate = 0.0;
  double box_half_width = 0.0;
  double split_time = 1.0;
};

struct FundamentalEval {
  Point x, y;
  Eigen::MatrixXd value;
  double box_size = 0.0;
  double split_time = 1.0;
};

class FundamentalSolver {
 public:
  FundamentalSolver(CoefficientField field, const FundamentalOptions& options);

  /// Runs the transposed heat kernel from each source together (one
  /// factorization per step size). Sources must be at least half a box
  /// away from the walls, i.e. |x|_inf <= L/2.
  std::vector<FundamentalColumn> run(const std::vector<Point>& sources) const;

  /// Gamma(x, y) evaluated from a column.
  Eigen::MatrixXd evaluate(const FundamentalColumn& c, Point y) const;

  const Mesh& mesh() const { return problem_->mesh(); }
  const EllipticProblem& transposed_problem() const { return *problem_; }
  const EllipticProblem& problem() const { return *forward_; }
  const MeshLocator& locator() const { return problem_->locator(); }
  const FundamentalOptions& options() const { return opt_; }
  double gamma() const { return gamma_; }

 private:
  FundamentalOptions opt_;
  std::shared_ptr<Mesh> mesh_;
  std::unique_ptr<EllipticProblem> problem_;  // transposed field
  std::unique_ptr<EllipticProblem> forward_;
  std::unique_ptr<ParabolicStepper> stepper_;
  double gamma_ = 0.0;
};

FundamentalEval renormalized_fundamental(const FundamentalSolver& solver, Point x, Point y);

/// Sup over squares of each scale of (1/|Q|) int_Q |f - f_Q|, from
/// samples on a uniform grid. Squares are the dyadic tiling of
/// [origin, origin + side]^2 at sides side / 2^j, j = 0..levels-1; squares
/// whose closure contains `exclude` are dropped with a warning.
/// Pass: regression slope of sup against ln(scale) <= 0.1.
struct SampleGrid {
  Point origin;
  double spacing = 0.0;
  int n = 0;  ///< points per side; point (i, j) at origin + spacing (i + 1/2, j + 1/2)
  std::vector<double> values;  ///< row-major, j * n + i
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]; }
};
SampleGrid sample_grid(Point origin, double side, int n, const std::function<double(Point)>& f);
EstimateReport mean_oscillation_profile(const SampleGrid& grid, int levels, Point exclude);

/// T f(x) = sum_v Gamma(x, y_v) (M f)_v for each column's x. f is nodal on
/// the solver's mesh (N values per vertex) and must integrate to zero
/// componentwise within `mean_tol`.
std::vector<Eigen::VectorXd> apply_fundamental(const FundamentalSolver& solver,
                                               const std::vector<FundamentalColumn>& columns,
                                               const Vector& f_nodal, double mean_tol = 1e-10);

/// Single-evolution route: with int f = 0 the K(t, x, x) term drops out and
/// T f = int_0^T u(t) dt for u_t = L u, u(0) = f. Returns the nodal field
/// and the residual of the weak form A (T f) - M f on free dofs, relative
/// to |M f|.
struct ApplyResult {
  Vector tf;  ///< nodal
  double weak_residual = 0.0;
  double T = 0.0;
};
ApplyResult apply_fundamental_evolution(const FundamentalSolver& solver, const Vector& f_nodal,
                                        double mean_tol = 1e-10);

}  // namespace greenmat
