// SPDX-License-Identifier: Apache-2.0
//
// Conforming P1 discretization of  -D_a(A^{ab}_{ij} D_b u^j) = f^i  with
// homogeneous Dirichlet data. Unknowns live on free (non-Dirichlet)
// vertices; dof index = free_index * N + component.
#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "greenmat/coefficients.hpp"
#include "greenmat/mesh.hpp"

namespace greenmat {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vector = Eigen::VectorXd;

struct DofMap {
  int n = 1;
  std::vector<int> free_index;  ///< per vertex; -1 on Dirichlet vertices
  int num_free = 0;

  static DofMap build(const Mesh& mesh, int n);
  int size() const { return num_free * n; }
  int dof(int vertex, int comp) const {
    const int f = free_index[static_cast<std::size_t>(vertex)];
    return f < 0 ? -1 : f * n + comp;
  }
};

/// Nodal field on all vertices (N values per vertex, zero on Dirichlet
/// vertices), expanded from or restricted to the free dofs.
Vector expand(const DofMap& dofs, const Vector& free_values, std::size_t num_vertices);
Vector restrict_free(const DofMap& dofs, const Vector& nodal);

struct StiffnessOperator {
  SparseMatrix matrix;  ///< represents -L on free dofs (positive for elliptic fields)
  bool symmetric = false;
  DofMap dofs;
  std::shared_ptr<const Mesh> mesh;
};

/// Exact P1 integration of the bilinear form; the mesh's cell_region picks
/// the block per triangle. Throws MeshError if no vertex is Dirichlet.
StiffnessOperator assemble_stiffness(const std::shared_ptr<const Mesh>& mesh,
                                     const CoefficientField& field);

/// Element matrix of one triangle, (3N) x (3N), rows = test (a, i), cols = trial (b, j).
Eigen::MatrixXd element_stiffness(const std::array<Point, 3>& p, const Block& block);

/// Consistent P1 mass matrix on the free dofs.
SparseMatrix mass_matrix(const Mesh& mesh, const DofMap& dofs);

/// Load vector dual to evaluation of component k at y: P1 interpolation
/// weights of y placed in component k. Throws if y is outside the mesh.
Vector discrete_delta(const Mesh& mesh, const MeshLocator& locator, const DofMap& dofs,
                      Point y, int k);

/// Sparse direct factorization (LDLT if symmetric, LU otherwise) with an
/// iterative fallback (CG / BiCGSTAB) when the direct path fails or misses
/// the tolerance.
class LinearSolver {
 public:
  LinearSolver(const SparseMatrix& a, bool symmetric);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  /// Returns x with ||Ax - b|| <= tol ||b||. Throws SolverError otherwise.
  Vector solve(const Vector& b, double tol = 1e-10) const;
  /// Solves for each column of B.
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b, double tol = 1e-10) const;
  const SparseMatrix& matrix() const { return a_; }
  double last_residual() const { return last_residual_.load(std::memory_order_relaxed); }

 private:
  struct Impl;
  SparseMatrix a_;
  bool symmetric_;
  std::unique_ptr<Impl> impl_;
  mutable std::atomic<double> last_residual_{0.0};  // solves may run concurrently
};

struct SolveResult {
  Vector u;  ///< free dofs
  double relative_residual = 0.0;
};

SolveResult solve_dirichlet(const StiffnessOperator& op, const Vector& rhs, double tol = 1e-10);

enum class Route { direct, parabolic };
std::string to_string(Route r);

/// G(., y) as N columns: values[k] is the nodal field (all vertices) of
/// the solution with source in component k, so G(x_v)_{ik} = values[k](v*N + i).
struct GreenColumn {
  std::shared_ptr<const Mesh> mesh;
  Point y;
  int n = 1;
  std::vector<Vector> values;
  Route route = Route::direct;
  double h = 0.0;
  double tol = 0.0;         ///< solver tolerance (direct route)
  double T = 0.0;           ///< truncation time (parabolic route)
  double epsilon = 0.0;     ///< tail tolerance (parabolic route)
  double d_y = 0.0;

  double at(std::size_t vertex, int i, int k) const {
    return values[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(vertex) * n + i);
  }
  /// Frobenius norm of the N x N matrix at a vertex.
  double norm_at(std::size_t vertex) const;
};

/// Bundles mesh, field, assembled operator and factorization for repeated solves.
class EllipticProblem {
 public:
  EllipticProblem(std::shared_ptr<const Mesh> mesh, CoefficientField field, double tol = 1e-10);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const CoefficientField& field() const { return field_; }
  const StiffnessOperator& stiffness() const { return op_; }
  const DofMap& dofs() const { return op_.dofs; }
  const MeshLocator& locator() const { return locator_; }
  const LinearSolver& solver() const { return solver_; }
  const SparseMatrix& mass() const { return mass_; }
  double tol() const { return tol_; }

  Vector delta(Point y, int k) const { return discrete_delta(*mesh_, locator_, op_.dofs, y, k); }

 private:
  std::shared_ptr<const Mesh> mesh_;
  CoefficientField field_;
  StiffnessOperator op_;
  MeshLocator locator_;
  SparseMatrix mass_;
  double tol_;
  LinearSolver solver_;
};

GreenColumn green_column_direct(const EllipticProblem& problem, Point y, double d_y = 0.0);

/// Solves L u = -f with the consistent load M f; f and u are nodal fields.
Vector solve_source(const EllipticProblem& problem, const Vector& f_nodal);

/// Integral of |D phi|^2 by per-triangle constant gradients.
double dirichlet_energy(const Mesh& mesh, int n, const Vector& nodal);
/// Integral of |u|^2 with the consistent mass matrix (all vertices).
double l2_norm_squared(const Mesh& mesh, int n, const Vector& nodal);

/// Per-triangle gradients of the nodal field: grad(t) is 2 x N (row = direction).
std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> triangle_gradients(const Mesh& mesh, int n,
                                                                        const Vector& nodal);

/// Barycentric gradients of a triangle: row a is D psi_a.
Eigen::Matrix<double, 3, 2> shape_gradients(const std::array<Point, 3>& p, double* area);

/// Coordinate-triplet export "row col value" (1-based), 17 significant digits.
void export_matrix_triplets(const SparseMatrix& a, const std::string& path);

}  // namespace greenmat
