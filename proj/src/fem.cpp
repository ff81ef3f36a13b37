// SPDX-License-Identifier: Apache-2.0
#include "greenmat/fem.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "greenmat/error.hpp"

namespace greenmat {

DofMap DofMap::build(const Mesh& mesh, int n) {
  DofMap d;
  d.n = n;
  d.free_index.assign(mesh.num_vertices(), -1);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    if (!mesh.boundary_mask[v]) d.free_index[v] = d.num_free++;
  return d;
}

Vector expand(const DofMap& dofs, const Vector& free_values, std::size_t num_vertices) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(num_vertices) * dofs.n);
  for (std::size_t v = 0; v < num_vertices; ++v) {
    const int f = dofs.free_index[v];
    if (f < 0) continue;
    for (int c = 0; c < dofs.n; ++c)
      out(static_cast<Eigen::Index>(v) * dofs.n + c) = free_values(f * dofs.n + c);
  }
  return out;
}

Vector restrict_free(const DofMap& dofs, const Vector& nodal) {
  Vector out(dofs.size());
  for (std::size_t v = 0; v < dofs.free_index.size(); ++v) {
    const int f = dofs.free_index[v];
    if (f < 0) continue;
    for (int c = 0; c < dofs.n; ++c) out(f * dofs.n + c) = nodal(static_cast<Eigen::Index>(v) * dofs.n + c);
  }
  return out;
}

Eigen::Matrix<double, 3, 2> shape_gradients(const std::array<Point, 3>& p, double* area) {
  const double det = orient(p[0], p[1], p[2]);
  Eigen::Matrix<double, 3, 2> g;
  for (int a = 0; a < 3; ++a) {
    const Point& q1 = p[static_cast<std::size_t>((a + 1) % 3)];
    const Point& q2 = p[static_cast<std::size_t>((a + 2) % 3)];
    g(a, 0) = (q1.y - q2.y) / det;
    g(a, 1) = (q2.x - q1.x) / det;
  }
  if (area) *area = 0.5 * det;
  return g;
}

namespace {

std::array<Point, 3> corners(const Mesh& m, std::size_t t) {
  const auto& tr = m.triangles[t];
  return {m.vertices[static_cast<std::size_t>(tr[0])], m.vertices[static_cast<std::size_t>(tr[1])],
          m.vertices[static_cast<std::size_t>(tr[2])]};
}

}  // namespace

Eigen::MatrixXd element_stiffness(const std::array<Point, 3>& p, const Block& block) {
  const int N = block.n();
  double area = 0.0;
  const auto g = shape_gradients(p, &area);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(3 * N, 3 * N);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be)
          k.block(a * N, b * N, N, N) += (area * g(b, be) * g(a, al)) * block.a[al][be];
  return k;
}

StiffnessOperator assemble_stiffness(const std::shared_ptr<const Mesh>& mesh,
                                     const CoefficientField& field) {
  const Mesh& m = *mesh;
  if (m.cell_region.size() != m.num_triangles())
    throw MeshError("mesh has no region ids; assign regions before assembly");
  StiffnessOperator op;
  op.mesh = mesh;
  op.dofs = DofMap::build(m, field.n());
  if (op.dofs.num_free == static_cast<int>(m.num_vertices()))
    throw MeshError("empty Dirichlet set: pure Neumann problems are not supported");
  const int N = field.n();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(m.num_triangles() * 9 * static_cast<std::size_t>(N * N));
  bool symmetric = true;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const Block& b = field.sample_block(m.cell_region[t]);
    const Eigen::MatrixXd k = element_stiffness(corners(m, t), b);
    const auto& tr = m.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < N; ++i) {
        const int r = op.dofs.dof(tr[static_cast<std::size_t>(a)], i);
        if (r < 0) continue;
        for (int bb = 0; bb < 3; ++bb)
          for (int j = 0; j < N; ++j) {
            const int c = op.dofs.dof(tr[static_cast<std::size_t>(bb)], j);
            if (c >= 0) trip.emplace_back(r, c, k(a * N + i, bb * N + j));
          }
      }
  }
  for (const auto& [id, b] : field.blocks()) symmetric = symmetric && b.is_symmetric();
  op.matrix.resize(op.dofs.size(), op.dofs.size());
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  op.symmetric = symmetric;
  return op;
}

SparseMatrix mass_matrix(const Mesh& m, const DofMap& dofs) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.triangle_area(t);
    const auto& tr = m.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int c = 0; c < dofs.n; ++c) {
          const int r = dofs.dof(tr[static_cast<std::size_t>(a)], c);
          const int s = dofs.dof(tr[static_cast<std::size_t>(b)], c);
          if (r >= 0 && s >= 0) trip.emplace_back(r, s, area / 12.0 * (a == b ? 2.0 : 1.0));
        }
  }
  SparseMatrix mm(dofs.size(), dofs.size());
  mm.setFromTriplets(trip.begin(), trip.end());
  mm.makeCompressed();
  return mm;
}

Vector discrete_delta(const Mesh& mesh, const MeshLocator& locator, const DofMap& dofs, Point y,
                      int k) {
  if (k < 0 || k >= dofs.n) throw MeshError("source component out of range");
  const Location loc = locator.locate(y);
  if (loc.triangle < 0) throw MeshError("source point lies outside the mesh");
  Vector d = Vector::Zero(dofs.size());
  double free_weight = 0.0;
  const auto& tr = mesh.triangles[static_cast<std::size_t>(loc.triangle)];
  for (int a = 0; a < 3; ++a) {
    const int r = dofs.dof(tr[static_cast<std::size_t>(a)], k);
    if (r < 0) continue;
    d(r) += loc.bary[static_cast<std::size_t>(a)];
    free_weight += loc.bary[static_cast<std::size_t>(a)];
  }
  if (free_weight < 1e-12) throw MeshError("source point lies on the Dirichlet boundary");
  return d;
}

struct LinearSolver::Impl {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool direct_ok = false;
};

LinearSolver::LinearSolver(const SparseMatrix& a, bool symmetric)
    : a_(a), symmetric_(symmetric), impl_(std::make_unique<Impl>()) {
  if (symmetric_) {
    impl_->ldlt.compute(a_);
    impl_->direct_ok = impl_->ldlt.info() == Eigen::Success;
  } else {
    impl_->lu.analyzePattern(a_);
    impl_->lu.factorize(a_);
    impl_->direct_ok = impl_->lu.info() == Eigen::Success;
  }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&& o) noexcept
    : a_(std::move(o.a_)), symmetric_(o.symmetric_), impl_(std::move(o.impl_)), last_residual_(o.last_residual()) {}
LinearSolver& LinearSolver::operator=(LinearSolver&& o) noexcept {
  a_ = std::move(o.a_);
  symmetric_ = o.symmetric_;
  impl_ = std::move(o.impl_);
  last_residual_ = o.last_residual();
  return *this;
}

Vector LinearSolver::solve(const Vector& b, double tol) const {
  const double bn = b.norm();
  if (bn == 0.0) {
    last_residual_ = 0.0;
    return Vector::Zero(b.size());
  }
  std::vector<double> history;
  Vector x = Vector::Zero(b.size());
  auto rel = [&](const Vector& v) { return (a_ * v - b).norm() / bn; };
  if (impl_->direct_ok) {
    auto apply = [&](const Vector& r) -> Vector {
      return symmetric_ ? Vector(impl_->ldlt.solve(r)) : Vector(impl_->lu.solve(r));
    };
    x = apply(b);
    history.push_back(rel(x));
    // a few steps of iterative refinement
    for (int it = 0; it < 3 && history.back() > tol; ++it) {
      x += apply(b - a_ * x);
      history.push_back(rel(x));
    }
    if (history.back() <= tol) {
      last_residual_ = history.back();
      return x;
    }
  }
  if (symmetric_) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                             Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(tol * 0.5);
    cg.setMaxIterations(20 * static_cast<Eigen::Index>(b.size()) + 1000);
    cg.compute(a_);
    x = cg.solveWithGuess(b, x);
  } else {
    Eigen::BiCGSTAB<SparseMatrix, Eigen::IncompleteLUT<double>> bi;
    bi.setTolerance(tol * 0.5);
    bi.setMaxIterations(20 * static_cast<Eigen::Index>(b.size()) + 1000);
    bi.compute(a_);
    x = bi.solveWithGuess(b, x);
  }
  history.push_back(rel(x));
  if (history.back() > tol)
    throw SolverError("linear solve did not reach relative residual " + std::to_string(tol),
                      history);
  last_residual_ = history.back();
  return x;
}

Eigen::MatrixXd LinearSolver::solve(const Eigen::MatrixXd& b, double tol) const {
  Eigen::MatrixXd x(b.rows(), b.cols());
  for (Eigen::Index c = 0; c < b.cols(); ++c) x.col(c) = solve(Vector(b.col(c)), tol);
  return x;
}

SolveResult solve_dirichlet(const StiffnessOperator& op, const Vector& rhs, double tol) {
  if (!(tol > 0)) throw SolverError("tolerance must be positive", {});
  const LinearSolver s(op.matrix, op.symmetric);
  SolveResult r;
  r.u = s.solve(rhs, tol);
  r.relative_residual = s.last_residual();
  return r;
}

std::string to_string(Route r) { return r == Route::direct ? "direct" : "parabolic"; }

double GreenColumn::norm_at(std::size_t vertex) const {
  double s = 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) s += at(vertex, i, k) * at(vertex, i, k);
  return std::sqrt(s);
}

EllipticProblem::EllipticProblem(std::shared_ptr<const Mesh> mesh, CoefficientField field,
                                 double tol)
    : mesh_(std::move(mesh)),
      field_(std::move(field)),
      op_(assemble_stiffness(mesh_, field_)),
      locator_(*mesh_),
      mass_(mass_matrix(*mesh_, op_.dofs)),
      tol_(tol),
      solver_(op_.matrix, op_.symmetric) {}

GreenColumn green_column_direct(const EllipticProblem& p, Point y, double d_y) {
  GreenColumn g;
  g.mesh = p.mesh_ptr();
  g.y = y;
  g.n = p.field().n();
  g.route = Route::direct;
  g.h = p.mesh().h;
  g.tol = p.tol();
  g.d_y = d_y;
  for (int k = 0; k < g.n; ++k)
    g.values.push_back(expand(p.dofs(), p.solver().solve(p.delta(y, k), p.tol()), p.mesh().num_vertices()));
  return g;
}

namespace {

// Consistent load (M f)_a restricted to free dofs, f given on all vertices.
Vector consistent_load(const Mesh& m, const DofMap& dofs, const Vector& f) {
  Vector b = Vector::Zero(dofs.size());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.triangle_area(t);
    const auto& tr = m.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < dofs.n; ++c) {
        const int r = dofs.dof(tr[static_cast<std::size_t>(a)], c);
        if (r < 0) continue;
        for (int bb = 0; bb < 3; ++bb)
          b(r) += area / 12.0 * (a == bb ? 2.0 : 1.0) *
                  f(static_cast<Eigen::Index>(tr[static_cast<std::size_t>(bb)]) * dofs.n + c);
      }
  }
  return b;
}

}  // namespace

Vector solve_source(const EllipticProblem& p, const Vector& f) {
  const Vector load = consistent_load(p.mesh(), p.dofs(), f);
  return expand(p.dofs(), p.solver().solve(load, p.tol()), p.mesh().num_vertices());
}

std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> triangle_gradients(const Mesh& m, int n,
                                                                        const Vector& u) {
  std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> out(m.num_triangles());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto g = shape_gradients(corners(m, t), nullptr);
    Eigen::Matrix<double, 2, Eigen::Dynamic> d = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, n);
    const auto& tr = m.triangles[t];
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < n; ++c) {
        const double v = u(static_cast<Eigen::Index>(tr[static_cast<std::size_t>(a)]) * n + c);
        d(0, c) += v * g(a, 0);
        d(1, c) += v * g(a, 1);
      }
    out[t] = std::move(d);
  }
  return out;
}

double dirichlet_energy(const Mesh& m, int n, const Vector& u) {
  const auto grads = triangle_gradients(m, n, u);
  double s = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) s += m.triangle_area(t) * grads[t].squaredNorm();
  return s;
}

double l2_norm_squared(const Mesh& m, int n, const Vector& u) {
  double s = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const double area = m.triangle_area(t);
    const auto& tr = m.triangles[t];
    for (int c = 0; c < n; ++c)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          s += area / 12.0 * (a == b ? 2.0 : 1.0) *
               u(static_cast<Eigen::Index>(tr[static_cast<std::size_t>(a)]) * n + c) *
               u(static_cast<Eigen::Index>(tr[static_cast<std::size_t>(b)]) * n + c);
  }
  return s;
}

void export_matrix_triplets(const SparseMatrix& a, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << std::scientific << std::setprecision(16);
  for (int k = 0; k < a.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(a, k); it; ++it)
      f << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

}  // namespace greenmat
