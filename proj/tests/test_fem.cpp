// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "greenmat/error.hpp"
#include "greenmat/fem.hpp"
#include "greenmat/oracles.hpp"

using namespace greenmat;

namespace {

std::shared_ptr<const Mesh> make_mesh(const Domain& d, double h, const CoefficientField& f) {
  auto m = std::make_shared<Mesh>(triangulate(d, h));
  assign_regions(*m, f);
  return m;
}

double max_abs(SparseMatrix a) {
  a.makeCompressed();
  return a.nonZeros() ? a.coeffs().cwiseAbs().maxCoeff() : 0.0;
}

Domain unit_disk(double h) {
  return Domain::disk({0, 0}, 1.0, static_cast<int>(std::ceil(2 * std::numbers::pi / h)));
}

}  // namespace

TEST(ElementStiffness, UnitRightTriangleLaplacian) {
  const Eigen::MatrixXd k = element_stiffness({Point{0, 0}, Point{1, 0}, Point{0, 1}}, Block::identity(1));
  Eigen::Matrix3d expect;
  expect << 1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5;
  EXPECT_LE((k - expect).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE(k.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Assembly, SymmetricFieldGivesSymmetricMatrix) {
  const CoefficientField f = random_spd(4, 0.5, 8.0, 3, {-1, 1, -1, 1}, 2);
  const auto m = make_mesh(Domain::rectangle({-1, 1, -1, 1}), 0.2, f);
  const StiffnessOperator op = assemble_stiffness(m, f);
  EXPECT_TRUE(op.symmetric);
  const SparseMatrix d = SparseMatrix(op.matrix.transpose()) - op.matrix;
  EXPECT_LE(max_abs(d), 1e-14 * max_abs(op.matrix));
}

TEST(Assembly, CheckerboardEqualsWeightedLaplacian) {
  const Rect box{0, 1, 0, 1};
  const CoefficientField f = checkerboard(1.0, 10.0, 4, box);
  const auto m = make_mesh(Domain::rectangle(box), 0.05, f);
  const StiffnessOperator op = assemble_stiffness(m, f);
  // independent scalar-weighted assembly
  const DofMap dofs = DofMap::build(*m, 1);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t t = 0; t < m->num_triangles(); ++t) {
    const auto& tr = m->triangles[t];
    const double w = m->cell_region[t] == 1 ? 10.0 : 1.0;
    std::array<Point, 3> p{m->vertices[tr[0]], m->vertices[tr[1]], m->vertices[tr[2]]};
    double area = 0;
    const auto g = shape_gradients(p, &area);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int r = dofs.dof(tr[a], 0), c = dofs.dof(tr[b], 0);
        if (r >= 0 && c >= 0) trip.emplace_back(r, c, w * area * g.row(a).dot(g.row(b)));
      }
  }
  SparseMatrix ref(dofs.size(), dofs.size());
  ref.setFromTriplets(trip.begin(), trip.end());
  EXPECT_LE(max_abs(SparseMatrix(ref - op.matrix)), 1e-12);
}

TEST(Assembly, RejectsEmptyDirichletSet) {
  const CoefficientField f = laplace();
  auto m = std::make_shared<Mesh>(triangulate(Domain::rectangle({0, 1, 0, 1}), 0.2));
  assign_regions(*m, f);
  std::fill(m->boundary_mask.begin(), m->boundary_mask.end(), false);
  EXPECT_THROW(assemble_stiffness(m, f), MeshError);
}

TEST(DiscreteDelta, VertexCentroidAndPartitionOfUnity) {
  const CoefficientField f = laplace(2);
  const auto m = make_mesh(Domain::rectangle({0, 1, 0, 1}), 0.1, f);
  const DofMap dofs = DofMap::build(*m, 2);
  const MeshLocator loc(*m);
  int v = 0;
  while (m->boundary_mask[static_cast<std::size_t>(v)]) ++v;
  const Vector dv = discrete_delta(*m, loc, dofs, m->vertices[static_cast<std::size_t>(v)], 1);
  EXPECT_NEAR(dv(dofs.dof(v, 1)), 1.0, 1e-12);
  EXPECT_NEAR(dv.sum(), 1.0, 1e-12);

  std::size_t t = 0;
  for (; t < m->num_triangles(); ++t) {
    const auto& tr = m->triangles[t];
    if (!m->boundary_mask[tr[0]] && !m->boundary_mask[tr[1]] && !m->boundary_mask[tr[2]]) break;
  }
  const Vector dc = discrete_delta(*m, loc, dofs, m->centroid(t), 0);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(dc(dofs.dof(m->triangles[t][a], 0)), 1.0 / 3.0, 1e-12);
  // pairing with the constant-1 test function
  EXPECT_NEAR(dc.sum(), 1.0, 1e-14);
  EXPECT_THROW(discrete_delta(*m, loc, dofs, {2.0, 0.5}, 0), MeshError);
  EXPECT_THROW(discrete_delta(*m, loc, dofs, {0.0, 0.5}, 0), MeshError);
}

TEST(SolveDirichlet, ZeroRhsAndResidualContract) {
  const CoefficientField f = checkerboard(1.0, 10.0, 4, {0, 1, 0, 1});
  const auto m = make_mesh(Domain::rectangle({0, 1, 0, 1}), 0.05, f);
  const StiffnessOperator op = assemble_stiffness(m, f);
  const SolveResult z = solve_dirichlet(op, Vector::Zero(op.dofs.size()), 1e-10);
  EXPECT_EQ(z.u.cwiseAbs().maxCoeff(), 0.0);
  Vector b = Vector::Random(op.dofs.size());
  const SolveResult r = solve_dirichlet(op, b, 1e-10);
  EXPECT_LE(r.relative_residual, 1e-10);
  EXPECT_LE((op.matrix * r.u - b).norm() / b.norm(), 1e-10);
}

TEST(SolveDirichlet, ManufacturedSolutionConvergesAtSecondOrder) {
  auto l2_error = [](double h) {
    const CoefficientField f = laplace();
    const EllipticProblem p(make_mesh(Domain::rectangle({0, 1, 0, 1}), h, f), f);
    const Mesh& m = p.mesh();
    const double pi = std::numbers::pi;
    auto exact = [pi](Point x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
    Vector rhs(static_cast<Eigen::Index>(m.num_vertices()));
    for (std::size_t v = 0; v < m.num_vertices(); ++v) rhs(v) = 2 * pi * pi * exact(m.vertices[v]);
    const Vector u = solve_source(p, rhs);
    // edge-midpoint rule, exact for quadratics
    double e2 = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const auto& tr = m.triangles[t];
      for (int a = 0; a < 3; ++a) {
        const int i = tr[a], j = tr[(a + 1) % 3];
        const Point mid = 0.5 * (m.vertices[i] + m.vertices[j]);
        const double d = 0.5 * (u(i) + u(j)) - exact(mid);
        e2 += m.triangle_area(t) / 3.0 * d * d;
      }
    }
    return std::sqrt(e2);
  };
  const double ratio = l2_error(0.05) / l2_error(0.025);
  EXPECT_GE(ratio, 3.5);
  EXPECT_LE(ratio, 4.5);
}

TEST(GreenDirect, DiskOracleOffCenter) {
  const double h = 0.04;
  const CoefficientField f = laplace();
  const EllipticProblem p(make_mesh(unit_disk(h), h, f), f);
  const Point y{0.3, 0.0};
  const GreenColumn g = green_column_direct(p, y);
  double err = 0, ref = 0;
  for (std::size_t v = 0; v < p.mesh().num_vertices(); ++v) {
    const Point x = p.mesh().vertices[v];
    if (distance(x, y) < 4 * h || 1.0 - norm(x) < 4 * h) continue;
    const double o = oracle_green(OracleGeometry::disk, x, y);
    err = std::max(err, std::abs(g.at(v, 0, 0) - o));
    ref = std::max(ref, std::abs(o));
  }
  EXPECT_LE(err / ref, 0.02);
}

TEST(GreenDirect, SymmetricFieldSwapsSourceAndTarget) {
  const CoefficientField f = checkerboard(1.0, 10.0, 4, {-1, 1, -1, 1});
  const EllipticProblem p(make_mesh(unit_disk(0.08), 0.08, f), f);
  const Mesh& m = p.mesh();
  std::vector<int> free;
  for (std::size_t v = 0; v < m.num_vertices(); ++v)
    if (!m.boundary_mask[v]) free.push_back(static_cast<int>(v));
  const int i = free[free.size() / 3], j = free[2 * free.size() / 3];
  const GreenColumn gi = green_column_direct(p, m.vertices[i]);
  const GreenColumn gj = green_column_direct(p, m.vertices[j]);
  EXPECT_NEAR(gi.at(j, 0, 0), gj.at(i, 0, 0), 1e-10);
}

TEST(GreenDirect, DecoupledSystemHasNoCrossTalk) {
  const CoefficientField f = laplace(2);
  const EllipticProblem p(make_mesh(unit_disk(0.08), 0.08, f), f);
  const GreenColumn g = green_column_direct(p, {0.2, 0.1});
  for (std::size_t v = 0; v < p.mesh().num_vertices(); ++v) {
    EXPECT_LE(std::abs(g.at(v, 0, 1)), 1e-12);
    EXPECT_LE(std::abs(g.at(v, 1, 0)), 1e-12);
    EXPECT_NEAR(g.at(v, 0, 0), g.at(v, 1, 1), 1e-10);
  }
}

TEST(GreenDirect, DiscreteAdjointIdentity) {
  const Rect box{-1, 1, -1, 1};
  CoefficientField f = random_spd(21, 0.6, 6.0, 3, box, 2);
  std::map<int, Block> blocks = f.blocks();
  for (auto& [id, b] : blocks) {
    b.a[0][1](0, 1) += 0.25;
    b.a[1][0](1, 0) -= 0.25;
    b.a[0][0](0, 1) += 0.1;
  }
  CoefficientField g(2, blocks, f.regions());
  validate_ellipticity(g);
  const CoefficientField gt = transpose_field(g);
  auto mesh = make_mesh(unit_disk(0.1), 0.1, g);
  const EllipticProblem p(mesh, g), pt(mesh, gt);
  EXPECT_FALSE(p.stiffness().symmetric);
  const Mesh& m = *mesh;
  const Point yi = m.vertices[40], yj = m.vertices[90];
  ASSERT_FALSE(m.boundary_mask[40] || m.boundary_mask[90]);
  const GreenColumn a = green_column_direct(p, yj);   // G(., y_j)
  const GreenColumn b = green_column_direct(pt, yi);  // tG(., y_i)
  for (int k = 0; k < 2; ++k)
    for (int l = 0; l < 2; ++l) EXPECT_NEAR(a.at(40, k, l), b.at(90, l, k), 1e-10);
  (void)yi;
}

TEST(Coercivity, RandomTestFieldsRespectLambda) {
  const Rect box{-1, 1, -1, 1};
  CoefficientField f = skew(0.4, 4, box);
  const double lambda = validate_ellipticity(f).lambda;
  const auto m = make_mesh(Domain::rectangle(box), 0.1, f);
  const StiffnessOperator op = assemble_stiffness(m, f);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Vector phi(op.dofs.size());
    for (Eigen::Index i = 0; i < phi.size(); ++i) phi(i) = nd(rng);
    phi /= std::sqrt(dirichlet_energy(*m, 1, expand(op.dofs, phi, m->num_vertices())));
    const double form = phi.dot(op.matrix * phi);
    const double energy = dirichlet_energy(*m, 1, expand(op.dofs, phi, m->num_vertices()));
    EXPECT_GE(form, lambda * energy - 1e-12);
  }
}

TEST(GreenDirect, GalerkinOrthogonality) {
  const CoefficientField f = checkerboard(1.0, 10.0, 4, {-1, 1, -1, 1});
  const EllipticProblem p(make_mesh(unit_disk(0.06), 0.06, f), f);
  const Point y{0.1, -0.2};
  const GreenColumn g = green_column_direct(p, y);
  const Vector r = p.stiffness().matrix * restrict_free(p.dofs(), g.values[0]) - p.delta(y, 0);
  EXPECT_LE(r.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SolveSource, ZeroLinearityAndRadialSolution) {
  const double h = 0.02;
  const CoefficientField f = laplace();
  const EllipticProblem p(make_mesh(unit_disk(h), h, f), f);
  const Mesh& m = p.mesh();
  const Eigen::Index nv = static_cast<Eigen::Index>(m.num_vertices());
  EXPECT_EQ(solve_source(p, Vector::Zero(nv)).cwiseAbs().maxCoeff(), 0.0);
  const Vector one = Vector::Ones(nv);
  const Vector u = solve_source(p, one);
  const MeshLocator& loc = p.locator();
  const Location l = loc.locate({0, 0});
  double u0 = 0;
  for (int a = 0; a < 3; ++a) u0 += l.bary[a] * u(m.triangles[l.triangle][a]);
  EXPECT_NEAR(u0, 0.25, 0.0025);
  Vector f2(nv);
  for (Eigen::Index v = 0; v < nv; ++v) f2(v) = m.vertices[v].x;
  const Vector lin = solve_source(p, one + f2) - u - solve_source(p, f2);
  EXPECT_LE(lin.cwiseAbs().maxCoeff(), 1e-10);
}
