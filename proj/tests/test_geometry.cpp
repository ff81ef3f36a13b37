// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "greenmat/error.hpp"
#include "greenmat/geometry.hpp"

using namespace greenmat;

TEST(ComputeGamma, UnitSquare) {
  const Domain sq = Domain::rectangle({0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(sq.area(), 1.0);
  EXPECT_DOUBLE_EQ(sq.width(), 1.0);
  EXPECT_DOUBLE_EQ(compute_gamma(sq), 1.0);
}

TEST(ComputeGamma, InfiniteStrip) {
  const Domain strip = Domain::strip(2.0, 20.0);
  EXPECT_TRUE(std::isinf(strip.area()));
  EXPECT_DOUBLE_EQ(compute_gamma(strip), 0.25);
}

TEST(ComputeGamma, UnitDisk) {
  const Domain disk = Domain::disk({0, 0}, 1.0, 2048);
  EXPECT_NEAR(disk.area(), std::numbers::pi, 1e-5);
  EXPECT_NEAR(disk.width(), 2.0, 1e-5);
  EXPECT_NEAR(compute_gamma(disk), 1.0 / std::numbers::pi, 1e-6);
}

TEST(ComputeGamma, RejectsUnboundedInBothSenses) {
  const Domain g = build_graph_domain({-8, 8}, {0, 0}, 0.0, {-8, 8, 0, 8});
  EXPECT_THROW(compute_gamma(g), DomainError);
}

TEST(ComputeGamma, InvariantUnderRigidMotion) {
  std::vector<Point> tri{{0, 0}, {3, 0.5}, {1, 2}};
  const double g0 = compute_gamma(Domain::polygon(tri));
  const double th = 0.7312;
  std::vector<Point> moved;
  for (Point p : tri)
    moved.push_back({std::cos(th) * p.x - std::sin(th) * p.y + 5.5,
                     std::sin(th) * p.x + std::cos(th) * p.y - 2.25});
  EXPECT_NEAR(compute_gamma(Domain::polygon(moved)), g0, 1e-12);
}

TEST(DistToBoundary, Examples) {
  const Domain disk = Domain::disk({0, 0}, 1.0, 4096);
  EXPECT_NEAR(dist_to_boundary({0, 0}, disk), 1.0, 1e-6);
  const Domain sq = Domain::rectangle({0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(dist_to_boundary({0.1, 0.5}, sq), 0.1);
  EXPECT_THROW(dist_to_boundary({1.5, 0.5}, sq), DomainError);
}

TEST(DistToBoundary, FlatGraphFoot) {
  const Domain g = build_graph_domain({-8, 0, 8}, {0, 0, 0}, 0.0, {-8, 8, 0, 8});
  EXPECT_DOUBLE_EQ(dist_to_boundary({0, 2}, g), 2.0);
  const GraphFoot f = graph_foot({0, 2}, g);
  EXPECT_DOUBLE_EQ(f.vertical, 2.0);
  EXPECT_TRUE(f.sandwich_ok);
  // The lid is artificial: it does not count toward d_x.
  EXPECT_DOUBLE_EQ(dist_to_boundary({0, 7.5}, g), 7.5);
  EXPECT_DOUBLE_EQ(g.dist_to_artificial({0, 7.5}), 0.5);
}

TEST(DistToBoundary, BoundedByVertexDistances) {
  const Domain d = Domain::polygon({{0, 0}, {4, 0}, {4, 1}, {2, 3}, {0, 1}});
  std::mt19937_64 rng(7);
  int checked = 0;
  while (checked < 500) {
    const Point p{4.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53,
                  3.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53};
    if (!d.contains(p)) continue;
    const double dx = dist_to_boundary(p, d);
    for (const Point& v : d.loops()[0]) EXPECT_LE(dx, distance(p, v) + 1e-15);
    ++checked;
  }
}

TEST(GraphDomain, WedgeAndSine) {
  std::vector<double> s, phi;
  for (int i = 0; i <= 80; ++i) {
    s.push_back(-4.0 + 0.1 * i);
    phi.push_back(std::abs(s.back()));
  }
  const Domain wedge = build_graph_domain(s, phi, 1.0, {-4, 4, 0, 6});
  EXPECT_EQ(wedge.kind(), DomainKind::graph);
  EXPECT_NEAR(wedge.graph()->measured_slope(), 1.0, 1e-12);

  s.clear();
  phi.clear();
  for (int i = 0; i <= 400; ++i) {
    s.push_back(-10.0 + 0.05 * i);
    phi.push_back(0.5 * std::sin(s.back()));
  }
  const Domain sine = build_graph_domain(s, phi, 0.5, {-10, 10, -1, 6});
  EXPECT_LE(sine.graph()->measured_slope(), 0.5);
  EXPECT_GT(sine.graph()->measured_slope(), 0.49);

  // Comparability of vertical and true distance at interior points.
  const double M = 0.5;
  for (double x1 = -6; x1 <= 6; x1 += 0.37)
    for (double x2 = 0.7; x2 < 5; x2 += 0.41) {
      const GraphFoot f = graph_foot({x1, x2}, sine);
      EXPECT_TRUE(f.sandwich_ok);
      EXPECT_LE(f.distance, f.vertical + 1e-12);
      EXPECT_LE(f.vertical, std::sqrt(1 + M * M) * f.distance + 1e-12);
    }
}

TEST(GraphDomain, RejectsLipschitzViolation) {
  try {
    build_graph_domain({-1, 0, 1}, {0, 2, 0}, 1.0, {-1, 1, 0, 4});
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("violated by samples"), std::string::npos);
  }
}

TEST(DomainFile, PolygonAndGraph) {
  std::istringstream poly("# square\nkind polygon\nvertex 0 0\nvertex 2 0\nvertex 2 1\nvertex 0 1\n");
  const Domain d = read_domain(poly);
  EXPECT_DOUBLE_EQ(d.area(), 2.0);
  EXPECT_DOUBLE_EQ(d.width(), 1.0);

  std::istringstream graph(
      "kind graph\nlipschitz 0\nbox -8 8 0 8\nsample -8 0\nsample 8 0\n");
  const Domain g = read_domain(graph);
  EXPECT_EQ(g.kind(), DomainKind::graph);
  EXPECT_TRUE(std::isinf(g.width()));

  std::istringstream bad("kind polygon\nvertex 0\n");
  EXPECT_THROW(read_domain(bad), DomainError);
}
