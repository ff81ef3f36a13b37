// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "greenmat/geometry.hpp"

namespace greenmat {

/// Maps a point (a triangle centroid) to a coefficient region id.
using RegionMap = std::function<int(Point)>;

/// Conforming P1 triangulation. Triangles are counter-clockwise.
struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<bool> boundary_mask;  ///< Dirichlet flag per vertex
  std::vector<int> cell_region;     ///< region id per triangle
  double h = 0.0;                   ///< target (finest) edge length

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  double triangle_area(std::size_t t) const;
  Point centroid(std::size_t t) const;
  double total_area() const;
};

struct MeshOptions {
  /// Finest target edge length; also the lattice spacing scale.
  double h = 0.1;
  /// Local target edge length (>= h). Empty means uniform h.
  std::function<double(Point)> sizing;
  double min_angle_deg = 25.0;
  /// Seed the uniform-size region with an equilateral lattice anchored at the
  /// origin, so overlapping regions of different domains mesh identically.
  bool lattice_seeds = true;
  std::size_t max_vertices = 4'000'000;
};

/// Sizing function h(x) = min(h_max, h + grading * dist(x, focus set)).
std::function<double(Point)> graded_sizing(double h, double grading, double h_max,
                                           std::vector<Point> focus, double focus_radius = 0.0);

Mesh triangulate(const Domain& domain, double h);
Mesh triangulate(const Domain& domain, const MeshOptions& options);

void assign_regions(Mesh& mesh, const RegionMap& regions);

struct MeshQuality {
  double min_angle_deg = 0.0;
  double max_edge = 0.0;
  double total_area = 0.0;
  std::size_t num_triangles = 0;
};
MeshQuality measure_quality(const Mesh& mesh);

/// Point location: triangle containing p and its barycentric coordinates.
struct Location {
  int triangle = -1;
  std::array<double, 3> bary{};
};

/// Uniform-grid bucket index over triangles for repeated point location.
class MeshLocator {
 public:
  explicit MeshLocator(const Mesh& mesh);
  /// Returns triangle = -1 if p is not inside any triangle (tolerance ~1e-12).
  Location locate(Point p) const;

 private:
  const Mesh* mesh_;
  Rect box_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;
};

/// Two plain-text tables: "<x> <y> <boundary>" per vertex and
/// "<v0> <v1> <v2> <region>" per triangle.
void export_mesh(const Mesh& mesh, const std::string& vertex_path,
                 const std::string& triangle_path);
Mesh import_mesh(const std::string& vertex_path, const std::string& triangle_path);

}  // namespace greenmat
