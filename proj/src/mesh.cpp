// SPDX-License-Identifier: Apache-2.0
#include "greenmat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "delaunay.hpp"
#include "greenmat/error.hpp"

namespace greenmat {

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * orient(vertices[static_cast<std::size_t>(tri[0])],
                      vertices[static_cast<std::size_t>(tri[1])],
                      vertices[static_cast<std::size_t>(tri[2])]);
}

Point Mesh::centroid(std::size_t t) const {
  const auto& tri = triangles[t];
  return (1.0 / 3.0) * (vertices[static_cast<std::size_t>(tri[0])] +
                        vertices[static_cast<std::size_t>(tri[1])] +
                        vertices[static_cast<std::size_t>(tri[2])]);
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

std::function<double(Point)> graded_sizing(double h, double grading, double h_max,
                                           std::vector<Point> focus, double focus_radius) {
  return [=, focus = std::move(focus)](Point p) {
    double d = kInf;
    for (const Point& f : focus) d = std::min(d, distance(p, f));
    if (focus.empty()) d = 0.0;
    return std::min(h_max, h + grading * std::max(0.0, d - focus_radius));
  };
}

Mesh triangulate(const Domain& domain, double h) {
  MeshOptions o;
  o.h = h;
  return triangulate(domain, o);
}

Mesh triangulate(const Domain& domain, const MeshOptions& opt) {
  const double h = opt.h;
  if (!(h > 0)) throw MeshError("mesh size h must be positive");
  if (domain.loops().empty()) throw MeshError("cannot mesh an empty domain");
  double width = domain.width();
  for (const auto& loop : domain.loops()) width = std::min(width, polygon_width(loop));
  if (!(h < width / 4.0)) {
    std::ostringstream os;
    os << "mesh size h=" << h << " must be below width/4=" << width / 4.0;
    throw MeshError(os.str());
  }
  std::function<double(Point)> size = [&](Point p) {
    return opt.sizing ? std::max(h, opt.sizing(p)) : h;
  };

  const Rect bb = domain.bounding_box();
  detail::Triangulator tri(bb, [&](Point p) { return domain.contains(p); });
  const auto segs = domain.segments();

  // Boundary vertices, then subdivision points, then segments.
  for (const auto& loop : domain.loops()) {
    std::vector<int> ids;
    for (const Point& p : loop) ids.push_back(tri.insert(p, true));
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point a = loop[i], b = loop[(i + 1) % n];
      // Recursive bisection to the local size.
      std::vector<double> cuts{0.0, 1.0};
      for (std::size_t k = 0; k + 1 < cuts.size();) {
        const double s0 = cuts[k], s1 = cuts[k + 1];
        const Point m = a + (0.5 * (s0 + s1)) * (b - a);
        if ((s1 - s0) * distance(a, b) > size(m)) {
          cuts.insert(cuts.begin() + static_cast<std::ptrdiff_t>(k) + 1, 0.5 * (s0 + s1));
        } else {
          ++k;
        }
      }
      int prev = ids[i];
      for (std::size_t k = 1; k + 1 < cuts.size(); ++k) {
        const int v = tri.insert(a + cuts[k] * (b - a), true);
        tri.add_segment(prev, v);
        prev = v;
      }
      tri.add_segment(prev, ids[(i + 1) % n]);
    }
  }

  if (opt.lattice_seeds) {
    // Level-k lattices (spacing 2^k * a) are sub-lattices of level 0, so
    // the seed set is nested and depends only on the sizing function.
    const int max_level = opt.sizing ? 12 : 0;
    const int hint = -1;
    for (int level = 0; level <= max_level; ++level) {
      const double a = 0.97 * h * std::ldexp(1.0, level);
      const double dy = a * std::sqrt(3.0) / 2.0;
      const long j0 = static_cast<long>(std::floor(bb.ymin / dy)) - 1;
      const long j1 = static_cast<long>(std::ceil(bb.ymax / dy)) + 1;
      const long i0 = static_cast<long>(std::floor(bb.xmin / a)) - 1;
      const long i1 = static_cast<long>(std::ceil(bb.xmax / a)) + 1;
      if (j1 - j0 < 2 || i1 - i0 < 2) break;
      for (long j = j0; j <= j1; ++j) {
        for (long i = i0; i <= i1; ++i) {
          const Point p{(static_cast<double>(i) + ((j & 1) ? 0.5 : 0.0)) * a,
                        static_cast<double>(j) * dy};
          if (!bb.contains(p)) continue;
          if (opt.sizing) {
            const double ratio = size(p) / h;
            const int lv = static_cast<int>(std::floor(std::log2(ratio * (1.0 + 1e-9))));
            if (std::min(lv, max_level) != level) continue;
          }
          if (!domain.contains(p)) continue;
          bool near = false;
          for (const auto& s : segs)
            if (point_segment_distance(p, s.a, s.b) < 0.7 * a) {
              near = true;
              break;
            }
          if (near) continue;
          tri.insert(p, false, hint);
        }
      }
    }
  }

  tri.conform();
  tri.refine(opt.min_angle_deg, size, opt.max_vertices);

  Mesh mesh;
  mesh.h = h;
  const auto& pts = tri.points();
  std::vector<int> remap(pts.size(), -1);
  for (const auto& T : tri.triangles()) {
    if (!T.alive || !T.inside) continue;
    std::array<int, 3> t{};
    for (int k = 0; k < 3; ++k) {
      const auto v = static_cast<std::size_t>(T.v[static_cast<std::size_t>(k)]);
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(pts[v]);
        mesh.boundary_mask.push_back(tri.is_boundary_vertex(static_cast<int>(v)));
      }
      t[static_cast<std::size_t>(k)] = remap[v];
    }
    mesh.triangles.push_back(t);
  }
  mesh.cell_region.assign(mesh.triangles.size(), 0);

  const double target = domain.polygon_area();
  const double got = mesh.total_area();
  if (std::abs(got - target) > 1e-8 * target) {
    std::ostringstream os;
    os.precision(17);
    os << "triangulation area " << got << " does not match domain area " << target;
    throw MeshError(os.str());
  }
  return mesh;
}

void assign_regions(Mesh& mesh, const RegionMap& regions) {
  mesh.cell_region.resize(mesh.triangles.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    mesh.cell_region[t] = regions(mesh.centroid(t));
}

MeshQuality measure_quality(const Mesh& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.num_triangles = mesh.triangles.size();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tr = mesh.triangles[t];
    std::array<Point, 3> p{};
    for (int k = 0; k < 3; ++k)
      p[static_cast<std::size_t>(k)] = mesh.vertices[static_cast<std::size_t>(tr[static_cast<std::size_t>(k)])];
    for (int k = 0; k < 3; ++k) {
      const Point a = p[static_cast<std::size_t>(k)];
      const Point b = p[static_cast<std::size_t>((k + 1) % 3)];
      const Point c = p[static_cast<std::size_t>((k + 2) % 3)];
      q.max_edge = std::max(q.max_edge, distance(a, b));
      const double ang = std::atan2(std::abs(cross(b - a, c - a)), dot(b - a, c - a));
      q.min_angle_deg = std::min(q.min_angle_deg, ang * 180.0 / std::numbers::pi);
    }
    q.total_area += mesh.triangle_area(t);
  }
  return q;
}

MeshLocator::MeshLocator(const Mesh& mesh) : mesh_(&mesh) {
  box_ = {kInf, -kInf, kInf, -kInf};
  for (const Point& p : mesh.vertices) {
    box_.xmin = std::min(box_.xmin, p.x);
    box_.xmax = std::max(box_.xmax, p.x);
    box_.ymin = std::min(box_.ymin, p.y);
    box_.ymax = std::max(box_.ymax, p.y);
  }
  const double n = std::max<double>(1.0, static_cast<double>(mesh.triangles.size()) / 2.0);
  const double aspect = std::max(box_.width(), 1e-300) / std::max(box_.height(), 1e-300);
  nx_ = std::max(1, static_cast<int>(std::sqrt(n * aspect)));
  ny_ = std::max(1, static_cast<int>(n / nx_));
  cells_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
    for (int v : mesh.triangles[t]) {
      const Point& p = mesh.vertices[static_cast<std::size_t>(v)];
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    auto cx = [&](double x) {
      return std::clamp(static_cast<int>((x - box_.xmin) / box_.width() * nx_), 0, nx_ - 1);
    };
    auto cy = [&](double y) {
      return std::clamp(static_cast<int>((y - box_.ymin) / box_.height() * ny_), 0, ny_ - 1);
    };
    for (int j = cy(y0); j <= cy(y1); ++j)
      for (int i = cx(x0); i <= cx(x1); ++i)
        cells_[static_cast<std::size_t>(j * nx_ + i)].push_back(static_cast<int>(t));
  }
}

Location MeshLocator::locate(Point p) const {
  Location best;
  if (!(p.x >= box_.xmin && p.x <= box_.xmax && p.y >= box_.ymin && p.y <= box_.ymax))
    return best;
  const int i = std::clamp(static_cast<int>((p.x - box_.xmin) / box_.width() * nx_), 0, nx_ - 1);
  const int j = std::clamp(static_cast<int>((p.y - box_.ymin) / box_.height() * ny_), 0, ny_ - 1);
  double best_min = -1e-12;
  for (int t : cells_[static_cast<std::size_t>(j * nx_ + i)]) {
    const auto& tr = mesh_->triangles[static_cast<std::size_t>(t)];
    const Point& a = mesh_->vertices[static_cast<std::size_t>(tr[0])];
    const Point& b = mesh_->vertices[static_cast<std::size_t>(tr[1])];
    const Point& c = mesh_->vertices[static_cast<std::size_t>(tr[2])];
    const double det = orient(a, b, c);
    const double l0 = orient(p, b, c) / det;
    const double l1 = orient(a, p, c) / det;
    const double l2 = 1.0 - l0 - l1;
    const double m = std::min({l0, l1, l2});
    if (m > best_min) {
      best_min = m;
      best.triangle = t;
      best.bary = {l0, l1, l2};
    }
  }
  return best;
}

void export_mesh(const Mesh& mesh, const std::string& vertex_path,
                 const std::string& triangle_path) {
  std::ofstream vo(vertex_path);
  if (!vo) throw Error("cannot write '" + vertex_path + "'");
  vo << std::setprecision(17) << std::scientific;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    vo << mesh.vertices[v].x << ' ' << mesh.vertices[v].y << ' '
       << (mesh.boundary_mask[v] ? 1 : 0) << '\n';
  std::ofstream to(triangle_path);
  if (!to) throw Error("cannot write '" + triangle_path + "'");
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    to << mesh.triangles[t][0] << ' ' << mesh.triangles[t][1] << ' ' << mesh.triangles[t][2]
       << ' ' << mesh.cell_region[t] << '\n';
}

Mesh import_mesh(const std::string& vertex_path, const std::string& triangle_path) {
  Mesh m;
  std::ifstream vi(vertex_path);
  if (!vi) throw Error("cannot read '" + vertex_path + "'");
  double x, y;
  int b;
  while (vi >> x >> y >> b) {
    m.vertices.push_back({x, y});
    m.boundary_mask.push_back(b != 0);
  }
  std::ifstream ti(triangle_path);
  if (!ti) throw Error("cannot read '" + triangle_path + "'");
  int a, c, d, r;
  while (ti >> a >> c >> d >> r) {
    m.triangles.push_back({a, c, d});
    m.cell_region.push_back(r);
  }
  return m;
}

}  // namespace greenmat
