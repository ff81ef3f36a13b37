// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace greenmat {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Point&, const Point&) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Twice the signed area of (a, b, c); positive for counter-clockwise order.
inline double orient(Point a, Point b, Point c) { return cross(b - a, c - a); }

double point_segment_distance(Point p, Point a, Point b);

struct Rect {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(Point p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
};

struct BoundarySegment {
  Point a;
  Point b;
  /// False for walls introduced only to truncate an unbounded domain.
  bool physical = true;
};

enum class DomainKind { polygon, graph };

/// Sampled Lipschitz profile of a graph domain {x2 > phi(x1)}.
struct GraphProfile {
  std::vector<double> s;
  std::vector<double> phi;
  double lipschitz = 0.0;
  Rect box;

  /// Piecewise-linear interpolation of the samples; clamps outside the range.
  double operator()(double s_query) const;
  /// Largest |phi(s_i) - phi(s_j)| / |s_i - s_j| over all sample pairs.
  double measured_slope() const;
};

/// A 2D region bounded by polygonal loops. Unbounded domains (strips, graph
/// domains) are represented by a truncated polygon whose truncation walls
/// are flagged non-physical, while `area` and `width` keep the values of
/// the untruncated domain.
class Domain {
 public:
  Domain() = default;

  static Domain polygon(std::vector<Point> vertices);
  static Domain rectangle(const Rect& r);
  static Domain disk(Point center, double radius, int n_segments);
  /// Infinite horizontal strip {0 < x2 < width}, truncated to |x1| <= half_length.
  static Domain strip(double width, double half_length);

  DomainKind kind() const { return kind_; }
  const std::vector<std::vector<Point>>& loops() const { return loops_; }
  const std::vector<std::vector<bool>>& physical() const { return physical_; }
  const std::optional<GraphProfile>& graph() const { return graph_; }

  double area() const { return area_; }
  double width() const { return width_; }
  /// Area of the polygon actually meshed (the truncated region for
  /// unbounded domains).
  double polygon_area() const;
  Rect bounding_box() const;

  std::vector<BoundarySegment> segments() const;

  /// Strict interior test (even-odd rule across all loops).
  bool contains(Point p) const;
  /// Interior or within `tol` of the boundary.
  bool contains_closed(Point p, double tol = 1e-12) const;

  /// Distance to the closest truncation wall; +inf for bounded domains.
  double dist_to_artificial(Point p) const;

  // Mutators used by builders and the file reader.
  void set_area(double a) { area_ = a; }
  void set_width(double w) { width_ = w; }

 private:
  friend Domain build_graph_domain(const std::vector<double>&, const std::vector<double>&,
                                   double, const Rect&);
  DomainKind kind_ = DomainKind::polygon;
  std::vector<std::vector<Point>> loops_;
  std::vector<std::vector<bool>> physical_;
  std::optional<GraphProfile> graph_;
  double area_ = kInf;
  double width_ = kInf;
};

/// Width of the region spanned by `vertices`, measured over the edge-normal
/// directions. Exact for convex polygons, an upper bound otherwise.
double polygon_width(const std::vector<Point>& vertices);
double signed_area(const std::vector<Point>& loop);

/// max(|Omega|^-1, width^-2). Throws DomainError if both are infinite.
double compute_gamma(const Domain& domain);

/// Exact distance from x to the physical boundary. Throws if x lies
/// outside the closed domain.
double dist_to_boundary(Point x, const Domain& domain);

struct GraphFoot {
  Point foot;           ///< (x1, phi(x1))
  double vertical = 0;  ///< |x - foot|
  double distance = 0;  ///< dist(x, boundary)
  bool sandwich_ok = false;  ///< d <= |x - foot| <= sqrt(1 + M^2) d
};

/// Vertical projection onto the graph together with the comparability
/// check between the vertical distance and the true distance.
GraphFoot graph_foot(Point x, const Domain& domain);

/// Builds the truncated domain above the sampled graph. The graph polyline
/// is physical; the two side walls and the lid are artificial.
Domain build_graph_domain(const std::vector<double>& s, const std::vector<double>& phi,
                          double lipschitz, const Rect& box);

/// Reads a domain description. Format, one record per line ('#' comments):
///   kind polygon|graph
///   vertex <x> <y>              (polygon)
///   lipschitz <M>               (graph)
///   box <xmin> <xmax> <ymin> <ymax>   (graph)
///   sample <s> <phi>            (graph)
///   area <value|inf>   width <value|inf>   (optional overrides)
Domain read_domain(std::istream& in);
Domain read_domain_file(const std::string& path);

}  // namespace greenmat
