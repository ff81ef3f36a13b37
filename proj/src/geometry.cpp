// SPDX-License-Identifier: Apache-2.0
#include "greenmat/geometry.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <sstream>

#include "greenmat/error.hpp"

namespace greenmat {

double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double s = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + s * ab);
}

double GraphProfile::operator()(double q) const {
  if (s.empty()) return 0.0;
  if (q <= s.front()) return phi.front();
  if (q >= s.back()) return phi.back();
  const auto it = std::upper_bound(s.begin(), s.end(), q);
  const auto i = static_cast<std::size_t>(it - s.begin());
  const double w = (q - s[i - 1]) / (s[i] - s[i - 1]);
  return (1.0 - w) * phi[i - 1] + w * phi[i];
}

double GraphProfile::measured_slope() const {
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      m = std::max(m, std::abs(phi[i] - phi[j]) / std::abs(s[i] - s[j]));
  return m;
}

double signed_area(const std::vector<Point>& loop) {
  double a = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i)
    a += cross(loop[i], loop[(i + 1) % loop.size()]);
  return 0.5 * a;
}

double polygon_width(const std::vector<Point>& v) {
  double best = kInf;
  for (std::size_t e = 0; e < v.size(); ++e) {
    const Point d = v[(e + 1) % v.size()] - v[e];
    const double len = norm(d);
    if (len == 0.0) continue;
    const Point n{-d.y / len, d.x / len};
    double lo = kInf, hi = -kInf;
    for (const Point& p : v) {
      const double t = dot(p, n);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    best = std::min(best, hi - lo);
  }
  return best;
}

namespace {

void check_simple(const std::vector<Point>& loop) {
  const std::size_t n = loop.size();
  if (n < 3) throw DomainError("polygon loop needs at least 3 vertices");
  if (std::abs(signed_area(loop)) == 0.0) throw DomainError("degenerate polygon (zero area)");
  auto proper_cross = [](Point a, Point b, Point c, Point d) {
    const double d1 = orient(a, b, c), d2 = orient(a, b, d);
    const double d3 = orient(c, d, a), d4 = orient(c, d, b);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 &&
           d3 != 0 && d4 != 0;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (loop[i] == loop[(i + 1) % n]) throw DomainError("repeated polygon vertex");
    for (std::size_t j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (proper_cross(loop[i], loop[(i + 1) % n], loop[j], loop[(j + 1) % n]))
        throw DomainError("polygon boundary is self-intersecting");
    }
  }
}

}  // namespace

Domain Domain::polygon(std::vector<Point> vertices) {
  check_simple(vertices);
  if (signed_area(vertices) < 0) std::reverse(vertices.begin(), vertices.end());
  Domain d;
  d.kind_ = DomainKind::polygon;
  d.physical_.emplace_back(vertices.size(), true);
  d.area_ = std::abs(signed_area(vertices));
  d.width_ = polygon_width(vertices);
  d.loops_.push_back(std::move(vertices));
  return d;
}

Domain Domain::rectangle(const Rect& r) {
  return polygon({{r.xmin, r.ymin}, {r.xmax, r.ymin}, {r.xmax, r.ymax}, {r.xmin, r.ymax}});
}

Domain Domain::disk(Point c, double radius, int n_segments) {
  if (radius <= 0 || n_segments < 3) throw DomainError("disk needs radius > 0 and >= 3 segments");
  std::vector<Point> v;
  v.reserve(static_cast<std::size_t>(n_segments));
  for (int k = 0; k < n_segments; ++k) {
    const double th = 2.0 * std::numbers::pi * k / n_segments;
    v.push_back({c.x + radius * std::cos(th), c.y + radius * std::sin(th)});
  }
  return polygon(std::move(v));
}

Domain Domain::strip(double width, double half_length) {
  if (width <= 0 || half_length <= 0) throw DomainError("strip needs positive dimensions");
  Domain d = rectangle({-half_length, half_length, 0.0, width});
  // CCW order: bottom, right end, top, left end.
  d.physical_[0] = {true, false, true, false};
  d.area_ = kInf;
  d.width_ = width;
  return d;
}

double Domain::polygon_area() const {
  double a = 0.0;
  for (const auto& l : loops_) a += signed_area(l);
  return std::abs(a);
}

Rect Domain::bounding_box() const {
  Rect r{kInf, -kInf, kInf, -kInf};
  for (const auto& l : loops_)
    for (const Point& p : l) {
      r.xmin = std::min(r.xmin, p.x);
      r.xmax = std::max(r.xmax, p.x);
      r.ymin = std::min(r.ymin, p.y);
      r.ymax = std::max(r.ymax, p.y);
    }
  return r;
}

std::vector<BoundarySegment> Domain::segments() const {
  std::vector<BoundarySegment> out;
  for (std::size_t l = 0; l < loops_.size(); ++l) {
    const auto& loop = loops_[l];
    for (std::size_t i = 0; i < loop.size(); ++i)
      out.push_back({loop[i], loop[(i + 1) % loop.size()], physical_[l][i]});
  }
  return out;
}

bool Domain::contains(Point p) const {
  bool inside = false;
  for (const auto& loop : loops_) {
    const std::size_t n = loop.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Point a = loop[i], b = loop[j];
      if ((a.y > p.y) != (b.y > p.y)) {
        const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        if (p.x < xc) inside = !inside;
      }
    }
  }
  return inside;
}

bool Domain::contains_closed(Point p, double tol) const {
  if (contains(p)) return true;
  for (const auto& s : segments())
    if (point_segment_distance(p, s.a, s.b) <= tol) return true;
  return false;
}

double Domain::dist_to_artificial(Point p) const {
  double d = kInf;
  for (const auto& s : segments())
    if (!s.physical) d = std::min(d, point_segment_distance(p, s.a, s.b));
  return d;
}

double compute_gamma(const Domain& domain) {
  const double a = domain.area(), w = domain.width();
  if (!std::isfinite(a) && !std::isfinite(w))
    throw DomainError("domain has neither finite area nor finite width; gamma undefined");
  const double inv_area = std::isfinite(a) ? 1.0 / a : 0.0;
  const double inv_w2 = std::isfinite(w) ? 1.0 / (w * w) : 0.0;
  return std::max(inv_area, inv_w2);
}

double dist_to_boundary(Point x, const Domain& domain) {
  const Rect bb = domain.bounding_box();
  const double scale = std::max(bb.width(), bb.height());
  if (!domain.contains_closed(x, 1e-12 * scale)) {
    std::ostringstream os;
    os << "point (" << x.x << ", " << x.y << ") lies outside the domain";
    throw DomainError(os.str());
  }
  double d = kInf;
  for (const auto& s : domain.segments())
    if (s.physical) d = std::min(d, point_segment_distance(x, s.a, s.b));
  return d;
}

GraphFoot graph_foot(Point x, const Domain& domain) {
  if (!domain.graph()) throw DomainError("graph_foot requires a graph domain");
  const GraphProfile& g = *domain.graph();
  GraphFoot f;
  f.distance = dist_to_boundary(x, domain);
  f.foot = {x.x, g(x.x)};
  f.vertical = distance(x, f.foot);
  const double slack = 1e-12 * std::max(1.0, f.vertical);
  f.sandwich_ok = f.distance <= f.vertical + slack &&
                  f.vertical <= std::sqrt(1.0 + g.lipschitz * g.lipschitz) * f.distance + slack;
  return f;
}

Domain build_graph_domain(const std::vector<double>& s, const std::vector<double>& phi,
                          double lipschitz, const Rect& box) {
  if (s.size() != phi.size() || s.size() < 2)
    throw DomainError("graph domain needs at least two (s, phi) samples");
  if (lipschitz < 0) throw DomainError("Lipschitz constant must be nonnegative");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i] > s[i - 1])) throw DomainError("graph samples must be strictly increasing in s");
  if (std::abs(s.front() - box.xmin) > 1e-12 || std::abs(s.back() - box.xmax) > 1e-12)
    throw DomainError("graph samples must span the truncation box in s");
  const double tol = 1e-12 * std::max(1.0, lipschitz);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j) {
      const double slope = std::abs(phi[i] - phi[j]) / (s[j] - s[i]);
      if (slope > lipschitz + tol) {
        std::ostringstream os;
        os.precision(17);
        os << "Lipschitz bound M=" << lipschitz << " violated by samples (" << s[i] << ", "
           << phi[i] << ") and (" << s[j] << ", " << phi[j] << "): slope " << slope;
        throw DomainError(os.str());
      }
    }
  const double top = *std::max_element(phi.begin(), phi.end());
  if (!(box.ymax > top)) throw DomainError("truncation box lid must lie above the graph");

  std::vector<Point> loop;
  std::vector<bool> phys;
  for (std::size_t i = 0; i < s.size(); ++i) {
    loop.push_back({s[i], phi[i]});
    phys.push_back(i + 1 < s.size());
  }
  loop.push_back({box.xmax, box.ymax});
  phys.push_back(false);
  loop.push_back({box.xmin, box.ymax});
  phys.push_back(false);
  // Collinear samples are dropped from the loop only if they coincide.
  check_simple(loop);

  Domain d;
  d.kind_ = DomainKind::graph;
  d.loops_.push_back(std::move(loop));
  d.physical_.push_back(std::move(phys));
  d.graph_ = GraphProfile{s, phi, lipschitz, box};
  d.area_ = kInf;
  d.width_ = kInf;
  return d;
}

namespace {

double parse_real(const std::string& tok) {
  if (tok == "inf" || tok == "+inf") return kInf;
  std::size_t pos = 0;
  double v = std::stod(tok, &pos);
  if (pos != tok.size()) throw DomainError("bad number '" + tok + "' in domain file");
  return v;
}

}  // namespace

Domain read_domain(std::istream& in) {
  std::string kind = "polygon";
  std::vector<Point> verts;
  std::vector<double> s, phi;
  std::optional<double> lip, area, width;
  std::optional<Rect> box;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    auto need = [&](std::size_t n) {
      if (toks.size() != n)
        throw DomainError("domain file line " + std::to_string(lineno) + ": '" + key +
                          "' expects " + std::to_string(n) + " values");
    };
    try {
      if (key == "kind") {
        need(1);
        kind = toks[0];
      } else if (key == "vertex") {
        need(2);
        verts.push_back({parse_real(toks[0]), parse_real(toks[1])});
      } else if (key == "sample") {
        need(2);
        s.push_back(parse_real(toks[0]));
        phi.push_back(parse_real(toks[1]));
      } else if (key == "lipschitz") {
        need(1);
        lip = parse_real(toks[0]);
      } else if (key == "box") {
        need(4);
        box = Rect{parse_real(toks[0]), parse_real(toks[1]), parse_real(toks[2]),
                   parse_real(toks[3])};
      } else if (key == "area") {
        need(1);
        area = parse_real(toks[0]);
      } else if (key == "width") {
        need(1);
        width = parse_real(toks[0]);
      } else {
        throw DomainError("domain file line " + std::to_string(lineno) + ": unknown key '" +
                          key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw DomainError("domain file line " + std::to_string(lineno) + ": malformed number");
    }
  }
  Domain d;
  if (kind == "polygon") {
    d = Domain::polygon(verts);
  } else if (kind == "graph") {
    if (!lip || !box) throw DomainError("graph domain file needs 'lipschitz' and 'box'");
    d = build_graph_domain(s, phi, *lip, *box);
  } else {
    throw DomainError("unknown domain kind '" + kind + "'");
  }
  if (area) d.set_area(*area);
  if (width) d.set_width(*width);
  return d;
}

Domain read_domain_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open domain file '" + path + "'");
  return read_domain(in);
}

}  // namespace greenmat
