// SPDX-License-Identifier: Apache-2.0
#include "delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "greenmat/error.hpp"

namespace greenmat::detail {

namespace {

Point circumcenter(Point a, Point b, Point c) {
  const Point ba = b - a, ca = c - a;
  const double d = 2.0 * cross(ba, ca);
  const double b2 = dot(ba, ba), c2 = dot(ca, ca);
  return {a.x + (ca.y * b2 - ba.y * c2) / d, a.y + (ba.x * c2 - ca.x * b2) / d};
}

}  // namespace

Triangulator::Triangulator(const Rect& extent, std::function<bool(Point)> inside_test)
    : inside_test_(std::move(inside_test)) {
  const double cx = 0.5 * (extent.xmin + extent.xmax);
  const double cy = 0.5 * (extent.ymin + extent.ymax);
  const double r = 50.0 * std::max({extent.width(), extent.height(), 1e-300});
  pts_ = {{cx - 2 * r, cy - r}, {cx + 2 * r, cy - r}, {cx, cy + 2 * r}};
  on_boundary_.assign(3, false);
  vtri_.assign(3, 0);
  new_tri(0, 1, 2);
}

int Triangulator::new_tri(int a, int b, int c) {
  int t;
  if (!free_.empty()) {
    t = free_.back();
    free_.pop_back();
  } else {
    t = static_cast<int>(tris_.size());
    tris_.emplace_back();
    in_cavity_.push_back(0);
  }
  Tri& T = tris_[static_cast<std::size_t>(t)];
  T.v = {a, b, c};
  T.nb = {-1, -1, -1};
  T.alive = true;
  T.inside = false;
  ++T.gen;
  for (int v : T.v) vtri_[static_cast<std::size_t>(v)] = t;
  return t;
}

void Triangulator::kill_tri(int t) {
  tris_[static_cast<std::size_t>(t)].alive = false;
  free_.push_back(t);
}

bool Triangulator::incircle(int t, Point p) const {
  const Tri& T = tris_[static_cast<std::size_t>(t)];
  const Point& a = pts_[static_cast<std::size_t>(T.v[0])];
  const Point& b = pts_[static_cast<std::size_t>(T.v[1])];
  const Point& c = pts_[static_cast<std::size_t>(T.v[2])];
  const long double adx = a.x - static_cast<long double>(p.x), ady = a.y - static_cast<long double>(p.y);
  const long double bdx = b.x - static_cast<long double>(p.x), bdy = b.y - static_cast<long double>(p.y);
  const long double cdx = c.x - static_cast<long double>(p.x), cdy = c.y - static_cast<long double>(p.y);
  const long double det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
                          (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
                          (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
  return det > 0;
}

int Triangulator::locate(Point p, int hint) const {
  int t = (hint >= 0 && tris_[static_cast<std::size_t>(hint)].alive) ? hint : last_;
  if (!tris_[static_cast<std::size_t>(t)].alive) {
    t = 0;
    while (!tris_[static_cast<std::size_t>(t)].alive) ++t;
  }
  // Stochastic visibility walk: terminates in any triangulation, not only
  // in exactly Delaunay ones.
  std::size_t steps = 0;
  std::uint64_t state = 0x9E3779B97F4A7C15ull ^ static_cast<std::uint64_t>(t);
  for (;;) {
    const Tri& T = tris_[static_cast<std::size_t>(t)];
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    const int rot = static_cast<int>((state >> 33) % 3);
    int next = -1;
    bool outside = false;
    for (int k = 0; k < 3; ++k) {
      const int i = (k + rot) % 3;
      const Point& a = pts_[static_cast<std::size_t>(T.v[(i + 1) % 3])];
      const Point& b = pts_[static_cast<std::size_t>(T.v[(i + 2) % 3])];
      // Points within rounding of an edge count as inside, which keeps two
      // neighbors from both rejecting a point on their shared edge.
      const double tol = 1e-13 * (std::abs((b.x - a.x) * (p.y - a.y)) + std::abs((b.y - a.y) * (p.x - a.x)));
      if (orient(a, b, p) < -tol) {
        outside = true;
        if (T.nb[i] >= 0) {
          next = T.nb[i];
          break;
        }
      }
    }
    if (next < 0) {
      if (outside) throw MeshError("point location left the enclosing triangle");
      return t;
    }
    t = next;
    if (++steps > 20 * tris_.size() + 100) throw MeshError("point location did not terminate");
  }
}

void Triangulator::build_cavity(Point p, int start) {
  for (int c : cavity_) in_cavity_[static_cast<std::size_t>(c)] = 0;
  cavity_.clear();
  cavity_.push_back(start);
  in_cavity_[static_cast<std::size_t>(start)] = 1;
  for (std::size_t k = 0; k < cavity_.size(); ++k) {
    const Tri& T = tris_[static_cast<std::size_t>(cavity_[k])];
    for (int nb : T.nb) {
      if (nb < 0 || in_cavity_[static_cast<std::size_t>(nb)]) continue;
      if (incircle(nb, p)) {
        in_cavity_[static_cast<std::size_t>(nb)] = 1;
        cavity_.push_back(nb);
      }
    }
  }
  // Enforce star-shapedness with respect to p; round-off in the incircle
  // test can otherwise admit triangles that p cannot see.
  for (bool changed = true; changed;) {
    changed = false;
    boundary_.clear();
    for (int c : cavity_) {
      if (!in_cavity_[static_cast<std::size_t>(c)]) continue;
      const Tri& T = tris_[static_cast<std::size_t>(c)];
      for (int i = 0; i < 3; ++i) {
        const int nb = T.nb[i];
        if (nb >= 0 && in_cavity_[static_cast<std::size_t>(nb)]) continue;
        const Point& a = pts_[static_cast<std::size_t>(T.v[(i + 1) % 3])];
        const Point& b = pts_[static_cast<std::size_t>(T.v[(i + 2) % 3])];
        if (orient(a, b, p) <= 0 && c != start) {
          in_cavity_[static_cast<std::size_t>(c)] = 0;
          changed = true;
          break;
        }
        boundary_.push_back({c, i, nb});
      }
    }
    if (changed) {
      std::erase_if(cavity_, [&](int c) { return !in_cavity_[static_cast<std::size_t>(c)]; });
    }
  }
}

int Triangulator::insert(Point p, bool on_boundary, int hint) {
  const int start = locate(p, hint);
  build_cavity(p, start);
  const int pv = static_cast<int>(pts_.size());
  pts_.push_back(p);
  on_boundary_.push_back(on_boundary);
  vtri_.push_back(-1);

  // Segments touching the cavity must be rechecked after the insertion.
  for (int c : cavity_) {
    const Tri& T = tris_[static_cast<std::size_t>(c)];
    for (int i = 0; i < 3; ++i) {
      const int a = T.v[(i + 1) % 3], b = T.v[(i + 2) % 3];
      if (a < b || T.nb[i] < 0 || !in_cavity_[static_cast<std::size_t>(T.nb[i])]) {
        if (auto it = segments_.find(key(a, b)); it != segments_.end())
          seg_queue_.push_back(it->second);
      }
    }
  }

  created_.clear();
  std::vector<std::array<int, 3>> rim;  // (a, b, outside neighbor)
  rim.reserve(boundary_.size());
  for (const auto& [c, i, nb] : boundary_) {
    const Tri& T = tris_[static_cast<std::size_t>(c)];
    rim.push_back({T.v[(i + 1) % 3], T.v[(i + 2) % 3], nb});
  }
  const std::vector<int> old = cavity_;
  for (int c : old) {
    in_cavity_[static_cast<std::size_t>(c)] = 0;
    kill_tri(c);
  }
  cavity_.clear();

  for (const auto& [a, b, nb] : rim) {
    const int t = new_tri(a, b, pv);
    tris_[static_cast<std::size_t>(t)].nb[2] = nb;
    if (nb >= 0) {
      Tri& N = tris_[static_cast<std::size_t>(nb)];
      for (int j = 0; j < 3; ++j) {
        const int na = N.v[(j + 1) % 3], nbv = N.v[(j + 2) % 3];
        if (na == b && nbv == a) N.nb[j] = t;
      }
    }
    created_.push_back(t);
  }
  // Stitch the fan: (a,b,p) edge opposite a is (b,p) and meets (b,c,p)'s
  // edge opposite b.
  for (int t : created_) {
    Tri& T = tris_[static_cast<std::size_t>(t)];
    const int b = T.v[1];
    for (int u : created_) {
      if (tris_[static_cast<std::size_t>(u)].v[0] == b) {
        T.nb[0] = u;
        tris_[static_cast<std::size_t>(u)].nb[1] = t;
        break;
      }
    }
  }
  for (int t : created_) classify(t);
#ifdef GREENMAT_DEBUG_MESH
  validate(p);
#endif
  last_ = created_.empty() ? last_ : created_.front();
  return pv;
}

void Triangulator::validate(Point p) const {
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    const Tri& T = tris_[t];
    if (!T.alive) continue;
    if (orient(pts_[T.v[0]], pts_[T.v[1]], pts_[T.v[2]]) <= 0)
      throw MeshError("inverted triangle after inserting " + std::to_string(p.x) + "," + std::to_string(p.y));
    for (int i = 0; i < 3; ++i) {
      const int n = T.nb[i];
      if (n < 0) continue;
      const Tri& N = tris_[static_cast<std::size_t>(n)];
      bool ok = N.alive;
      int cnt = 0;
      for (int j = 0; j < 3; ++j) cnt += N.nb[j] == static_cast<int>(t);
      if (!ok || cnt != 1) throw MeshError("broken adjacency after inserting " + std::to_string(p.x) + "," + std::to_string(p.y));
    }
  }
}

void Triangulator::classify(int t) {
  Tri& T = tris_[static_cast<std::size_t>(t)];
  if (is_super(T.v[0]) || is_super(T.v[1]) || is_super(T.v[2])) {
    T.inside = false;
    return;
  }
  const Point c = (1.0 / 3.0) * (pts_[static_cast<std::size_t>(T.v[0])] +
                                 pts_[static_cast<std::size_t>(T.v[1])] +
                                 pts_[static_cast<std::size_t>(T.v[2])]);
  T.inside = inside_test_(c);
  if (refining_ && T.inside && is_bad(t)) bad_queue_.emplace_back(t, T.gen);
}

void Triangulator::add_segment(int a, int b) {
  segments_[key(a, b)] = {a, b};
  seg_queue_.emplace_back(a, b);
}

int Triangulator::find_edge(int a, int b, int* side) const {
  // Walk the fan around a.
  const int start = vtri_[static_cast<std::size_t>(a)];
  int t = start;
  std::size_t guard = 0;
  // Rotate one way, then the other if a hull edge interrupts the walk.
  for (int dir = 0; dir < 2; ++dir) {
    t = start;
    do {
      const Tri& T = tris_[static_cast<std::size_t>(t)];
      int ia = -1;
      for (int i = 0; i < 3; ++i)
        if (T.v[i] == a) ia = i;
      if (ia < 0) return -1;
      for (int i = 0; i < 3; ++i) {
        if (T.v[i] == b) {
          *side = i;
          return t;
        }
      }
      // counter-clockwise around a: cross the edge (a, v[ia+1]) which is
      // opposite v[ia+2].
      const int k = dir == 0 ? (ia + 2) % 3 : (ia + 1) % 3;
      t = T.nb[k];
      if (++guard > 10000) return -1;
    } while (t >= 0 && t != start);
    if (t == start) break;
  }
  return -1;
}

bool Triangulator::segment_ok(int a, int b) const {
  int i = -1;
  const int t = find_edge(a, b, &i);
  if (t < 0) return false;
  const Point& pa = pts_[static_cast<std::size_t>(a)];
  const Point& pb = pts_[static_cast<std::size_t>(b)];
  const Tri& T = tris_[static_cast<std::size_t>(t)];
  // T contains a and b; its third vertex is an apex, and the neighbor across
  // (a, b) holds the other.
  auto apex_encroaches = [&](const Tri& U) {
    for (int v : U.v) {
      if (v == a || v == b) continue;
      const Point& c = pts_[static_cast<std::size_t>(v)];
      if (dot(pa - c, pb - c) < 0) return true;
    }
    return false;
  };
  if (apex_encroaches(T)) return false;
  for (int k = 0; k < 3; ++k) {
    if (T.v[k] != a && T.v[k] != b && T.nb[k] >= 0)
      if (apex_encroaches(tris_[static_cast<std::size_t>(T.nb[k])])) return false;
  }
  return true;
}

void Triangulator::split_segment(int a, int b) {
  auto it = segments_.find(key(a, b));
  if (it == segments_.end()) return;
  segments_.erase(it);
  const Point m = 0.5 * (pts_[static_cast<std::size_t>(a)] + pts_[static_cast<std::size_t>(b)]);
  const int m_id = insert(m, true, vtri_[static_cast<std::size_t>(a)]);
  add_segment(a, m_id);
  add_segment(m_id, b);
}

void Triangulator::drain_segments() {
  while (!seg_queue_.empty()) {
    const auto [a, b] = seg_queue_.front();
    seg_queue_.pop_front();
    if (!segments_.contains(key(a, b))) continue;
    if (!segment_ok(a, b)) split_segment(a, b);
  }
}

void Triangulator::conform() { drain_segments(); }

// Circumcenter, pulled toward the shortest edge when that edge would
// otherwise be left with a needlessly distant new vertex (off-center rule).
Point Triangulator::steiner_point(int t) const {
  const Tri& T = tris_[static_cast<std::size_t>(t)];
  const Point& a = pts_[static_cast<std::size_t>(T.v[0])];
  const Point& b = pts_[static_cast<std::size_t>(T.v[1])];
  const Point& c = pts_[static_cast<std::size_t>(T.v[2])];
  const Point cc = circumcenter(a, b, c);
  const Point g = (1.0 / 3.0) * (a + b + c);
  const double hs = (*size_)(g);
  const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
  if (std::max({la, lb, lc}) > hs) return cc;
  Point p = b, q = c;
  double l = la;
  if (lb < l) {
    p = c;
    q = a;
    l = lb;
  }
  if (lc < l) {
    p = a;
    q = b;
    l = lc;
  }
  const Point m = 0.5 * (p + q);
  const double dc = distance(m, cc);
  const double d = 0.5 * l / std::tan(0.5 * offcenter_angle_);
  if (dc <= d || dc == 0.0) return cc;
  return m + (d / dc) * (cc - m);
}

bool Triangulator::is_bad(int t) const {
  const Tri& T = tris_[static_cast<std::size_t>(t)];
  const Point& a = pts_[static_cast<std::size_t>(T.v[0])];
  const Point& b = pts_[static_cast<std::size_t>(T.v[1])];
  const Point& c = pts_[static_cast<std::size_t>(T.v[2])];
  const double la = dot(b - c, b - c), lb = dot(c - a, c - a), lc = dot(a - b, a - b);
  const double lmax = std::max({la, lb, lc});
  const Point g = (1.0 / 3.0) * (a + b + c);
  const double hs = (*size_)(g);
  if (lmax > hs * hs) return true;
  // The smallest angle is opposite the shortest edge.
  double p = la, q = lb, r = lc;  // r shortest
  if (p < r) std::swap(p, r);
  if (q < r) std::swap(q, r);
  const double cosr = (p + q - r) / (2.0 * std::sqrt(p * q));
  return cosr > 0 && cosr * cosr > cos2_min_;
}

void Triangulator::refine(double min_angle_deg, const std::function<double(Point)>& size,
                          std::size_t max_vertices) {
  refining_ = true;
  size_ = &size;
  const double cmin = std::cos(min_angle_deg * std::numbers::pi / 180.0);
  cos2_min_ = cmin * cmin;
  offcenter_angle_ = (min_angle_deg + 5.0) * std::numbers::pi / 180.0;
  drain_segments();
  for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
    const Tri& T = tris_[static_cast<std::size_t>(t)];
    if (T.alive && T.inside && is_bad(t)) bad_queue_.emplace_back(t, T.gen);
  }
  while (!bad_queue_.empty()) {
    if (pts_.size() > max_vertices)
      throw MeshError("mesh refinement exceeded the vertex budget of " +
                      std::to_string(max_vertices));
    const auto [t, gen] = bad_queue_.front();
    bad_queue_.pop_front();
    const Tri& T = tris_[static_cast<std::size_t>(t)];
    if (!T.alive || T.gen != gen || !T.inside) continue;
    const Point c = steiner_point(t);
    const int loc = locate(c, t);
    build_cavity(c, loc);
    std::vector<std::pair<int, int>> hit;
    for (int cv : cavity_) {
      const Tri& U = tris_[static_cast<std::size_t>(cv)];
      for (int i = 0; i < 3; ++i) {
        const int a = U.v[(i + 1) % 3], b = U.v[(i + 2) % 3];
        if (auto it = segments_.find(key(a, b)); it != segments_.end()) {
          const Point& pa = pts_[static_cast<std::size_t>(a)];
          const Point& pb = pts_[static_cast<std::size_t>(b)];
          if (dot(pa - c, pb - c) < 0) hit.push_back(it->second);
        }
      }
    }
    for (int cv : cavity_) in_cavity_[static_cast<std::size_t>(cv)] = 0;
    cavity_.clear();
    const bool loc_inside = tris_[static_cast<std::size_t>(loc)].inside;
    if (!hit.empty() || !loc_inside) {
      if (hit.empty()) continue;  // circumcenter escaped without encroaching: skip
      for (const auto& [a, b] : hit) split_segment(a, b);
      drain_segments();
      if (tris_[static_cast<std::size_t>(t)].alive && tris_[static_cast<std::size_t>(t)].gen == gen)
        bad_queue_.emplace_back(t, gen);
      continue;
    }
    insert(c, false, loc);
    drain_segments();
  }
  refining_ = false;
  size_ = nullptr;
}

}  // namespace greenmat::detail
