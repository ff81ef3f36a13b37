// SPDX-License-Identifier: Apache-2.0
//
// Incremental Delaunay triangulation (Bowyer-Watson) with conforming
// boundary segments and circumcenter refinement. Internal to the mesher.
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "greenmat/geometry.hpp"

namespace greenmat::detail {

class Triangulator {
 public:
  struct Tri {
    std::array<int, 3> v{};
    std::array<int, 3> nb{-1, -1, -1};  // neighbor across the edge opposite v[i]
    bool alive = false;
    bool inside = false;
    std::uint32_t gen = 0;
  };

  Triangulator(const Rect& extent, std::function<bool(Point)> inside_test);

  /// Inserts p and returns its vertex index.
  int insert(Point p, bool on_boundary, int hint = -1);

  /// Registers the boundary edge (a, b) as a segment to be kept conforming.
  void add_segment(int a, int b);
  /// Splits encroached or missing segments until every segment is a
  /// Delaunay edge with an empty diametral circle.
  void conform();

  /// Circumcenter refinement driven by a minimum angle and a sizing function.
  void refine(double min_angle_deg, const std::function<double(Point)>& size,
              std::size_t max_vertices);

  const std::vector<Point>& points() const { return pts_; }
  const std::vector<Tri>& triangles() const { return tris_; }
  bool is_boundary_vertex(int v) const { return on_boundary_[static_cast<std::size_t>(v)]; }
  bool is_super(int v) const { return v < 3; }

 private:
  int locate(Point p, int hint) const;
  void build_cavity(Point p, int start);
  int new_tri(int a, int b, int c);
  void kill_tri(int t);
  bool incircle(int t, Point p) const;
  int find_edge(int a, int b, int* side) const;
  bool segment_ok(int a, int b) const;
  void split_segment(int a, int b);
  void drain_segments();
  bool is_bad(int t) const;
  Point steiner_point(int t) const;
  void classify(int t);
  void validate(Point p) const;

  static std::uint64_t key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  }

  std::vector<Point> pts_;
  std::vector<bool> on_boundary_;
  std::vector<int> vtri_;
  std::vector<Tri> tris_;
  std::vector<int> free_;
  std::function<bool(Point)> inside_test_;

  std::unordered_map<std::uint64_t, std::pair<int, int>> segments_;
  std::deque<std::pair<int, int>> seg_queue_;

  // refinement state
  bool refining_ = false;
  double cos2_min_ = 0.0;
  double offcenter_angle_ = 0.0;
  const std::function<double(Point)>* size_ = nullptr;
  std::deque<std::pair<int, std::uint32_t>> bad_queue_;

  // scratch
  std::vector<int> cavity_;
  std::vector<char> in_cavity_;
  std::vector<std::array<int, 3>> boundary_;  // (tri, edge index, outside neighbor)
  std::vector<int> created_;
  int last_ = 0;
};

}  // namespace greenmat::detail
