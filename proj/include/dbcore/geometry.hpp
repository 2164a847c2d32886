#pragma once

#include <vector>

#include "dbcore/types.hpp"

namespace dbcore {

// Simple polygon, at least 3 vertices, normalized to counter-clockwise
// (positive shoelace) order at construction. Construction throws
// std::invalid_argument on fewer than 3 vertices, consecutive duplicate
// vertices, zero area, or self-intersection (crossing, touching, or
// fold-back spikes).
class Polygon {
 public:
  explicit Polygon(std::vector<Vec2> vertices);

  const std::vector<Vec2>& vertices() const { return verts_; }
  int size() const { return static_cast<int>(verts_.size()); }
  const Vec2& operator[](int i) const { return verts_[static_cast<size_t>(i)]; }

 private:
  std::vector<Vec2> verts_;
};

// Positive area (shoelace).
double area(const Polygon& poly);

double perimeter(const Polygon& poly);

// Signed shoelace area of a raw vertex loop (positive = counter-clockwise).
double signed_area(const std::vector<Vec2>& loop);

// Inward shrink distance D = A * (1 - r^2) / L for shrink ratio r in (0, 1).
double shrink_offset(const Polygon& poly, double shrink_ratio);

// Outward dilation distance D' = A * r' / L for unclip ratio r' > 0.
double unclip_offset(const Polygon& poly, double unclip_ratio);

// Offsets the polygon boundary by delta (positive = outward, negative =
// inward) using per-edge parallel translation with miter joins (miter limit
// 2*|delta|, bevel beyond it), then splits the raw loop at self-intersections
// and keeps the counter-clockwise pieces that lie at the full offset depth.
// delta == 0 returns the input unchanged. A shrink past collapse returns an
// empty list.
std::vector<Polygon> offset(const Polygon& poly, double delta);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

// Distance from p to the polygon boundary (min over edges).
double distance_to_boundary(const Polygon& poly, const Vec2& p);

// Even-odd containment; points on the boundary count as inside.
bool contains(const Polygon& poly, const Vec2& p);

}  // namespace dbcore
