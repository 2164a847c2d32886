#include "dbcore/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dbcore {
namespace {

constexpr double kEps = 1e-9;

// Closest distance between two closed segments.
double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const Vec2 u = b - a;
  const Vec2 v = d - c;
  const double denom = cross2(u, v);
  if (std::abs(denom) > 1e-15) {
    const Vec2 w = c - a;
    const double t = cross2(w, v) / denom;
    const double s = cross2(w, u) / denom;
    if (t >= 0.0 && t <= 1.0 && s >= 0.0 && s <= 1.0) return 0.0;
  }
  double best = point_segment_distance(a, c, d);
  best = std::min(best, point_segment_distance(b, c, d));
  best = std::min(best, point_segment_distance(c, a, b));
  return std::min(best, point_segment_distance(d, a, b));
}

void validate_simple(const std::vector<Vec2>& v) {
  const int n = static_cast<int>(v.size());
  // Fold-back spikes: consecutive edges that double back over each other.
  for (int i = 0; i < n; ++i) {
    const Vec2 d0 = v[(i + 1) % n] - v[i];
    const Vec2 d1 = v[(i + 2) % n] - v[(i + 1) % n];
    if (std::abs(cross2(d0, d1)) < kEps && d0.dot(d1) < 0.0)
      throw std::invalid_argument("polygon has a fold-back spike at vertex " +
                                  std::to_string((i + 1) % n));
  }
  // Non-adjacent edges must stay strictly apart (no crossing or touching).
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segment_segment_distance(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) < kEps)
        throw std::invalid_argument("polygon self-intersects between edges " +
                                    std::to_string(i) + " and " + std::to_string(j));
    }
  }
}

struct OffsetEdge {
  Vec2 a, b;  // translated endpoints
  Vec2 dir;   // unit direction of the source edge
};

// Splits a closed loop at self-intersections into simple sub-loops.
std::vector<std::vector<Vec2>> split_loops(const std::vector<Vec2>& raw) {
  const int n = static_cast<int>(raw.size());
  // Crossing points per segment, keyed by the segment parameter.
  std::vector<std::vector<std::pair<double, Vec2>>> cuts(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      const Vec2& a = raw[i];
      const Vec2 u = raw[(i + 1) % n] - a;
      const Vec2& c = raw[j];
      const Vec2 v = raw[(j + 1) % n] - c;
      const double denom = cross2(u, v);
      if (std::abs(denom) < 1e-15) continue;
      const Vec2 w = c - a;
      const double t = cross2(w, v) / denom;
      const double s = cross2(w, u) / denom;
      if (t <= 1e-12 || t >= 1.0 - 1e-12 || s <= 1e-12 || s >= 1.0 - 1e-12) continue;
      const Vec2 p = a + t * u;  // computed once so both copies match bit for bit
      cuts[static_cast<size_t>(i)].push_back({t, p});
      cuts[static_cast<size_t>(j)].push_back({s, p});
    }
  }
  std::vector<Vec2> seq;
  for (int i = 0; i < n; ++i) {
    seq.push_back(raw[i]);
    auto& c = cuts[static_cast<size_t>(i)];
    std::sort(c.begin(), c.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    for (const auto& [t, p] : c) seq.push_back(p);
  }

  // Stack walk: a repeated point closes the loop opened at its first visit.
  std::vector<std::vector<Vec2>> loops;
  std::vector<Vec2> stack;
  for (const Vec2& p : seq) {
    int found = -1;
    for (int k = static_cast<int>(stack.size()) - 1; k >= 0; --k) {
      if ((stack[static_cast<size_t>(k)] - p).norm() < kEps) {
        found = k;
        break;
      }
    }
    if (found < 0) {
      stack.push_back(p);
      continue;
    }
    std::vector<Vec2> loop(stack.begin() + found, stack.end());
    stack.resize(static_cast<size_t>(found) + 1);
    if (loop.size() >= 3) loops.push_back(std::move(loop));
  }
  if (stack.size() >= 3) loops.push_back(std::move(stack));
  return loops;
}

void drop_duplicate_points(std::vector<Vec2>& loop) {
  std::vector<Vec2> out;
  for (const Vec2& p : loop) {
    if (!out.empty() && (out.back() - p).norm() < kEps) continue;
    out.push_back(p);
  }
  while (out.size() > 1 && (out.front() - out.back()).norm() < kEps) out.pop_back();
  loop = std::move(out);
}

}  // namespace

Polygon::Polygon(std::vector<Vec2> vertices) : verts_(std::move(vertices)) {
  const int n = static_cast<int>(verts_.size());
  if (n < 3) throw std::invalid_argument("polygon needs at least 3 vertices");
  for (int i = 0; i < n; ++i) {
    if ((verts_[static_cast<size_t>(i)] - verts_[static_cast<size_t>((i + 1) % n)]).norm() < kEps)
      throw std::invalid_argument("polygon has consecutive duplicate vertices at index " +
                                  std::to_string(i));
  }
  const double sa = signed_area(verts_);
  if (std::abs(sa) < kEps) throw std::invalid_argument("polygon has zero area");
  if (sa < 0.0) std::reverse(verts_.begin() + 1, verts_.end());  // flip to CCW, keep v0 first
  validate_simple(verts_);
}

double signed_area(const std::vector<Vec2>& loop) {
  const int n = static_cast<int>(loop.size());
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vec2& p = loop[static_cast<size_t>(i)];
    const Vec2& q = loop[static_cast<size_t>((i + 1) % n)];
    acc += cross2(p, q);
  }
  return 0.5 * acc;
}

double area(const Polygon& poly) { return signed_area(poly.vertices()); }

double perimeter(const Polygon& poly) {
  const int n = poly.size();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += (poly[(i + 1) % n] - poly[i]).norm();
  return acc;
}

double shrink_offset(const Polygon& poly, double shrink_ratio) {
  if (shrink_ratio <= 0.0 || shrink_ratio >= 1.0)
    throw std::invalid_argument("shrink ratio must lie in (0, 1)");
  return area(poly) * (1.0 - shrink_ratio * shrink_ratio) / perimeter(poly);
}

double unclip_offset(const Polygon& poly, double unclip_ratio) {
  if (unclip_ratio <= 0.0) throw std::invalid_argument("unclip ratio must be positive");
  return area(poly) * unclip_ratio / perimeter(poly);
}

std::vector<Polygon> offset(const Polygon& poly, double delta) {
  if (delta == 0.0) return {poly};
  const int n = poly.size();
  const double mag = std::abs(delta);

  std::vector<OffsetEdge> edges(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const Vec2 dir = (b - a).normalized();
    const Vec2 outward(dir.y(), -dir.x());  // right of travel = outside for CCW
    edges[static_cast<size_t>(i)] = {a + delta * outward, b + delta * outward, dir};
  }

  // Join consecutive offset edges at each source vertex.
  std::vector<Vec2> raw;
  raw.reserve(static_cast<size_t>(2 * n));
  for (int i = 0; i < n; ++i) {
    const OffsetEdge& e0 = edges[static_cast<size_t>(i)];
    const OffsetEdge& e1 = edges[static_cast<size_t>((i + 1) % n)];
    const Vec2& corner = poly[(i + 1) % n];
    const double denom = cross2(e0.dir, e1.dir);
    if (std::abs(denom) < 1e-12) {  // collinear continuation
      raw.push_back(e0.b);
      if ((e1.a - e0.b).norm() > kEps) raw.push_back(e1.a);
      continue;
    }
    const double t = cross2(e1.a - e0.a, e1.dir) / denom;
    const Vec2 miter = e0.a + t * e0.dir;
    if ((miter - corner).norm() > 2.0 * mag) {  // too spiky, bevel instead
      raw.push_back(e0.b);
      raw.push_back(e1.a);
    } else {
      raw.push_back(miter);
    }
  }
  drop_duplicate_points(raw);
  if (raw.size() < 3) return {};

  std::vector<Polygon> out;
  for (auto& loop : split_loops(raw)) {
    drop_duplicate_points(loop);
    if (loop.size() < 3) continue;
    if (signed_area(loop) <= kEps) continue;  // inverted or degenerate piece
    // A fully collapsed shrink can leave a phantom loop with restored
    // orientation; genuine pieces keep at least one vertex at the full
    // offset depth from the source boundary.
    double depth = 0.0;
    for (const Vec2& p : loop) depth = std::max(depth, distance_to_boundary(poly, p));
    if (depth < mag * (1.0 - 1e-6) - kEps) continue;
    try {
      out.emplace_back(std::move(loop));
    } catch (const std::invalid_argument&) {
      // Numerically marginal sliver; drop it.
    }
  }
  return out;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double distance_to_boundary(const Polygon& poly, const Vec2& p) {
  const int n = poly.size();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
  return best;
}

bool contains(const Polygon& poly, const Vec2& p) {
  const int n = poly.size();
  for (int i = 0; i < n; ++i) {
    if (point_segment_distance(p, poly[i], poly[(i + 1) % n]) < kEps) return true;
  }
  bool inside = false;
  for (int i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    if ((a.y() > p.y()) == (b.y() > p.y())) continue;
    const double x_hit = a.x() + (p.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
    if (p.x() < x_hit) inside = !inside;
  }
  return inside;
}

}  // namespace dbcore
