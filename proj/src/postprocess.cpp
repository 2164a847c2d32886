#include "dbcore/postprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dbcore/binarization.hpp"

namespace dbcore {
namespace {

struct CrackEdge {
  int from, to;  // corner ids
  int dx, dy;    // unit direction
  bool used = false;
};

// Extracts closed corner loops of the region boundary by walking directed
// pixel-edge "cracks" that keep the region on a fixed side. At pinch corners
// (two diagonal pixels meeting) the walk prefers the sharpest turn back
// around the current lobe, which splits the boundary into separate loops
// instead of merging lobes through the pinch.
std::vector<std::vector<Vec2>> trace_crack_loops(const std::vector<std::pair<int, int>>& region) {
  int r_lo = region[0].first, r_hi = region[0].first;
  int c_lo = region[0].second, c_hi = region[0].second;
  for (const auto& [r, c] : region) {
    r_lo = std::min(r_lo, r);
    r_hi = std::max(r_hi, r);
    c_lo = std::min(c_lo, c);
    c_hi = std::max(c_hi, c);
  }
  const int bw = c_hi - c_lo + 1;
  const int bh = r_hi - r_lo + 1;
  std::vector<char> mask(static_cast<size_t>(bw) * bh, 0);
  for (const auto& [r, c] : region)
    mask[static_cast<size_t>(r - r_lo) * bw + (c - c_lo)] = 1;
  auto inside = [&](int r, int c) {
    return r >= 0 && r < bh && c >= 0 && c < bw &&
           mask[static_cast<size_t>(r) * bw + c] != 0;
  };

  // Corner grid is (bw+1) x (bh+1); ids are row-major.
  const int cw = bw + 1;
  auto corner_id = [cw](int x, int y) { return y * cw + x; };
  std::vector<CrackEdge> edges;
  std::vector<std::array<int, 2>> outgoing(static_cast<size_t>(cw) * (bh + 1), {-1, -1});
  auto add_edge = [&](int x0, int y0, int x1, int y1) {
    const int id = static_cast<int>(edges.size());
    edges.push_back({corner_id(x0, y0), corner_id(x1, y1), x1 - x0, y1 - y0, false});
    auto& out = outgoing[static_cast<size_t>(corner_id(x0, y0))];
    out[out[0] < 0 ? 0 : 1] = id;
  };
  for (int r = 0; r < bh; ++r) {
    for (int c = 0; c < bw; ++c) {
      if (!inside(r, c)) continue;
      if (!inside(r - 1, c)) add_edge(c + 1, r, c, r);          // top, leftward
      if (!inside(r + 1, c)) add_edge(c, r + 1, c + 1, r + 1);  // bottom, rightward
      if (!inside(r, c - 1)) add_edge(c, r, c, r + 1);          // left, downward
      if (!inside(r, c + 1)) add_edge(c + 1, r + 1, c + 1, r);  // right, upward
    }
  }

  std::vector<std::vector<Vec2>> loops;
  for (size_t start = 0; start < edges.size(); ++start) {
    if (edges[start].used) continue;
    std::vector<Vec2> loop;
    const int start_corner = edges[start].from;
    int cur = static_cast<int>(start);
    while (!edges[static_cast<size_t>(cur)].used) {
      CrackEdge& e = edges[static_cast<size_t>(cur)];
      e.used = true;
      loop.emplace_back(e.from % cw + c_lo, e.from / cw + r_lo);
      if (e.to == start_corner) break;  // loop closed
      const auto& out = outgoing[static_cast<size_t>(e.to)];
      int next = -1;
      int best_cross = 2;
      for (int cand : out) {
        if (cand < 0 || edges[static_cast<size_t>(cand)].used) continue;
        const CrackEdge& ce = edges[static_cast<size_t>(cand)];
        const int cross = e.dx * ce.dy - e.dy * ce.dx;  // most negative = sharpest split turn
        if (cross < best_cross) {
          best_cross = cross;
          next = cand;
        }
      }
      if (next < 0) break;
      cur = next;
    }
    if (loop.size() >= 4) loops.push_back(std::move(loop));
  }
  return loops;
}

void merge_collinear_runs(std::vector<Vec2>& loop) {
  const size_t n = loop.size();
  std::vector<Vec2> out;
  for (size_t i = 0; i < n; ++i) {
    const Vec2& prev = loop[(i + n - 1) % n];
    const Vec2& cur = loop[i];
    const Vec2& next = loop[(i + 1) % n];
    if (std::abs(cross2(cur - prev, next - cur)) > 1e-12) out.push_back(cur);
  }
  loop = std::move(out);
}

void dp_simplify(const std::vector<Vec2>& pts, size_t lo, size_t hi, double tol,
                 std::vector<char>& keep) {
  if (hi <= lo + 1) return;
  double worst = -1.0;
  size_t pick = lo;
  for (size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > worst) {
      worst = d;
      pick = i;
    }
  }
  if (worst <= tol) return;
  keep[pick] = 1;
  dp_simplify(pts, lo, pick, tol, keep);
  dp_simplify(pts, pick, hi, tol, keep);
}

// Douglas-Peucker on a closed loop: split at the vertex farthest from
// vertex 0 and simplify the two open chains.
std::vector<Vec2> dp_simplify_closed(const std::vector<Vec2>& loop, double tol) {
  const size_t n = loop.size();
  if (n <= 3) return loop;
  size_t far = 1;
  double best = -1.0;
  for (size_t i = 1; i < n; ++i) {
    const double d = (loop[i] - loop[0]).squaredNorm();
    if (d > best) {
      best = d;
      far = i;
    }
  }
  std::vector<Vec2> chain(loop.begin(), loop.end());
  chain.push_back(loop[0]);  // close the second chain
  std::vector<char> keep(chain.size(), 0);
  keep[0] = keep[far] = 1;
  dp_simplify(chain, 0, far, tol, keep);
  dp_simplify(chain, far, chain.size() - 1, tol, keep);
  std::vector<Vec2> out;
  for (size_t i = 0; i + 1 < chain.size(); ++i)
    if (keep[i]) out.push_back(chain[i]);
  return out;
}

std::vector<Vec2> region_corner_points(const std::vector<std::pair<int, int>>& region) {
  std::vector<Vec2> pts;
  pts.reserve(region.size() * 4);
  for (const auto& [r, c] : region) {
    pts.emplace_back(c, r);
    pts.emplace_back(c + 1, r);
    pts.emplace_back(c + 1, r + 1);
    pts.emplace_back(c, r + 1);
  }
  return pts;
}

// Sutherland-Hodgman clip of a vertex loop against an axis-aligned rectangle.
std::vector<Vec2> clip_loop_to_rect(std::vector<Vec2> loop, double x_max, double y_max) {
  struct Plane {
    int axis;
    double bound;
    bool keep_below;
  };
  const Plane planes[4] = {{0, 0.0, false}, {0, x_max, true}, {1, 0.0, false}, {1, y_max, true}};
  for (const Plane& pl : planes) {
    auto coord = [&](const Vec2& p) { return pl.axis == 0 ? p.x() : p.y(); };
    auto in = [&](const Vec2& p) {
      return pl.keep_below ? coord(p) <= pl.bound : coord(p) >= pl.bound;
    };
    std::vector<Vec2> next;
    const size_t n = loop.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2& a = loop[i];
      const Vec2& b = loop[(i + 1) % n];
      const bool ia = in(a), ib = in(b);
      if (ia) next.push_back(a);
      if (ia != ib) {
        const double t = (pl.bound - coord(a)) / (coord(b) - coord(a));
        next.push_back(a + t * (b - a));
      }
    }
    loop = std::move(next);
    if (loop.empty()) break;
  }
  return loop;
}

std::optional<Polygon> try_polygon(std::vector<Vec2> verts) {
  std::vector<Vec2> clean;
  for (const Vec2& p : verts) {
    if (!clean.empty() && (clean.back() - p).norm() < 1e-9) continue;
    clean.push_back(p);
  }
  while (clean.size() > 1 && (clean.front() - clean.back()).norm() < 1e-9) clean.pop_back();
  // Drop collinear mid-points introduced by clipping.
  if (clean.size() >= 3) {
    std::vector<Vec2> final_pts;
    const size_t n = clean.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2& prev = clean[(i + n - 1) % n];
      const Vec2& cur = clean[i];
      const Vec2& next = clean[(i + 1) % n];
      const Vec2 d0 = cur - prev, d1 = next - cur;
      if (std::abs(cross2(d0, d1)) < 1e-12 && d0.dot(d1) > 0.0) continue;
      final_pts.push_back(cur);
    }
    clean = std::move(final_pts);
  }
  if (clean.size() < 3) return std::nullopt;
  try {
    return Polygon(std::move(clean));
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<std::vector<std::pair<int, int>>> connected_components(const FloatMap& mask) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  std::vector<char> seen(static_cast<size_t>(h) * w, 0);
  std::vector<std::vector<std::pair<int, int>>> regions;
  static constexpr int kOff[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                     {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask(r, c) == 0.0 || seen[static_cast<size_t>(r) * w + c]) continue;
      std::vector<std::pair<int, int>> region;
      std::vector<std::pair<int, int>> queue{{r, c}};
      seen[static_cast<size_t>(r) * w + c] = 1;
      for (size_t head = 0; head < queue.size(); ++head) {
        const auto [qr, qc] = queue[head];
        region.push_back({qr, qc});
        for (const auto& off : kOff) {
          const int nr = qr + off[0], nc = qc + off[1];
          if (nr < 0 || nr >= h || nc < 0 || nc >= w) continue;
          if (mask(nr, nc) == 0.0 || seen[static_cast<size_t>(nr) * w + nc]) continue;
          seen[static_cast<size_t>(nr) * w + nc] = 1;
          queue.push_back({nr, nc});
        }
      }
      regions.push_back(std::move(region));
    }
  }
  return regions;
}

Polygon region_to_polygon(const std::vector<std::pair<int, int>>& region, double dp_tolerance) {
  if (region.empty()) throw std::invalid_argument("region_to_polygon: empty region");
  if (dp_tolerance < 0.0) throw std::invalid_argument("region_to_polygon: negative tolerance");
  auto loops = trace_crack_loops(region);
  // Outer boundary encloses the most area; inner loops are holes and pinched
  // side lobes, which box formation treats as part of the outer region.
  std::vector<Vec2>* outer = nullptr;
  double best = -1.0;
  for (auto& loop : loops) {
    const double a = std::abs(signed_area(loop));
    if (a > best) {
      best = a;
      outer = &loop;
    }
  }
  if (outer != nullptr) {
    merge_collinear_runs(*outer);
    if (outer->size() >= 3) {
      auto simplified = dp_simplify_closed(*outer, dp_tolerance);
      if (auto poly = try_polygon(std::move(simplified))) return *poly;
    }
  }
  return min_area_rect(region_corner_points(region));
}

Polygon min_area_rect(const std::vector<Vec2>& points) {
  if (points.size() < 3) throw std::invalid_argument("min_area_rect: need at least 3 points");
  std::vector<Vec2> pts = points;
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) { return (a - b).norm() < 1e-12; }),
            pts.end());
  // Monotone-chain convex hull, counter-clockwise.
  const auto half_hull = [](const std::vector<Vec2>& src, std::vector<Vec2>& out) {
    for (const Vec2& p : src) {
      while (out.size() >= 2 &&
             cross2(out[out.size() - 1] - out[out.size() - 2], p - out[out.size() - 1]) <= 0.0)
        out.pop_back();
      out.push_back(p);
    }
  };
  std::vector<Vec2> lower, upper;
  half_hull(pts, lower);
  std::vector<Vec2> rev(pts.rbegin(), pts.rend());
  half_hull(rev, upper);
  lower.pop_back();
  upper.pop_back();
  std::vector<Vec2> hull = lower;
  hull.insert(hull.end(), upper.begin(), upper.end());
  if (hull.size() < 3) throw std::invalid_argument("min_area_rect: points are collinear");

  double best_area = std::numeric_limits<double>::infinity();
  std::array<Vec2, 4> best{};
  const size_t n = hull.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2 dir = (hull[(i + 1) % n] - hull[i]).normalized();
    const Vec2 perp(-dir.y(), dir.x());
    double s_lo = std::numeric_limits<double>::infinity(), s_hi = -s_lo;
    double t_lo = s_lo, t_hi = -s_lo;
    for (const Vec2& p : hull) {
      const double s = p.dot(dir), t = p.dot(perp);
      s_lo = std::min(s_lo, s);
      s_hi = std::max(s_hi, s);
      t_lo = std::min(t_lo, t);
      t_hi = std::max(t_hi, t);
    }
    const double a = (s_hi - s_lo) * (t_hi - t_lo);
    if (a < best_area) {
      best_area = a;
      best = {dir * s_lo + perp * t_lo, dir * s_hi + perp * t_lo, dir * s_hi + perp * t_hi,
              dir * s_lo + perp * t_hi};
    }
  }
  return Polygon({best[0], best[1], best[2], best[3]});
}

std::vector<ScoredPolygon> form_boxes(const FloatMap& prob, const PostprocessConfig& cfg) {
  if (!(cfg.bin_thresh > 0.0 && cfg.bin_thresh < 1.0))
    throw std::invalid_argument("form_boxes: bin_thresh must lie in (0, 1)");
  if (cfg.box_thresh < 0.0 || cfg.box_thresh > 1.0)
    throw std::invalid_argument("form_boxes: box_thresh must lie in [0, 1]");
  if (cfg.unclip_ratio <= 0.0) throw std::invalid_argument("form_boxes: unclip_ratio must be positive");
  if (cfg.min_region_px < 1) throw std::invalid_argument("form_boxes: min_region_px must be >= 1");
  if (cfg.max_detections < 0) throw std::invalid_argument("form_boxes: negative max_detections");
  if (cfg.dp_tolerance < 0.0) throw std::invalid_argument("form_boxes: negative dp_tolerance");

  const FloatMap mask = standard_binarize(prob, cfg.bin_thresh);
  std::vector<ScoredPolygon> out;
  for (const auto& region : connected_components(mask)) {
    if (static_cast<int>(region.size()) < cfg.min_region_px) continue;
    double score = 0.0;
    for (const auto& [r, c] : region) score += prob(r, c);
    score /= static_cast<double>(region.size());
    if (score < cfg.box_thresh) continue;

    Polygon traced = region_to_polygon(region, cfg.dp_tolerance);
    const double d = unclip_offset(traced, cfg.unclip_ratio);
    const std::vector<Polygon> dilated = offset(traced, d);
    // Dilation of a simple polygon yields one outer loop; keep the largest.
    const Polygon* grown = nullptr;
    double best = -1.0;
    for (const Polygon& g : dilated) {
      if (area(g) > best) {
        best = area(g);
        grown = &g;
      }
    }
    if (grown == nullptr) continue;
    auto clipped = clip_loop_to_rect(grown->vertices(), static_cast<double>(prob.cols()),
                                     static_cast<double>(prob.rows()));
    if (auto poly = try_polygon(std::move(clipped))) out.push_back({score, std::move(*poly)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredPolygon& a, const ScoredPolygon& b) { return a.score > b.score; });
  if (static_cast<int>(out.size()) > cfg.max_detections)
    out.erase(out.begin() + cfg.max_detections, out.end());
  return out;
}

}  // namespace dbcore
