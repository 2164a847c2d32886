#include "dbcore/labelgen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dbcore {
namespace {

struct PixelBox {
  int row_begin, row_end, col_begin, col_end;  // half-open pixel index ranges
};

PixelBox pixel_bounds(const Polygon& poly, int height, int width) {
  double x_lo = poly[0].x(), x_hi = poly[0].x();
  double y_lo = poly[0].y(), y_hi = poly[0].y();
  for (int i = 1; i < poly.size(); ++i) {
    x_lo = std::min(x_lo, poly[i].x());
    x_hi = std::max(x_hi, poly[i].x());
    y_lo = std::min(y_lo, poly[i].y());
    y_hi = std::max(y_hi, poly[i].y());
  }
  PixelBox b;
  b.row_begin = std::max(0, static_cast<int>(std::floor(y_lo - 0.5)));
  b.row_end = std::min(height, static_cast<int>(std::ceil(y_hi + 0.5)));
  b.col_begin = std::max(0, static_cast<int>(std::floor(x_lo - 0.5)));
  b.col_end = std::min(width, static_cast<int>(std::ceil(x_hi + 0.5)));
  return b;
}

}  // namespace

FloatMap rasterize(const Polygon& poly, int height, int width) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("raster dimensions must be positive");
  FloatMap map = FloatMap::Zero(height, width);
  const PixelBox b = pixel_bounds(poly, height, width);
  for (int r = b.row_begin; r < b.row_end; ++r) {
    for (int c = b.col_begin; c < b.col_end; ++c) {
      if (contains(poly, Vec2(c + 0.5, r + 0.5))) map(r, c) = 1.0;
    }
  }
  return map;
}

LabelBundle generate_labels(const std::vector<Polygon>& polys, int height, int width,
                            const LabelConfig& cfg) {
  if (height <= 0 || width <= 0)
    throw std::invalid_argument("label dimensions must be positive");
  if (cfg.shrink_ratio <= 0.0 || cfg.shrink_ratio >= 1.0)
    throw std::invalid_argument("shrink ratio must lie in (0, 1)");
  if (!(cfg.thresh_min < cfg.thresh_max) || cfg.thresh_min < 0.0 || cfg.thresh_max > 1.0)
    throw std::invalid_argument("threshold range must satisfy 0 <= min < max <= 1");

  LabelBundle out;
  out.prob_target = FloatMap::Zero(height, width);
  out.prob_mask = FloatMap::Ones(height, width);
  out.thresh_target = FloatMap::Constant(height, width, cfg.thresh_min);
  out.thresh_mask = FloatMap::Zero(height, width);

  for (const Polygon& poly : polys) {
    const double d = shrink_offset(poly, cfg.shrink_ratio);
    const std::vector<Polygon> shrunk = offset(poly, -d);
    if (shrunk.empty()) continue;  // instance too small to survive shrinking
    for (const Polygon& piece : shrunk) {
      const PixelBox b = pixel_bounds(piece, height, width);
      for (int r = b.row_begin; r < b.row_end; ++r)
        for (int c = b.col_begin; c < b.col_end; ++c)
          if (contains(piece, Vec2(c + 0.5, r + 0.5))) out.prob_target(r, c) = 1.0;
    }
    for (const Polygon& dilated : offset(poly, d)) {
      const PixelBox b = pixel_bounds(dilated, height, width);
      for (int r = b.row_begin; r < b.row_end; ++r) {
        for (int c = b.col_begin; c < b.col_end; ++c) {
          const Vec2 center(c + 0.5, r + 0.5);
          if (!contains(dilated, center)) continue;
          out.thresh_mask(r, c) = 1.0;
          const double dist = distance_to_boundary(poly, center);
          const double v =
              cfg.thresh_max - (cfg.thresh_max - cfg.thresh_min) * std::min(dist / d, 1.0);
          out.thresh_target(r, c) = std::max(out.thresh_target(r, c), v);
        }
      }
    }
  }
  return out;
}

}  // namespace dbcore
