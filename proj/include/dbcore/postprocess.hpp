#pragma once

#include <optional>
#include <vector>

#include "dbcore/geometry.hpp"
#include "dbcore/io.hpp"
#include "dbcore/types.hpp"

namespace dbcore {

struct PostprocessConfig {
  double bin_thresh = 0.2;      // probability cut for the binary mask
  double box_thresh = 0.5;      // minimum mean probability inside a region
  double unclip_ratio = 1.5;    // dilation D' = A * ratio / L
  int min_region_px = 4;        // regions smaller than this are dropped
  int max_detections = 1000;
  double dp_tolerance = 1.0;    // contour simplification, in pixels
};

// 8-connected foreground regions of mask != 0, in row-major discovery order.
// Each region lists its pixels as (row, col) in traversal order.
std::vector<std::vector<std::pair<int, int>>> connected_components(const FloatMap& mask);

// Pixel-boundary polygon of one region: traces the outer crack contour along
// pixel edges (vertices on integer corners), merges collinear runs, then
// simplifies with Douglas-Peucker. Falls back to the minimum-area bounding
// rectangle when simplification leaves fewer than 3 usable vertices.
Polygon region_to_polygon(const std::vector<std::pair<int, int>>& region, double dp_tolerance);

// Minimum-area bounding rectangle of a point set (rotating calipers).
Polygon min_area_rect(const std::vector<Vec2>& points);

// Full box formation: binarize, find components, drop the tiny ones,
// polygonize, score each region by its mean probability, drop low scores,
// dilate by the unclip offset, clamp to the map bounds, and return the
// surviving polygons sorted by score descending (ties keep discovery order).
std::vector<ScoredPolygon> form_boxes(const FloatMap& prob, const PostprocessConfig& cfg = {});

}  // namespace dbcore
