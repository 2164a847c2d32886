#pragma once

#include <vector>

#include "dbcore/geometry.hpp"
#include "dbcore/io.hpp"

namespace dbcore {

// Rasterized IoU: both polygons are sampled on a shared grid covering their
// joint bounding box at grid_scale samples per pixel along each axis.
// Identical polygons give exactly 1.
double polygon_iou(const Polygon& a, const Polygon& b, int grid_scale = 4);

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
  long true_positives = 0;
  long n_detections = 0;
  long n_ground_truth = 0;
  std::vector<std::pair<int, int>> matches;  // (detection index, ground truth index)
};

// Greedy one-to-one matching in score order (ties keep input order): each
// detection takes the unmatched ground truth with the highest IoU if that
// IoU reaches iou_thresh. Empty-vs-empty counts as perfect; empty against
// non-empty scores zero.
EvalReport evaluate(const std::vector<ScoredPolygon>& detections,
                    const std::vector<Polygon>& ground_truth, double iou_thresh = 0.5,
                    int grid_scale = 4);

}  // namespace dbcore
