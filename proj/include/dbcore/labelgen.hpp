#pragma once

#include <vector>

#include "dbcore/geometry.hpp"
#include "dbcore/types.hpp"

namespace dbcore {

// Training targets for one image: shrunk-region probability target with its
// supervision mask, and the boundary-band threshold target with the band mask.
struct LabelBundle {
  FloatMap prob_target;
  FloatMap prob_mask;
  FloatMap thresh_target;
  FloatMap thresh_mask;
};

struct LabelConfig {
  double shrink_ratio = 0.4;
  double thresh_min = 0.3;
  double thresh_max = 0.7;
};

// Fills pixels whose center (col + 0.5, row + 0.5) lies inside the polygon
// (even-odd rule, boundary counts as inside) with 1, the rest with 0.
FloatMap rasterize(const Polygon& poly, int height, int width);

// Per-instance shrink/dilate labeling: each polygon is shrunk by
// D = A(1 - r^2)/L for the probability target and dilated by the same D for
// the threshold band, whose target falls linearly from thresh_max at the
// source boundary to thresh_min at distance D. Instances whose shrink
// collapses entirely are skipped. Throws std::invalid_argument on
// non-positive dimensions or out-of-range config values.
LabelBundle generate_labels(const std::vector<Polygon>& polys, int height, int width,
                            const LabelConfig& cfg = {});

}  // namespace dbcore
