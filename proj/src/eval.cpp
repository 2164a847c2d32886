#include "dbcore/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dbcore {

double polygon_iou(const Polygon& a, const Polygon& b, int grid_scale) {
  if (grid_scale < 1) throw std::invalid_argument("polygon_iou: grid_scale must be >= 1");
  double x_lo = a[0].x(), x_hi = a[0].x(), y_lo = a[0].y(), y_hi = a[0].y();
  for (const Polygon* poly : {&a, &b}) {
    for (int i = 0; i < poly->size(); ++i) {
      x_lo = std::min(x_lo, (*poly)[i].x());
      x_hi = std::max(x_hi, (*poly)[i].x());
      y_lo = std::min(y_lo, (*poly)[i].y());
      y_hi = std::max(y_hi, (*poly)[i].y());
    }
  }
  // Integer-aligned sample lattice: grid_scale^2 cell centers per pixel.
  const double x0 = std::floor(x_lo), y0 = std::floor(y_lo);
  const long nx = std::max(1L, std::lround((std::ceil(x_hi) - x0)) * grid_scale);
  const long ny = std::max(1L, std::lround((std::ceil(y_hi) - y0)) * grid_scale);
  const double step = 1.0 / static_cast<double>(grid_scale);
  long in_a = 0, in_b = 0, in_both = 0;
  for (long iy = 0; iy < ny; ++iy) {
    const double y = y0 + (iy + 0.5) * step;
    for (long ix = 0; ix < nx; ++ix) {
      const Vec2 p(x0 + (ix + 0.5) * step, y);
      const bool pa = contains(a, p);
      const bool pb = contains(b, p);
      in_a += pa;
      in_b += pb;
      in_both += pa && pb;
    }
  }
  const long uni = in_a + in_b - in_both;
  return uni > 0 ? static_cast<double>(in_both) / static_cast<double>(uni) : 0.0;
}

EvalReport evaluate(const std::vector<ScoredPolygon>& detections,
                    const std::vector<Polygon>& ground_truth, double iou_thresh,
                    int grid_scale) {
  if (iou_thresh <= 0.0 || iou_thresh > 1.0)
    throw std::invalid_argument("evaluate: iou_thresh must lie in (0, 1]");
  EvalReport rep;
  rep.n_detections = static_cast<long>(detections.size());
  rep.n_ground_truth = static_cast<long>(ground_truth.size());

  std::vector<int> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return detections[static_cast<size_t>(i)].score > detections[static_cast<size_t>(j)].score;
  });

  std::vector<char> gt_taken(ground_truth.size(), 0);
  for (int di : order) {
    int best_gt = -1;
    double best_iou = 0.0;
    for (size_t gi = 0; gi < ground_truth.size(); ++gi) {
      if (gt_taken[gi]) continue;
      const double iou =
          polygon_iou(detections[static_cast<size_t>(di)].polygon, ground_truth[gi], grid_scale);
      if (iou > best_iou) {
        best_iou = iou;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0 && best_iou >= iou_thresh) {
      gt_taken[static_cast<size_t>(best_gt)] = 1;
      rep.matches.push_back({di, best_gt});
      ++rep.true_positives;
    }
  }
  std::sort(rep.matches.begin(), rep.matches.end());

  if (rep.n_detections == 0 && rep.n_ground_truth == 0) {
    rep.precision = rep.recall = rep.f_measure = 1.0;
    return rep;
  }
  rep.precision = rep.n_detections > 0
                      ? static_cast<double>(rep.true_positives) / static_cast<double>(rep.n_detections)
                      : 0.0;
  rep.recall = rep.n_ground_truth > 0
                   ? static_cast<double>(rep.true_positives) / static_cast<double>(rep.n_ground_truth)
                   : 0.0;
  const double pr = rep.precision + rep.recall;
  rep.f_measure = pr > 0.0 ? 2.0 * rep.precision * rep.recall / pr : 0.0;
  return rep;
}

}  // namespace dbcore
