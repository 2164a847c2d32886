#pragma once

#include "dbcore/types.hpp"

namespace dbcore {

struct BceResult {
  double loss = 0.0;    // mean over the selected pixels
  FloatMap grad;        // d loss / d pred; zero off the selected set
  FloatMap selected;    // 1 on pixels entering the mean (positives + mined negatives)
  long n_pos = 0;
  long n_neg_selected = 0;
};

// Binary cross-entropy with hard negative mining: keeps every masked positive
// and the floor(neg_ratio * n_pos) highest-loss masked negatives (ties broken
// by row-major index). With no positives, falls back to the min(100, n_neg)
// hardest negatives. Predictions must lie strictly inside (0, 1) on masked
// pixels (std::domain_error otherwise); targets must be 0 or 1; shape
// mismatches throw std::invalid_argument.
BceResult bce_hard_negative(const FloatMap& pred, const FloatMap& target, const FloatMap& mask,
                            double neg_ratio = 3.0);

// Same mean BCE but over an externally fixed pixel set; used to difference
// the loss without the mined set jumping underneath the probe.
double bce_fixed_set(const FloatMap& pred, const FloatMap& target, const FloatMap& selected);

struct L1Result {
  double loss = 0.0;  // mean absolute difference over the band
  FloatMap grad;      // sign(pred - target)/n on the band; 0 at exact ties
  long n_band = 0;
};

L1Result threshold_l1(const FloatMap& pred, const FloatMap& target, const FloatMap& band_mask);

struct LossWeights {
  double alpha = 1.0;  // binarized-map BCE
  double beta = 10.0;  // threshold-band L1
  double neg_ratio = 3.0;
};

inline double total_loss(double prob_bce, double bin_bce, double thresh_l1,
                         const LossWeights& w = {}) {
  return prob_bce + w.alpha * bin_bce + w.beta * thresh_l1;
}

}  // namespace dbcore
