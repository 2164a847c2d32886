#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "dbcore/types.hpp"

namespace dbcore {

// Numerically stable logistic function.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Hard step: 1 where prob >= thresh, else 0.
inline double standard_binarize(double prob, double thresh) {
  return prob >= thresh ? 1.0 : 0.0;
}
FloatMap standard_binarize(const FloatMap& prob, double thresh);

// Soft approximation 1 / (1 + exp(-k (prob - thresh))).
inline double db_forward(double prob, double thresh, double k) {
  return sigmoid(k * (prob - thresh));
}
FloatMap db_forward(const FloatMap& prob, const FloatMap& thresh, double k);

// Loss slopes through the soft binarization at x = prob - thresh:
// positive label  -k (1 - sigmoid(kx)), negative label  k sigmoid(kx).
struct GradPair {
  double d_pos;
  double d_neg;
};
inline GradPair db_loss_grads(double x, double k) {
  const double s = sigmoid(k * x);
  return {-k * (1.0 - s), k * s};
}

// Slopes of the plain binary cross-entropy against the probability itself:
// positive label  -1/y, negative label  1/(1-y). Unbounded at the ends;
// throws std::domain_error at y = 0 or y = 1.
GradPair bce_logit_grads(double y);

// Loss slopes against a pre-sigmoid logit v. The baseline path is BCE on
// sigmoid(v); the db path feeds sigmoid(v) through the soft binarization at
// threshold t before the loss. db.d_pos carries the full sigmoid chain
// factor; db.d_neg is the saturating form k * sigmoid(k v), which tops out
// at k and is its own loss family's slope (antiderivative log(1+e^{kv})).
struct ChainGrads {
  GradPair baseline;
  GradPair db;
};
ChainGrads sigmoid_chain_grads(double v, double k, double t);

// Sampled curves of the functions and the four gradient pairs above over a
// logit range. Cells without a defined value (BCE slopes outside (0,1)) hold
// NaN and serialize as empty CSV fields.
struct CurveTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string to_csv() const;  // "%.9g" numbers, LF line endings
};
CurveTable emit_derivative_curves(double k, double t, double v_min, double v_max, int samples);

}  // namespace dbcore
