#include "dbcore/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace dbcore {
namespace {

void check_same_shape(const FloatMap& a, const FloatMap& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(what) + ": map shapes differ");
}

}  // namespace

BceResult bce_hard_negative(const FloatMap& pred, const FloatMap& target, const FloatMap& mask,
                            double neg_ratio) {
  check_same_shape(pred, target, "bce_hard_negative");
  check_same_shape(pred, mask, "bce_hard_negative");
  if (neg_ratio < 0.0) throw std::invalid_argument("bce_hard_negative: negative mining ratio");

  const long n = pred.size();
  const double* p = pred.data();
  const double* t = target.data();
  const double* m = mask.data();

  BceResult res;
  res.grad = FloatMap::Zero(pred.rows(), pred.cols());
  res.selected = FloatMap::Zero(pred.rows(), pred.cols());

  std::vector<long> negatives;
  long n_pos = 0;
  for (long i = 0; i < n; ++i) {
    if (m[i] == 0.0) continue;
    if (t[i] != 0.0 && t[i] != 1.0)
      throw std::invalid_argument("bce_hard_negative: targets must be 0 or 1");
    if (p[i] <= 0.0 || p[i] >= 1.0)
      throw std::domain_error("bce_hard_negative: predictions must lie strictly inside (0, 1)");
    if (t[i] == 1.0)
      ++n_pos;
    else
      negatives.push_back(i);
  }
  res.n_pos = n_pos;

  long keep = n_pos > 0 ? static_cast<long>(std::floor(neg_ratio * static_cast<double>(n_pos)))
                        : std::min<long>(100, static_cast<long>(negatives.size()));
  keep = std::min<long>(keep, static_cast<long>(negatives.size()));
  if (keep > 0 && keep < static_cast<long>(negatives.size())) {
    // Hardest negatives have the highest prediction; ties keep the lower
    // row-major index so the mined set is reproducible.
    std::nth_element(negatives.begin(), negatives.begin() + keep, negatives.end(),
                     [&](long a, long b) { return p[a] != p[b] ? p[a] > p[b] : a < b; });
    negatives.resize(static_cast<size_t>(keep));
  } else if (keep == 0) {
    negatives.clear();
  }
  res.n_neg_selected = static_cast<long>(negatives.size());

  const long n_sel = n_pos + res.n_neg_selected;
  if (n_sel == 0) return res;

  double* g = res.grad.data();
  double* sel = res.selected.data();
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    if (m[i] == 0.0 || t[i] != 1.0) continue;
    acc += -std::log(p[i]);
    g[i] = -1.0 / p[i] / static_cast<double>(n_sel);
    sel[i] = 1.0;
  }
  std::sort(negatives.begin(), negatives.end());  // fixed accumulation order
  for (long i : negatives) {
    acc += -std::log(1.0 - p[i]);
    g[i] = 1.0 / (1.0 - p[i]) / static_cast<double>(n_sel);
    sel[i] = 1.0;
  }
  res.loss = acc / static_cast<double>(n_sel);
  return res;
}

double bce_fixed_set(const FloatMap& pred, const FloatMap& target, const FloatMap& selected) {
  check_same_shape(pred, target, "bce_fixed_set");
  check_same_shape(pred, selected, "bce_fixed_set");
  const long n = pred.size();
  const double* p = pred.data();
  const double* t = target.data();
  const double* s = selected.data();
  double acc = 0.0;
  long count = 0;
  for (long i = 0; i < n; ++i) {
    if (s[i] == 0.0) continue;
    if (p[i] <= 0.0 || p[i] >= 1.0)
      throw std::domain_error("bce_fixed_set: predictions must lie strictly inside (0, 1)");
    acc += t[i] == 1.0 ? -std::log(p[i]) : -std::log(1.0 - p[i]);
    ++count;
  }
  return count > 0 ? acc / static_cast<double>(count) : 0.0;
}

L1Result threshold_l1(const FloatMap& pred, const FloatMap& target, const FloatMap& band_mask) {
  check_same_shape(pred, target, "threshold_l1");
  check_same_shape(pred, band_mask, "threshold_l1");
  L1Result res;
  res.grad = FloatMap::Zero(pred.rows(), pred.cols());
  const long n = pred.size();
  const double* p = pred.data();
  const double* t = target.data();
  const double* m = band_mask.data();
  long count = 0;
  for (long i = 0; i < n; ++i)
    if (m[i] != 0.0) ++count;
  res.n_band = count;
  if (count == 0) return res;
  double acc = 0.0;
  double* g = res.grad.data();
  for (long i = 0; i < n; ++i) {
    if (m[i] == 0.0) continue;
    const double diff = p[i] - t[i];
    acc += std::abs(diff);
    if (diff > 0.0)
      g[i] = 1.0 / static_cast<double>(count);
    else if (diff < 0.0)
      g[i] = -1.0 / static_cast<double>(count);
  }
  res.loss = acc / static_cast<double>(count);
  return res;
}

}  // namespace dbcore
