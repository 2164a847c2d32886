#include "dbcore/binarization.hpp"

#include <stdexcept>

#include "dbcore/io.hpp"

namespace dbcore {

FloatMap standard_binarize(const FloatMap& prob, double thresh) {
  return (prob >= thresh).cast<double>();
}

FloatMap db_forward(const FloatMap& prob, const FloatMap& thresh, double k) {
  if (prob.rows() != thresh.rows() || prob.cols() != thresh.cols())
    throw std::invalid_argument("db_forward: probability and threshold map shapes differ");
  FloatMap out(prob.rows(), prob.cols());
  for (Eigen::Index r = 0; r < prob.rows(); ++r)
    for (Eigen::Index c = 0; c < prob.cols(); ++c)
      out(r, c) = db_forward(prob(r, c), thresh(r, c), k);
  return out;
}

GradPair bce_logit_grads(double y) {
  if (y <= 0.0 || y >= 1.0)
    throw std::domain_error("bce_logit_grads: prediction must lie strictly inside (0, 1)");
  return {-1.0 / y, 1.0 / (1.0 - y)};
}

ChainGrads sigmoid_chain_grads(double v, double k, double t) {
  const double s = sigmoid(v);
  const double x = s - t;
  ChainGrads g;
  g.baseline = {s - 1.0, s};
  g.db = {-k * (1.0 - sigmoid(k * x)) * s * (1.0 - s), k * sigmoid(k * v)};
  return g;
}

std::string CurveTable::to_csv() const {
  std::string out;
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) out += ',';
    out += columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      if (!std::isnan(row[i])) out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

CurveTable emit_derivative_curves(double k, double t, double v_min, double v_max, int samples) {
  if (samples < 2) throw std::invalid_argument("emit_derivative_curves: need at least 2 samples");
  if (!(v_min < v_max)) throw std::invalid_argument("emit_derivative_curves: empty range");
  CurveTable table;
  table.columns = {"x",        "step",     "db",        "d_bce_pos", "d_bce_neg", "d_db_pos",
                   "d_db_neg", "d_sig_pos", "d_sig_neg", "d_sigdb_pos", "d_sigdb_neg"};
  const double nan = std::nan("");
  for (int i = 0; i < samples; ++i) {
    const double x = v_min + (v_max - v_min) * i / (samples - 1);
    std::vector<double> row;
    row.push_back(x);
    row.push_back(standard_binarize(x, 0.0));
    row.push_back(sigmoid(k * x));
    if (x > 0.0 && x < 1.0) {
      const GradPair g = bce_logit_grads(x);
      row.push_back(g.d_pos);
      row.push_back(g.d_neg);
    } else {
      row.push_back(nan);
      row.push_back(nan);
    }
    const GradPair gdb = db_loss_grads(x, k);
    row.push_back(gdb.d_pos);
    row.push_back(gdb.d_neg);
    const ChainGrads chain = sigmoid_chain_grads(x, k, t);
    row.push_back(chain.baseline.d_pos);
    row.push_back(chain.baseline.d_neg);
    row.push_back(chain.db.d_pos);
    row.push_back(chain.db.d_neg);
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace dbcore
