#include "dbcore/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "dbcore/eval.hpp"
#include "dbcore/io.hpp"
#include "dbcore/parallel.hpp"
#include "dbcore/rng.hpp"

namespace dbcore {
namespace {

constexpr double kLogitClamp = 30.0;

FloatMap sigmoid_map(const FloatMap& v) {
  return 1.0 / (1.0 + (-v).exp());  // logits are clamped, no overflow risk
}

struct SceneEval {
  double loss = 0.0;
  FloatMap gv, gvt;            // d(scene loss)/d logits
  BceResult prob_bce, bin_bce;  // kept for selection freezing
  L1Result band_l1;
  FloatMap prob, bin, thresh;
};

SceneEval scene_loss_grads(const Scene& s, const FloatMap& v, const FloatMap& vt,
                           const TrainConfig& cfg) {
  SceneEval out;
  out.prob = sigmoid_map(v);
  const FloatMap dp = out.prob * (1.0 - out.prob);
  out.prob_bce =
      bce_hard_negative(out.prob, s.labels.prob_target, s.labels.prob_mask, cfg.weights.neg_ratio);
  if (cfg.mode == TrainMode::plain_bce) {
    out.loss = out.prob_bce.loss;
    out.gv = out.prob_bce.grad * dp;
    return out;
  }
  const FloatMap st = sigmoid_map(vt);
  out.thresh = cfg.t_min + (cfg.t_max - cfg.t_min) * st;
  out.bin = sigmoid_map(cfg.k * (out.prob - out.thresh));
  out.bin_bce =
      bce_hard_negative(out.bin, s.labels.prob_target, s.labels.prob_mask, cfg.weights.neg_ratio);
  out.band_l1 = threshold_l1(out.thresh, s.labels.thresh_target, s.labels.thresh_mask);
  out.loss = total_loss(out.prob_bce.loss, out.bin_bce.loss, out.band_l1.loss, cfg.weights);

  const FloatMap dbdz = cfg.k * out.bin * (1.0 - out.bin);  // z = P - T
  out.gv = (out.prob_bce.grad + cfg.weights.alpha * out.bin_bce.grad * dbdz) * dp;
  out.gvt = (cfg.weights.beta * out.band_l1.grad - cfg.weights.alpha * out.bin_bce.grad * dbdz) *
            (cfg.t_max - cfg.t_min) * st * (1.0 - st);
  return out;
}

void validate(const std::vector<Scene>& scenes, const TrainConfig& cfg) {
  if (scenes.empty()) throw std::invalid_argument("trainer: need at least one scene");
  if (cfg.steps < 1) throw std::invalid_argument("trainer: steps must be >= 1");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("trainer: lr must be positive");
  if (!(cfg.k > 0.0)) throw std::invalid_argument("trainer: k must be positive");
  if (!(cfg.t_min < cfg.t_max))
    throw std::invalid_argument("trainer: threshold range must be increasing");
}

void band_interior_stats(const std::vector<Scene>& scenes,
                         const std::vector<SceneEval>& evals, const TrainConfig& cfg,
                         TrainReport& report) {
  // Per-pixel loss slope against v as if every pixel were selected: the
  // boundary amplification is a property of the loss shape, not of which
  // negatives the miner happened to pick at the uniform-tie init.
  double band_acc = 0.0, int_acc = 0.0;
  long band_n = 0, int_n = 0;
  for (size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    const SceneEval& e = evals[i];
    FloatMap field = e.prob - s.labels.prob_target;
    if (cfg.mode == TrainMode::db)
      field += cfg.weights.alpha * cfg.k * (e.bin - s.labels.prob_target) * e.prob *
               (1.0 - e.prob);
    for (long j = 0; j < field.size(); ++j) {
      const bool positive = s.labels.prob_target.data()[j] == 1.0;
      const bool band = s.labels.thresh_mask.data()[j] != 0.0 && !positive;
      if (band) {
        band_acc += std::abs(field.data()[j]);
        ++band_n;
      } else if (positive) {
        int_acc += std::abs(field.data()[j]);
        ++int_n;
      }
    }
  }
  report.band_grad_mean = band_n > 0 ? band_acc / static_cast<double>(band_n) : 0.0;
  report.interior_grad_mean = int_n > 0 ? int_acc / static_cast<double>(int_n) : 0.0;
}

}  // namespace

TrainReport optimize_maps(const std::vector<Scene>& scenes, const TrainConfig& cfg) {
  validate(scenes, cfg);
  const int n = static_cast<int>(scenes.size());
  std::vector<FloatMap> v(scenes.size()), vt(scenes.size());
  for (size_t i = 0; i < scenes.size(); ++i) {
    v[i] = FloatMap::Zero(scenes[i].height, scenes[i].width);
    vt[i] = FloatMap::Zero(scenes[i].height, scenes[i].width);
  }

  TrainReport report;
  report.mode = cfg.mode;
  std::vector<SceneEval> evals(scenes.size());
  const double scene_scale = 1.0 / static_cast<double>(n);

  for (int step = 0; step < cfg.steps; ++step) {
    parallel_for(n, [&](int i) {
      evals[static_cast<size_t>(i)] =
          scene_loss_grads(scenes[static_cast<size_t>(i)], v[static_cast<size_t>(i)],
                           vt[static_cast<size_t>(i)], cfg);
    });
    double loss = 0.0;
    for (const SceneEval& e : evals) loss += e.loss;
    loss *= scene_scale;
    report.loss_curve.push_back(loss);
    report.steps_run = step + 1;
    if (!std::isfinite(loss)) {
      report.diverged = true;
      break;
    }
    if (step == 0) band_interior_stats(scenes, evals, cfg, report);
    parallel_for(n, [&](int i) {
      const size_t si = static_cast<size_t>(i);
      v[si] = (v[si] - cfg.lr * scene_scale * evals[si].gv).max(-kLogitClamp).min(kLogitClamp);
      if (cfg.mode == TrainMode::db)
        vt[si] =
            (vt[si] - cfg.lr * scene_scale * evals[si].gvt).max(-kLogitClamp).min(kLogitClamp);
    });
  }

  long tp = 0, n_det = 0, n_gt = 0;
  std::vector<EvalReport> per_scene(scenes.size());
  parallel_for(n, [&](int i) {
    const size_t si = static_cast<size_t>(i);
    const auto dets = form_boxes(sigmoid_map(v[si]), cfg.post);
    per_scene[si] = evaluate(dets, scenes[si].polygons, cfg.eval_iou, cfg.eval_grid_scale);
  });
  for (const EvalReport& r : per_scene) {
    tp += r.true_positives;
    n_det += r.n_detections;
    n_gt += r.n_ground_truth;
  }
  if (n_det == 0 && n_gt == 0) {
    report.final_precision = report.final_recall = report.final_f = 1.0;
  } else {
    report.final_precision = n_det > 0 ? static_cast<double>(tp) / static_cast<double>(n_det) : 0.0;
    report.final_recall = n_gt > 0 ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0;
    const double pr = report.final_precision + report.final_recall;
    report.final_f = pr > 0.0 ? 2.0 * report.final_precision * report.final_recall / pr : 0.0;
  }
  return report;
}

ModeComparison compare_modes(const std::vector<Scene>& scenes, const TrainConfig& base) {
  ModeComparison cmp;
  TrainConfig cfg = base;
  cfg.mode = TrainMode::db;
  cmp.db = optimize_maps(scenes, cfg);
  cfg.mode = TrainMode::plain_bce;
  cmp.plain = optimize_maps(scenes, cfg);
  cmp.f_delta = cmp.db.final_f - cmp.plain.final_f;
  return cmp;
}

double trainer_grad_check(const std::vector<Scene>& scenes, const TrainConfig& cfg,
                          int n_probes) {
  validate(scenes, cfg);
  if (n_probes < 1) throw std::invalid_argument("trainer_grad_check: need at least one probe");
  const int n = static_cast<int>(scenes.size());
  std::vector<FloatMap> v(scenes.size()), vt(scenes.size());
  std::vector<SceneEval> base(scenes.size());
  for (size_t i = 0; i < scenes.size(); ++i) {
    v[i] = FloatMap::Zero(scenes[i].height, scenes[i].width);
    vt[i] = FloatMap::Zero(scenes[i].height, scenes[i].width);
    base[i] = scene_loss_grads(scenes[i], v[i], vt[i], cfg);
  }

  // Frozen-selection loss: mining re-ranks under any perturbation of the
  // uniform init (all predictions tie), so the differenced loss fixes the
  // step-0 pixel sets and the band, which is exactly what the analytic
  // gradient at the base point describes.
  auto frozen_loss = [&]() {
    double acc = 0.0;
    for (size_t i = 0; i < scenes.size(); ++i) {
      const Scene& s = scenes[i];
      const FloatMap p = sigmoid_map(v[i]);
      double scene_loss = bce_fixed_set(p, s.labels.prob_target, base[i].prob_bce.selected);
      if (cfg.mode == TrainMode::db) {
        const FloatMap st = sigmoid_map(vt[i]);
        const FloatMap t = cfg.t_min + (cfg.t_max - cfg.t_min) * st;
        const FloatMap b = sigmoid_map(cfg.k * (p - t));
        scene_loss += cfg.weights.alpha *
                      bce_fixed_set(b, s.labels.prob_target, base[i].bin_bce.selected);
        scene_loss += cfg.weights.beta *
                      threshold_l1(t, s.labels.thresh_target, s.labels.thresh_mask).loss;
      }
      acc += scene_loss;
    }
    return acc / static_cast<double>(n);
  };

  Xoshiro256pp rng(cfg.seed ^ 0x5eedf00dULL);
  const double h = 1e-5;
  double worst = 0.0;
  for (int probe = 0; probe < n_probes; ++probe) {
    const auto si = static_cast<size_t>(rng.uniform_int(0, n - 1));
    const bool on_vt = cfg.mode == TrainMode::db && rng.next() % 2 == 0;
    FloatMap& map = on_vt ? vt[si] : v[si];
    long pix = rng.uniform_int(0, map.size() - 1);
    if (on_vt) {
      // Stay off the L1 kink, where the subgradient convention and the
      // two-sided difference legitimately disagree.
      for (int tries = 0; tries < 100; ++tries) {
        const double gap = std::abs(base[si].thresh.data()[pix] -
                                    scenes[si].labels.thresh_target.data()[pix]);
        if (scenes[si].labels.thresh_mask.data()[pix] == 0.0 || gap > 1e-3) break;
        pix = rng.uniform_int(0, map.size() - 1);
      }
    }
    const double analytic =
        (on_vt ? base[si].gvt.data()[pix] : base[si].gv.data()[pix]) / static_cast<double>(n);
    map.data()[pix] = h;
    const double hi = frozen_loss();
    map.data()[pix] = -h;
    const double lo = frozen_loss();
    map.data()[pix] = 0.0;
    const double fd = (hi - lo) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic - fd) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

void write_train_report(const std::string& dir, const TrainReport& report) {
  std::filesystem::create_directories(dir);
  std::string curve = "step,loss\n";
  for (size_t i = 0; i < report.loss_curve.size(); ++i)
    curve += std::to_string(i) + ',' + format_double(report.loss_curve[i]) + '\n';
  write_text_file(dir + "/curve.csv", curve);

  std::string summary;
  summary += std::string("mode:") + (report.mode == TrainMode::db ? "db" : "plain_bce") + '\n';
  summary += "steps_run:" + std::to_string(report.steps_run) + '\n';
  summary += std::string("diverged:") + (report.diverged ? "1" : "0") + '\n';
  summary += "final_precision:" + format_double(report.final_precision) + '\n';
  summary += "final_recall:" + format_double(report.final_recall) + '\n';
  summary += "final_f:" + format_double(report.final_f) + '\n';
  summary += "band_grad_mean:" + format_double(report.band_grad_mean) + '\n';
  summary += "interior_grad_mean:" + format_double(report.interior_grad_mean) + '\n';
  summary +=
      "final_loss:" + format_double(report.loss_curve.empty() ? 0.0 : report.loss_curve.back()) +
      '\n';
  write_text_file(dir + "/summary.txt", summary);
}

}  // namespace dbcore
