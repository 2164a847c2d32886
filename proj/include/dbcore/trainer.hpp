#pragma once

#include <string>
#include <vector>

#include "dbcore/loss.hpp"
#include "dbcore/postprocess.hpp"
#include "dbcore/synth.hpp"

namespace dbcore {

enum class TrainMode { plain_bce, db };

struct TrainConfig {
  TrainMode mode = TrainMode::db;
  int steps = 500;
  double lr = 6000.0;  // sized for the mean-over-scenes normalization
  double k = 50.0;
  LossWeights weights;
  double t_min = 0.3;
  double t_max = 0.7;
  std::uint64_t seed = 0;  // probe sampling only; training itself is deterministic
  PostprocessConfig post;
  double eval_iou = 0.5;
  int eval_grid_scale = 4;
};

struct TrainReport {
  TrainMode mode = TrainMode::db;
  std::vector<double> loss_curve;  // one entry per completed step
  int steps_run = 0;
  bool diverged = false;
  double final_precision = 0.0;  // pooled over scenes at the final state
  double final_recall = 0.0;
  double final_f = 0.0;
  // Step-0 per-pixel loss-slope magnitudes |dl/dv| averaged over threshold
  // band pixels vs shrunk-interior pixels, before hard-negative selection
  // (the mining tie-break at the uniform init would otherwise leave the band
  // statistic dependent on pixel indices rather than on the loss shape).
  double band_grad_mean = 0.0;
  double interior_grad_mean = 0.0;
};

// Optimizes per-scene per-pixel logit maps v (probability head) and, in db
// mode, v_t (threshold head mapped to [t_min, t_max] through a sigmoid) by
// plain gradient descent on the mean-over-scenes loss. Logits are clamped to
// [-30, 30] after each update so sigmoids stay strictly inside (0, 1). A
// non-finite loss aborts early with the curve so far and diverged set.
TrainReport optimize_maps(const std::vector<Scene>& scenes, const TrainConfig& cfg);

struct ModeComparison {
  TrainReport db;
  TrainReport plain;
  double f_delta = 0.0;  // db minus plain
};

// Runs both modes with identical settings apart from the mode flag.
ModeComparison compare_modes(const std::vector<Scene>& scenes, const TrainConfig& base);

// Central finite differences of the step-0 loss against the analytic
// gradients at n_probes seeded random pixels per map. The mined pixel sets
// are frozen at the base point before differencing (the uniform init ties
// make the selection jump under perturbation otherwise). Returns the max
// relative error.
double trainer_grad_check(const std::vector<Scene>& scenes, const TrainConfig& cfg,
                          int n_probes);

// curve.csv (step,loss) plus summary.txt key:value lines.
void write_train_report(const std::string& dir, const TrainReport& report);

}  // namespace dbcore
