// Command-line surface over the dbcore library: label generation, box
// formation, evaluation, gradient curve tables, scene synthesis, and the toy
// map trainer. Every command is a pure function of its inputs and flags.
//
// Exit codes: 0 success, 2 usage error, 3 I/O error, 4 numeric failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dbcore/binarization.hpp"
#include "dbcore/eval.hpp"
#include "dbcore/io.hpp"
#include "dbcore/labelgen.hpp"
#include "dbcore/postprocess.hpp"
#include "dbcore/synth.hpp"
#include "dbcore/trainer.hpp"

namespace {

dbcore::ShapeKind parse_shape(const std::string& name) {
  if (name == "rect") return dbcore::ShapeKind::rect;
  if (name == "rot_rect") return dbcore::ShapeKind::rot_rect;
  return dbcore::ShapeKind::curved_band;
}

// Cycles through the three shape kinds so multi-scene runs exercise convex,
// rotated, and non-convex instances alike.
dbcore::ShapeKind cycled_shape(int index) {
  switch (index % 3) {
    case 0: return dbcore::ShapeKind::rect;
    case 1: return dbcore::ShapeKind::rot_rect;
    default: return dbcore::ShapeKind::curved_band;
  }
}

// Ground truth accepts both the bare polygon format and the detection format
// (scores present but ignored), so a detection file can be evaluated against
// itself.
std::vector<dbcore::Polygon> load_gt_polygons(const std::string& path) {
  const std::string text = dbcore::read_text_file(path);
  bool scored = false;
  for (size_t pos = 0; pos < text.size();) {
    size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line[0] == '#') continue;
    scored = line.find(';') != std::string::npos;
    break;
  }
  std::vector<dbcore::Polygon> polys;
  if (scored) {
    for (const auto& det : dbcore::read_detections(path)) polys.push_back(det.polygon);
  } else {
    polys = dbcore::read_polygons(path);
  }
  return polys;
}

struct LabelgenArgs {
  std::string polys, out;
  int height = 0, width = 0;
  double shrink_ratio = 0.4, tmin = 0.3, tmax = 0.7;
};

void run_labelgen(const LabelgenArgs& a) {
  const auto polys = dbcore::read_polygons(a.polys);
  const dbcore::LabelConfig cfg{a.shrink_ratio, a.tmin, a.tmax};
  const dbcore::LabelBundle bundle = dbcore::generate_labels(polys, a.height, a.width, cfg);
  std::filesystem::create_directories(a.out);
  const std::pair<const char*, const dbcore::FloatMap*> maps[] = {
      {"prob_target", &bundle.prob_target},
      {"prob_mask", &bundle.prob_mask},
      {"thresh_target", &bundle.thresh_target},
      {"thresh_mask", &bundle.thresh_mask},
  };
  for (const auto& [name, map] : maps) {
    dbcore::write_float_map(a.out + "/" + name + ".f32map", *map);
    dbcore::write_pgm(a.out + "/" + name + ".pgm", *map);
  }
}

struct DetectArgs {
  std::string prob, out;
  double bin_thresh = 0.2, unclip = 1.5, score_thresh = 0.5;
};

void run_detect(const DetectArgs& a) {
  const dbcore::FloatMap prob = dbcore::read_float_map(a.prob);
  dbcore::PostprocessConfig cfg;
  cfg.bin_thresh = a.bin_thresh;
  cfg.unclip_ratio = a.unclip;
  cfg.box_thresh = a.score_thresh;
  dbcore::write_detections(a.out, dbcore::form_boxes(prob, cfg));
}

struct EvalArgs {
  std::string dets, gt;
  double iou = 0.5;
};

void run_eval(const EvalArgs& a) {
  const auto dets = dbcore::read_detections(a.dets);
  const auto gt = load_gt_polygons(a.gt);
  const dbcore::EvalReport r = dbcore::evaluate(dets, gt, a.iou);
  std::printf("%.4f\t%.4f\t%.4f\n", r.precision, r.recall, r.f_measure);
}

struct GradcurvesArgs {
  std::string out;
  double k = 50.0, t = 0.5, xmin = -1.0, xmax = 1.0;
  int samples = 201;
};

void run_gradcurves(const GradcurvesArgs& a) {
  const dbcore::CurveTable table = dbcore::emit_derivative_curves(a.k, a.t, a.xmin, a.xmax,
                                                                  a.samples);
  dbcore::write_text_file(a.out, table.to_csv());
}

struct SynthArgs {
  std::string out, shape = "rect";
  std::uint64_t seed = 0;
  int height = 160, width = 160, instances = 3;
  double noise = 0.1;
};

void run_synth(const SynthArgs& a) {
  dbcore::SceneConfig cfg;
  cfg.seed = a.seed;
  cfg.height = a.height;
  cfg.width = a.width;
  cfg.n_instances = a.instances;
  cfg.shape = parse_shape(a.shape);
  cfg.noise_amplitude = a.noise;
  dbcore::export_scene(a.out, dbcore::generate_scene(cfg));
}

struct TrainArgs {
  std::string out, mode = "db", shape = "mixed";
  int steps = 500, scenes = 20, height = 160, width = 160, instances = 3;
  double lr = 6000.0, k = 50.0;
  std::uint64_t seed = 0;
};

int run_train(const TrainArgs& a) {
  std::vector<dbcore::Scene> scenes;
  for (int i = 0; i < a.scenes; ++i) {
    dbcore::SceneConfig sc;
    sc.seed = a.seed + static_cast<std::uint64_t>(i);
    sc.height = a.height;
    sc.width = a.width;
    sc.n_instances = a.instances;
    sc.shape = a.shape == "mixed" ? cycled_shape(i) : parse_shape(a.shape);
    scenes.push_back(dbcore::generate_scene(sc));
  }
  dbcore::TrainConfig cfg;
  cfg.mode = a.mode == "db" ? dbcore::TrainMode::db : dbcore::TrainMode::plain_bce;
  cfg.steps = a.steps;
  cfg.lr = a.lr;
  cfg.k = a.k;
  cfg.seed = a.seed;
  const dbcore::TrainReport report = dbcore::optimize_maps(scenes, cfg);
  dbcore::write_train_report(a.out, report);
  if (report.diverged) {
    std::cerr << "error: loss became non-finite at step " << report.steps_run << '\n';
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dbcore: differentiable binarization toolkit"};
  app.require_subcommand(1);
  int exit_code = 0;

  LabelgenArgs lg;
  auto* labelgen = app.add_subcommand(
      "labelgen", "Generate probability and threshold label maps from polygons");
  labelgen->add_option("--polys", lg.polys, "Polygon file, one x1,y1,x2,y2,... line each")
      ->required();
  labelgen->add_option("--height", lg.height, "Map height in pixels")->required();
  labelgen->add_option("--width", lg.width, "Map width in pixels")->required();
  labelgen->add_option("--shrink-ratio", lg.shrink_ratio, "Shrink ratio r")
      ->capture_default_str();
  labelgen->add_option("--tmin", lg.tmin, "Threshold target minimum")->capture_default_str();
  labelgen->add_option("--tmax", lg.tmax, "Threshold target maximum")->capture_default_str();
  labelgen->add_option("--out", lg.out, "Output directory")->required();
  labelgen->callback([&] { run_labelgen(lg); });

  DetectArgs dt;
  auto* detect =
      app.add_subcommand("detect", "Form boxes from a probability map and write detections");
  detect->add_option("--prob", dt.prob, "Probability map (.f32map)")->required();
  detect->add_option("--bin-thresh", dt.bin_thresh, "Binarization threshold")
      ->capture_default_str();
  detect->add_option("--unclip", dt.unclip, "Unclip ratio r'")->capture_default_str();
  detect->add_option("--score-thresh", dt.score_thresh, "Minimum region score")
      ->capture_default_str();
  detect->add_option("--out", dt.out, "Detection output file")->required();
  detect->callback([&] { run_detect(dt); });

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Match detections to ground truth, print P/R/F TSV");
  eval->add_option("--dets", ev.dets, "Detection file")->required();
  eval->add_option("--gt", ev.gt, "Ground-truth polygons (bare or scored format)")->required();
  eval->add_option("--iou", ev.iou, "IoU match threshold")->capture_default_str();
  eval->callback([&] { run_eval(ev); });

  GradcurvesArgs gc;
  auto* gradcurves =
      app.add_subcommand("gradcurves", "Write gradient curve tables for the loss variants");
  gradcurves->add_option("--k", gc.k, "Binarization steepness k")->capture_default_str();
  gradcurves->add_option("--t", gc.t, "Fixed threshold for the chained curves")
      ->capture_default_str();
  gradcurves->add_option("--xmin", gc.xmin, "Range start")->capture_default_str();
  gradcurves->add_option("--xmax", gc.xmax, "Range end")->capture_default_str();
  gradcurves->add_option("--samples", gc.samples, "Row count")->capture_default_str();
  gradcurves->add_option("--out", gc.out, "CSV output file")->required();
  gradcurves->callback([&] { run_gradcurves(gc); });

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic scene");
  synth->add_option("--seed", sy.seed, "Scene seed")->required();
  synth->add_option("--height", sy.height, "Scene height")->capture_default_str();
  synth->add_option("--width", sy.width, "Scene width")->capture_default_str();
  synth->add_option("--instances", sy.instances, "Instance count")->capture_default_str();
  synth->add_option("--shape", sy.shape, "Instance shape")
      ->check(CLI::IsMember({"rect", "rot_rect", "curved_band"}))
      ->capture_default_str();
  synth->add_option("--noise", sy.noise, "Probability map noise amplitude")
      ->capture_default_str();
  synth->add_option("--out", sy.out, "Output directory")->required();
  synth->callback([&] { run_synth(sy); });

  TrainArgs tr;
  auto* train = app.add_subcommand(
      "train-toy", "Optimize per-pixel maps on synthetic scenes and write a report");
  train->add_option("--mode", tr.mode, "Loss mode")
      ->check(CLI::IsMember({"db", "plain"}))
      ->capture_default_str();
  train->add_option("--steps", tr.steps, "Gradient steps")->capture_default_str();
  train->add_option("--lr", tr.lr, "Learning rate")->capture_default_str();
  train->add_option("--k", tr.k, "Binarization steepness k")->capture_default_str();
  train->add_option("--seed", tr.seed, "Base scene seed")->capture_default_str();
  train->add_option("--scenes", tr.scenes, "Scene count")->capture_default_str();
  train->add_option("--height", tr.height, "Scene height")->capture_default_str();
  train->add_option("--width", tr.width, "Scene width")->capture_default_str();
  train->add_option("--instances", tr.instances, "Instances per scene")->capture_default_str();
  train->add_option("--shape", tr.shape, "Instance shape, or mixed to cycle")
      ->check(CLI::IsMember({"rect", "rot_rect", "curved_band", "mixed"}))
      ->capture_default_str();
  train->add_option("--out", tr.out, "Report output directory")->required();
  train->callback([&] { exit_code = run_train(tr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return exit_code;
}
