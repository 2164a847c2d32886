#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dbcore/labelgen.hpp"
#include "dbcore/tensor.hpp"
#include "dbcore/types.hpp"

namespace dbcore {

enum class ShapeKind { rect, rot_rect, curved_band };

struct SceneConfig {
  std::uint64_t seed = 0;
  int height = 160;
  int width = 160;
  int n_instances = 3;
  double scale_min = 14.0;
  double scale_max = 30.0;
  double aspect_min = 1.2;  // width-to-scale factor; [1,1] pins squares
  double aspect_max = 2.2;
  ShapeKind shape = ShapeKind::rect;
  LabelConfig labels;
  int feature_stages = 0;  // 0 disables stage feature synthesis
  int feature_channels = 0;
  double noise_amplitude = 0.1;
};

struct Scene {
  std::uint64_t seed = 0;
  int height = 0;
  int width = 0;
  std::vector<Polygon> polygons;
  LabelBundle labels;
  FloatMap noisy_prob;
  std::vector<Tensor> stage_features;  // one [C,H,W] tensor per stage when requested
  int requested_instances = 0;         // placed count is polygons.size()
};

// Deterministic scene synthesis: rejection-places non-overlapping instances
// (margin 2 px from the border, 1000 attempts each, failures just reduce the
// count), generates labels, and builds noisy_prob as a 3x3 box blur of
// prob_target (zero-padded, always divided by 9) plus seeded uniform noise
// clamped to [0,1]. Same seed gives a bit-identical scene.
Scene generate_scene(const SceneConfig& cfg);

FloatMap box_blur3(const FloatMap& map);

// Writes polygons.txt, the four label maps, noisy_prob.f32map, and a
// manifest.txt listing the artifact filenames.
void export_scene(const std::string& dir, const Scene& scene);

}  // namespace dbcore
