#include "dbcore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "dbcore/io.hpp"
#include "dbcore/rng.hpp"

namespace dbcore {
namespace {

constexpr double kMargin = 2.0;
constexpr double kGap = 6.0;  // min separation keeps components distinct downstream

struct Placed {
  double x_lo, x_hi, y_lo, y_hi;
};

struct Candidate {
  std::vector<Vec2> verts;  // at origin, bbox corner (0,0)
  double w, h;
};

Candidate make_shape(ShapeKind kind, double scale, double aspect, Xoshiro256pp& rng) {
  Candidate cand;
  switch (kind) {
    case ShapeKind::rect: {
      const double w = scale * aspect, h = scale;
      cand.verts = {{0, 0}, {w, 0}, {w, h}, {0, h}};
      cand.w = w;
      cand.h = h;
      break;
    }
    case ShapeKind::rot_rect: {
      const double w = scale * aspect, h = scale;
      const double angle = rng.uniform(-0.25 * M_PI, 0.25 * M_PI);
      const double ca = std::cos(angle), sa = std::sin(angle);
      std::vector<Vec2> base = {{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}};
      double x_lo = 1e30, y_lo = 1e30, x_hi = -1e30, y_hi = -1e30;
      for (Vec2& p : base) {
        p = Vec2(ca * p.x() - sa * p.y(), sa * p.x() + ca * p.y());
        x_lo = std::min(x_lo, p.x());
        x_hi = std::max(x_hi, p.x());
        y_lo = std::min(y_lo, p.y());
        y_hi = std::max(y_hi, p.y());
      }
      for (Vec2& p : base) p -= Vec2(x_lo, y_lo);
      cand.verts = std::move(base);
      cand.w = x_hi - x_lo;
      cand.h = y_hi - y_lo;
      break;
    }
    case ShapeKind::curved_band: {
      const double length = scale * aspect;
      const double thickness = 0.6 * scale;
      const double amp = 0.2 * thickness;
      const double phase = rng.uniform(0.0, 2.0 * M_PI);
      constexpr int kSamples = 8;  // 16 polygon vertices total
      std::vector<Vec2> top, bottom;
      for (int j = 0; j < kSamples; ++j) {
        const double u = static_cast<double>(j) / (kSamples - 1);
        const double x = u * length;
        const double yc = amp * std::sin(2.0 * M_PI * u + phase);
        top.emplace_back(x, yc - thickness / 2);
        bottom.emplace_back(x, yc + thickness / 2);
      }
      std::vector<Vec2> verts = top;
      verts.insert(verts.end(), bottom.rbegin(), bottom.rend());
      double y_lo = 1e30, y_hi = -1e30;
      for (const Vec2& p : verts) {
        y_lo = std::min(y_lo, p.y());
        y_hi = std::max(y_hi, p.y());
      }
      for (Vec2& p : verts) p -= Vec2(0.0, y_lo);
      cand.verts = std::move(verts);
      cand.w = length;
      cand.h = y_hi - y_lo;
      break;
    }
  }
  return cand;
}

}  // namespace

FloatMap box_blur3(const FloatMap& map) {
  const Eigen::Index h = map.rows(), w = map.cols();
  FloatMap out = FloatMap::Zero(h, w);
  for (Eigen::Index r = 0; r < h; ++r) {
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0.0;
      for (Eigen::Index dr = -1; dr <= 1; ++dr) {
        const Eigen::Index rr = r + dr;
        if (rr < 0 || rr >= h) continue;
        for (Eigen::Index dc = -1; dc <= 1; ++dc) {
          const Eigen::Index cc = c + dc;
          if (cc < 0 || cc >= w) continue;
          acc += map(rr, cc);
        }
      }
      out(r, c) = acc / 9.0;
    }
  }
  return out;
}

Scene generate_scene(const SceneConfig& cfg) {
  if (cfg.height <= 0 || cfg.width <= 0)
    throw std::invalid_argument("generate_scene: dimensions must be positive");
  if (cfg.n_instances < 0) throw std::invalid_argument("generate_scene: negative instance count");
  if (!(cfg.scale_min > 0.0) || cfg.scale_max < cfg.scale_min)
    throw std::invalid_argument("generate_scene: bad scale range");
  if (!(cfg.aspect_min > 0.0) || cfg.aspect_max < cfg.aspect_min)
    throw std::invalid_argument("generate_scene: bad aspect range");
  if ((cfg.feature_stages > 0) != (cfg.feature_channels > 0))
    throw std::invalid_argument("generate_scene: feature stages and channels go together");

  Xoshiro256pp rng(cfg.seed);
  Scene scene;
  scene.seed = cfg.seed;
  scene.height = cfg.height;
  scene.width = cfg.width;
  scene.requested_instances = cfg.n_instances;

  std::vector<Placed> placed;
  for (int inst = 0; inst < cfg.n_instances; ++inst) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const double scale = rng.uniform(cfg.scale_min, cfg.scale_max);
      const double aspect = rng.uniform(cfg.aspect_min, cfg.aspect_max);
      Candidate cand = make_shape(cfg.shape, scale, aspect, rng);
      const double x_span = cfg.width - 2.0 * kMargin - cand.w;
      const double y_span = cfg.height - 2.0 * kMargin - cand.h;
      const double x0 = kMargin + (x_span > 0.0 ? rng.uniform(0.0, x_span) : 0.0);
      const double y0 = kMargin + (y_span > 0.0 ? rng.uniform(0.0, y_span) : 0.0);
      if (x_span < 0.0 || y_span < 0.0) continue;  // does not fit at all
      const Placed box{x0 - kGap / 2, x0 + cand.w + kGap / 2, y0 - kGap / 2,
                       y0 + cand.h + kGap / 2};
      bool clear = true;
      for (const Placed& p : placed) {
        if (box.x_lo < p.x_hi && p.x_lo < box.x_hi && box.y_lo < p.y_hi && p.y_lo < box.y_hi) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      for (Vec2& v : cand.verts) v += Vec2(x0, y0);
      scene.polygons.emplace_back(std::move(cand.verts));
      placed.push_back(box);
      break;
    }
  }

  scene.labels = generate_labels(scene.polygons, cfg.height, cfg.width, cfg.labels);
  scene.noisy_prob = box_blur3(scene.labels.prob_target);
  for (Eigen::Index r = 0; r < scene.noisy_prob.rows(); ++r)
    for (Eigen::Index c = 0; c < scene.noisy_prob.cols(); ++c)
      scene.noisy_prob(r, c) = std::clamp(
          scene.noisy_prob(r, c) + rng.uniform(-cfg.noise_amplitude, cfg.noise_amplitude), 0.0,
          1.0);

  if (cfg.feature_stages > 0) {
    // Idealized multi-scale features: progressively blurrier copies of the
    // noisy probability map, scaled per channel by a seeded coefficient.
    FloatMap plane = scene.noisy_prob;
    const long hw = static_cast<long>(cfg.height) * cfg.width;
    for (int s = 0; s < cfg.feature_stages; ++s) {
      plane = box_blur3(plane);
      ArrayXd data(static_cast<long>(cfg.feature_channels) * hw);
      for (int ch = 0; ch < cfg.feature_channels; ++ch) {
        const double coeff = rng.uniform(0.5, 1.5);
        for (long i = 0; i < hw; ++i) data(ch * hw + i) = coeff * plane.data()[i];
      }
      scene.stage_features.push_back(
          Tensor::constant(Shape{cfg.feature_channels, cfg.height, cfg.width}, std::move(data)));
    }
  }
  return scene;
}

void export_scene(const std::string& dir, const Scene& scene) {
  std::filesystem::create_directories(dir);
  write_polygons(dir + "/polygons.txt", scene.polygons);
  write_float_map(dir + "/prob_target.f32map", scene.labels.prob_target);
  write_float_map(dir + "/prob_mask.f32map", scene.labels.prob_mask);
  write_float_map(dir + "/thresh_target.f32map", scene.labels.thresh_target);
  write_float_map(dir + "/thresh_mask.f32map", scene.labels.thresh_mask);
  write_float_map(dir + "/noisy_prob.f32map", scene.noisy_prob);
  write_text_file(dir + "/manifest.txt",
                  "polygons.txt\nprob_target.f32map\nprob_mask.f32map\nthresh_target.f32map\n"
                  "thresh_mask.f32map\nnoisy_prob.f32map\n");
}

}  // namespace dbcore
