#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "dbcore/geometry.hpp"
#include "dbcore/rng.hpp"
#include "dbcore/types.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("dbcore_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<unsigned>(::getpid())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path_.string() : (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

template <typename Fn>
double fd_central(Fn f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
}

// Star-shaped simple polygon: random radii at sorted angles around a center.
inline dbcore::Polygon random_star_polygon(dbcore::Xoshiro256pp& rng, double cx, double cy,
                                           double r_min, double r_max, int n_verts) {
  std::vector<double> angles(n_verts);
  const double base = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < n_verts; ++i)
    angles[i] = base + 2.0 * std::numbers::pi * i / n_verts + rng.uniform(-0.2, 0.2) * std::numbers::pi / n_verts;
  std::vector<dbcore::Vec2> verts;
  for (int i = 0; i < n_verts; ++i) {
    const double r = rng.uniform(r_min, r_max);
    verts.emplace_back(cx + r * std::cos(angles[i]), cy + r * std::sin(angles[i]));
  }
  return dbcore::Polygon(verts);
}

// Convex polygon: intersection-free by construction (hull of random points).
inline dbcore::Polygon random_convex_polygon(dbcore::Xoshiro256pp& rng, double cx, double cy,
                                             double radius, int n_points) {
  std::vector<double> angles(n_points);
  for (auto& a : angles) a = rng.uniform(0.0, 2.0 * std::numbers::pi);
  std::sort(angles.begin(), angles.end());
  std::vector<dbcore::Vec2> verts;
  for (double a : angles) verts.emplace_back(cx + radius * std::cos(a), cy + radius * std::sin(a));
  // Collapse near-duplicate angles so the hull stays simple.
  std::vector<dbcore::Vec2> kept;
  for (const auto& v : verts) {
    if (kept.empty() || (kept.back() - v).norm() > 1e-3 * radius) kept.push_back(v);
  }
  if (kept.size() < 3) {
    kept = {{cx + radius, cy}, {cx, cy + radius}, {cx - radius, cy}};
  }
  return dbcore::Polygon(kept);
}

inline dbcore::Polygon square(double x0, double y0, double side) {
  return dbcore::Polygon(
      {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}});
}

}  // namespace testutil
