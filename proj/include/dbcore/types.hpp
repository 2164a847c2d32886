#pragma once

#include <Eigen/Core>

namespace dbcore {

// Dense H x W raster, row-major to match the on-disk map layout.
template <typename Scalar>
using Grid = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using FloatMap = Grid<double>;
using MaskMap = Grid<double>;

using Vec2 = Eigen::Vector2d;

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace dbcore
