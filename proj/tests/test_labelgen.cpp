#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dbcore/geometry.hpp"
#include "dbcore/labelgen.hpp"
#include "helpers.hpp"

using dbcore::FloatMap;

TEST_SUITE("labelgen") {

TEST_CASE("rasterization uses pixel centers") {
  const auto block = dbcore::rasterize(testutil::square(2.1, 2.1, 5.8), 10, 10);
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c) {
      const bool inside = r >= 2 && r <= 7 && c >= 2 && c <= 7;
      CHECK(block(r, c) == (inside ? 1.0 : 0.0));
    }
  // Integer-aligned square: boundary pixels count as inside.
  const auto exact = dbcore::rasterize(testutil::square(0, 0, 3), 4, 4);
  CHECK(exact.sum() == 9.0);
}

TEST_CASE("square labels match the hand-derived shrink and band") {
  const auto sq = testutil::square(5, 5, 10);
  const auto bundle = dbcore::generate_labels({sq}, 20, 20);
  const double D = dbcore::shrink_offset(sq, 0.4);
  CHECK(std::abs(D - 2.1) < 1e-9);

  const auto shrunk = dbcore::offset(sq, -D);
  REQUIRE(shrunk.size() == 1);
  const FloatMap expected = dbcore::rasterize(shrunk[0], 20, 20);
  CHECK((bundle.prob_target == expected).all());
  CHECK(bundle.prob_mask.minCoeff() == 1.0);

  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) {
      const dbcore::Vec2 p(c + 0.5, r + 0.5);
      const double d = dbcore::distance_to_boundary(sq, p);
      if (bundle.thresh_mask(r, c) != 0.0) {
        const double expect = 0.7 - 0.4 * std::min(d / D, 1.0);
        CHECK(std::abs(bundle.thresh_target(r, c) - expect) < 1e-12);
        CHECK(bundle.thresh_target(r, c) >= 0.3);
        CHECK(bundle.thresh_target(r, c) <= 0.7);
      } else {
        CHECK(bundle.thresh_target(r, c) == 0.3);  // background holds t_min
      }
    }
}

TEST_CASE("band mask covers the dilated region only") {
  const auto sq = testutil::square(5, 5, 10);
  const auto bundle = dbcore::generate_labels({sq}, 20, 20);
  const double D = dbcore::shrink_offset(sq, 0.4);
  const auto dilated = dbcore::offset(sq, D);
  REQUIRE(dilated.size() == 1);
  const FloatMap expected = dbcore::rasterize(dilated[0], 20, 20);
  CHECK((bundle.thresh_mask == expected).all());
}

TEST_CASE("tiny instances contribute no positive pixels but keep a band") {
  // Thin sliver: the shrunk core is a hair-thin strip that misses every pixel
  // center, so the probability target stays empty while the threshold band
  // around the instance still forms.
  const dbcore::Polygon sliver({{2, 2}, {18, 2}, {18, 2.5}, {2, 2.5}});
  const auto bundle = dbcore::generate_labels({sliver}, 20, 20);
  CHECK(bundle.prob_target.maxCoeff() == 0.0);
  CHECK(bundle.thresh_mask.maxCoeff() == 1.0);
  CHECK(bundle.prob_mask.minCoeff() == 1.0);
}

TEST_CASE("integer translation shifts all maps by the same offset") {
  const auto base = testutil::square(4, 4, 7);
  const auto moved = testutil::square(6, 9, 7);  // +2 in x, +5 in y
  const auto a = dbcore::generate_labels({base}, 30, 30);
  const auto b = dbcore::generate_labels({moved}, 30, 30);
  for (int r = 0; r < 20; ++r)
    for (int c = 0; c < 20; ++c) {
      CHECK(a.prob_target(r, c) == b.prob_target(r + 5, c + 2));
      CHECK(a.thresh_target(r, c) == b.thresh_target(r + 5, c + 2));
      CHECK(a.thresh_mask(r, c) == b.thresh_mask(r + 5, c + 2));
    }
}

TEST_CASE("overlapping bands keep the pixelwise maximum") {
  const auto a = testutil::square(2, 2, 8);
  const auto b = testutil::square(11, 2, 8);
  const auto joint = dbcore::generate_labels({a, b}, 20, 24);
  const auto only_a = dbcore::generate_labels({a}, 20, 24);
  const auto only_b = dbcore::generate_labels({b}, 20, 24);
  const FloatMap expected = only_a.thresh_target.max(only_b.thresh_target);
  CHECK((joint.thresh_target == expected).all());
  const FloatMap expected_mask = only_a.thresh_mask.max(only_b.thresh_mask);
  CHECK((joint.thresh_mask == expected_mask).all());
  const FloatMap expected_prob = only_a.prob_target.max(only_b.prob_target);
  CHECK((joint.prob_target == expected_prob).all());
}

TEST_CASE("empty polygon list gives an all-background bundle") {
  const auto bundle = dbcore::generate_labels({}, 8, 9);
  CHECK(bundle.prob_target.rows() == 8);
  CHECK(bundle.prob_target.cols() == 9);
  CHECK(bundle.prob_target.maxCoeff() == 0.0);
  CHECK(bundle.prob_mask.minCoeff() == 1.0);
  CHECK(bundle.thresh_mask.maxCoeff() == 0.0);
}

TEST_CASE("config validation") {
  const auto sq = testutil::square(2, 2, 5);
  CHECK_THROWS_AS(dbcore::generate_labels({sq}, 0, 10, {}), std::invalid_argument);
  CHECK_THROWS_AS(dbcore::generate_labels({sq}, 10, 10, {1.2, 0.3, 0.7}),
                  std::invalid_argument);
  CHECK_THROWS_AS(dbcore::generate_labels({sq}, 10, 10, {0.4, 0.7, 0.3}),
                  std::invalid_argument);
}

}  // TEST_SUITE
