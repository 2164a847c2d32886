#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dbcore/rng.hpp"
#include "dbcore/tensor.hpp"
#include "helpers.hpp"

using dbcore::ArrayXd;
using dbcore::Shape;
using dbcore::Tape;
using dbcore::Tensor;

namespace {

ArrayXd random_array(dbcore::Xoshiro256pp& rng, long n, double lo, double hi) {
  ArrayXd a(n);
  for (long i = 0; i < n; ++i) a[i] = rng.uniform(lo, hi);
  return a;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("shape basics") {
  Shape s{4, 8, 6, 6};
  CHECK(s.rank() == 4);
  CHECK(s.numel() == 4 * 8 * 6 * 6);
  CHECK(Shape{} == Shape{});
  CHECK(Shape{}.numel() == 1);
  CHECK(Shape{2, 3} != Shape{3, 2});
  CHECK_THROWS_AS(Shape({0, 3}), std::invalid_argument);
  CHECK_THROWS_AS(Shape({1, 2, 3, 4, 5}), std::invalid_argument);
}

TEST_CASE("tensor constants and tape variables") {
  const Tensor c = Tensor::full({2, 3}, 1.5);
  CHECK(!c.tracked());
  CHECK(c.value()[0] == 1.5);
  CHECK(c.value().size() == 6);
  Tape tape;
  const Tensor v = tape.variable({2}, ArrayXd::LinSpaced(2, 0.0, 1.0));
  CHECK(v.tracked());
  CHECK_THROWS_AS(Tensor::constant({2, 2}, ArrayXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("backward on a small composite graph") {
  Tape tape;
  const Tensor x = tape.variable({3}, [] {
    ArrayXd a(3);
    a << 0.2, -0.4, 1.1;
    return a;
  }());
  const Tensor y = dbcore::sum(dbcore::mul_broadcast(dbcore::sigmoid(x), dbcore::sigmoid(x)));
  tape.backward(y);
  const ArrayXd& g = tape.grad(x);
  for (int i = 0; i < 3; ++i) {
    const double s = 1.0 / (1.0 + std::exp(-x.value()[i]));
    CHECK(g[i] == doctest::Approx(2.0 * s * s * (1.0 - s)).epsilon(1e-12));
  }
}

TEST_CASE("backward requires a tracked scalar and resets between runs") {
  Tape tape;
  const Tensor x = tape.variable({2}, ArrayXd::Constant(2, 0.3));
  const Tensor y = dbcore::sum(dbcore::relu(x));
  CHECK_THROWS_AS(tape.backward(dbcore::relu(x)), std::invalid_argument);  // not scalar
  CHECK_THROWS_AS(tape.grad(x), std::logic_error);  // backward not run yet
  tape.backward(y);
  CHECK(tape.grad(x)[0] == 1.0);
  tape.backward(y);  // second run must not double-accumulate
  CHECK(tape.grad(x)[0] == 1.0);
}

TEST_CASE("convolution forward oracle") {
  Tape tape;
  // One channel, 2x2 input, identity-ish 3x3 kernel probing a neighbor.
  ArrayXd img(4);
  img << 1, 2, 3, 4;
  ArrayXd w = ArrayXd::Zero(9);
  w[5] = 1.0;  // kernel (1,2): right neighbor
  const Tensor out = dbcore::conv2d(tape.variable({1, 2, 2}, img),
                                    tape.variable({1, 1, 3, 3}, w),
                                    tape.variable({1}, ArrayXd::Constant(1, 10.0)), 1);
  REQUIRE(out.shape() == Shape{1, 2, 2});
  CHECK(out.value()[0] == 12.0);  // right of (0,0) is 2, plus bias
  CHECK(out.value()[1] == 10.0);  // right of (0,1) is zero padding
  CHECK(out.value()[2] == 14.0);
  CHECK(out.value()[3] == 10.0);
}

TEST_CASE("per-op gradients match finite differences") {
  dbcore::Xoshiro256pp rng(77);
  const auto check = [&](const dbcore::TensorFn& fn,
                         std::vector<std::pair<Shape, ArrayXd>> inputs) {
    CHECK(dbcore::grad_check(fn, inputs) <= 1e-4);
  };

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::conv2d(in[0], in[1], in[2], 1));
        },
        {{Shape{2, 4, 5}, random_array(rng, 40, -1, 1)},
         {Shape{3, 2, 3, 3}, random_array(rng, 54, -1, 1)},
         {Shape{3}, random_array(rng, 3, -1, 1)}});

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::conv2d(in[0], in[1], in[2], 0));
        },
        {{Shape{3, 4, 4}, random_array(rng, 48, -1, 1)},
         {Shape{2, 3, 1, 1}, random_array(rng, 6, -1, 1)},
         {Shape{2}, random_array(rng, 2, -1, 1)}});

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::sigmoid(in[0]));
        },
        {{Shape{2, 3, 3}, random_array(rng, 18, -2, 2)}});

  // Keep ReLU inputs away from the kink.
  ArrayXd relu_in = random_array(rng, 18, 0.1, 2.0);
  for (long i = 0; i < 18; i += 2) relu_in[i] = -relu_in[i];
  check([](Tape&, const std::vector<Tensor>& in) { return dbcore::sum(dbcore::relu(in[0])); },
        {{Shape{2, 3, 3}, relu_in}});

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::mul_broadcast(in[0], in[1]));
        },
        {{Shape{3, 2, 2}, random_array(rng, 12, -1, 1)},
         {Shape{1, 2, 2}, random_array(rng, 4, -1, 1)}});

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::add(in[0], in[1]));
        },
        {{Shape{4, 2, 3, 3}, random_array(rng, 72, -1, 1)},
         {Shape{4, 1, 3, 3}, random_array(rng, 36, -1, 1)}});

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::slice_channels(dbcore::concat_channels({in[0], in[1]}), 1, 2));
        },
        {{Shape{2, 3, 2}, random_array(rng, 12, -1, 1)},
         {Shape{1, 3, 2}, random_array(rng, 6, -1, 1)}});

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::channel_mean(in[0]));
        },
        {{Shape{4, 3, 2}, random_array(rng, 24, -1, 1)}});

  check([](Tape&, const std::vector<Tensor>& in) {
          return dbcore::sum(dbcore::mul_broadcast(dbcore::upsample_nearest(in[0], 2), in[1]));
        },
        {{Shape{2, 2, 3}, random_array(rng, 12, -1, 1)},
         {Shape{2, 4, 6}, random_array(rng, 48, -1, 1)}});
}

TEST_CASE("upsample repeats pixels in blocks") {
  Tape tape;
  ArrayXd img(4);
  img << 1, 2, 3, 4;
  const Tensor up = dbcore::upsample_nearest(tape.variable({1, 2, 2}, img), 2);
  REQUIRE(up.shape() == Shape{1, 4, 4});
  const ArrayXd& v = up.value();
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 1.0);
  CHECK(v[2] == 2.0);
  CHECK(v[4] == 1.0);
  CHECK(v[8] == 3.0);
  CHECK(v[15] == 4.0);
}

TEST_CASE("channel concat and slice round trip") {
  Tape tape;
  const Tensor a = tape.variable({2, 2, 2}, ArrayXd::LinSpaced(8, 0, 7));
  const Tensor b = tape.variable({1, 2, 2}, ArrayXd::LinSpaced(4, 10, 13));
  const Tensor cat = dbcore::concat_channels({a, b});
  REQUIRE(cat.shape() == Shape{3, 2, 2});
  const Tensor back = dbcore::slice_channels(cat, 2, 1);
  CHECK((back.value() == b.value()).all());
  CHECK_THROWS_AS(dbcore::slice_channels(cat, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(dbcore::concat_channels({}), std::invalid_argument);
}

TEST_CASE("shape validation on ops") {
  Tape tape;
  const Tensor x = tape.variable({2, 3, 3}, ArrayXd::Zero(18));
  const Tensor w = tape.variable({1, 2, 3, 3}, ArrayXd::Zero(18));
  const Tensor bias = tape.variable({1}, ArrayXd::Zero(1));
  CHECK_THROWS_AS(dbcore::conv2d(x, w, bias, 0), std::invalid_argument);  // padding mismatch
  const Tensor w5 = tape.variable({1, 2, 4, 4}, ArrayXd::Zero(32));
  CHECK_THROWS_AS(dbcore::conv2d(x, w5, bias, 1), std::invalid_argument);  // kernel size
  const Tensor other = tape.variable({3, 3, 3}, ArrayXd::Zero(27));
  CHECK_THROWS_AS(dbcore::add(x, other), std::invalid_argument);
  Tape tape2;
  const Tensor foreign = tape2.variable({2, 3, 3}, ArrayXd::Zero(18));
  CHECK_THROWS_AS(dbcore::add(x, foreign), std::invalid_argument);
}

TEST_CASE("constants participate without receiving gradients") {
  Tape tape;
  const Tensor x = tape.variable({2}, ArrayXd::Constant(2, 0.5));
  const Tensor c = Tensor::full({2}, 3.0);
  const Tensor y = dbcore::sum(dbcore::mul_broadcast(x, c));
  tape.backward(y);
  CHECK(tape.grad(x)[0] == 3.0);
  CHECK_THROWS_AS(tape.grad(c), std::invalid_argument);
}

}  // TEST_SUITE
