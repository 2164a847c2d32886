#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace dbcore {

using ArrayXd = Eigen::ArrayXd;

// Dense tensor shape, rank 0 (scalar) through 4.
class Shape {
 public:
  Shape() = default;
  Shape(std::initializer_list<int> dims) : dims_(dims) { validate(); }
  explicit Shape(std::vector<int> dims) : dims_(std::move(dims)) { validate(); }

  int rank() const { return static_cast<int>(dims_.size()); }
  int dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  long numel() const {
    long n = 1;
    for (int d : dims_) n *= d;
    return n;
  }
  bool operator==(const Shape& o) const { return dims_ == o.dims_; }
  bool operator!=(const Shape& o) const { return !(*this == o); }
  std::string str() const;

 private:
  void validate() const;
  std::vector<int> dims_;
};

class Tape;

// Immutable value, optionally tracked on a tape. Data lives in a flat
// row-major array (last dimension fastest).
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(const Shape& shape, ArrayXd data);
  static Tensor full(const Shape& shape, double value);

  const Shape& shape() const { return shape_; }
  const ArrayXd& value() const;
  double scalar() const;  // rank-0/numel-1 access
  bool tracked() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int node() const { return node_; }

 private:
  friend class Tape;
  Shape shape_;
  std::shared_ptr<const ArrayXd> value_;
  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode tape. Operations append nodes in creation order; backward
// walks them exactly once in reverse, accumulating into per-node gradients.
class Tape {
 public:
  using BackwardFn = std::function<void(const ArrayXd& upstream, const std::vector<ArrayXd*>& parent_grads)>;

  Tensor variable(const Shape& shape, ArrayXd data);

  // Seeds d(output)/d(output) = 1 and propagates. The output must be a
  // scalar tracked on this tape, else std::invalid_argument.
  void backward(const Tensor& output);

  // Gradient of the last backward() output w.r.t. t. Throws if t is not
  // tracked on this tape or backward has not run.
  const ArrayXd& grad(const Tensor& t) const;

  int node_count() const { return static_cast<int>(nodes_.size()); }

  // Used by the op implementations.
  Tensor emit(const Shape& shape, ArrayXd value, std::vector<int> parents, BackwardFn fn);
  static int node_index(const Tensor& t, Tape* tape, const char* op);

 private:
  struct Node {
    Shape shape;
    std::vector<int> parents;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
  std::vector<ArrayXd> grads_;
  bool ran_backward_ = false;
};

// All ops run eagerly on the values and record backward closures when any
// operand is tracked. Mixing tensors from different tapes throws.

// input [C,H,W], weight [O,C,kh,kw] with kh
// == kw in {1,3}, bias [O], zero padding fixed at (kh-1)/2.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int padding);
Tensor sigmoid(const Tensor& t);
Tensor relu(const Tensor& t);
// Elementwise; equal shapes, or one operand with a size-1 channel dimension
// broadcast across the other's channels (rank 3 dim 0, rank 4 dim 1).
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul_broadcast(const Tensor& a, const Tensor& b);
Tensor concat_channels(const std::vector<Tensor>& parts);  // rank 3, shared H,W
Tensor slice_channels(const Tensor& t, int begin, int count);
Tensor channel_mean(const Tensor& t);  // [C,H,W] -> [1,H,W]
Tensor upsample_nearest(const Tensor& t, int factor);
Tensor sum(const Tensor& t);  // -> scalar

// Central-difference check of fn's gradient at the given inputs. Returns the
// max over input coordinates of |analytic - fd| / max(1, |fd|).
using TensorFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;
double grad_check(const TensorFn& fn, const std::vector<std::pair<Shape, ArrayXd>>& inputs,
                  double eps = 1e-4);

}  // namespace dbcore
