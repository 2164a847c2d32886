#include "dbcore/tensor.hpp"

#include <cmath>
#include <stdexcept>

#include "dbcore/binarization.hpp"

namespace dbcore {
namespace {

Tape* common_tape(std::initializer_list<const Tensor*> ts, const char* op) {
  Tape* tape = nullptr;
  for (const Tensor* t : ts) {
    if (!t->tracked()) continue;
    if (tape == nullptr)
      tape = t->tape();
    else if (tape != t->tape())
      throw std::invalid_argument(std::string(op) + ": operands live on different tapes");
  }
  return tape;
}

Tensor make_result(Tape* tape, const Shape& shape, ArrayXd value, std::vector<int> parents,
                   Tape::BackwardFn fn) {
  if (tape == nullptr) return Tensor::constant(shape, std::move(value));
  return tape->emit(shape, std::move(value), std::move(parents), std::move(fn));
}

std::shared_ptr<const ArrayXd> share_value(const Tensor& t) {
  return std::make_shared<const ArrayXd>(t.value());
}

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw std::invalid_argument(std::string(op) + ": " + detail);
}

}  // namespace

void Shape::validate() const {
  if (dims_.size() > 4) throw std::invalid_argument("shape rank above 4 is not supported");
  for (int d : dims_)
    if (d <= 0) throw std::invalid_argument("shape dimensions must be positive");
}

std::string Shape::str() const {
  std::string s = "[";
  for (size_t i = 0; i < dims_.size(); ++i) {
    if (i > 0) s += ',';
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

Tensor Tensor::constant(const Shape& shape, ArrayXd data) {
  if (data.size() != shape.numel())
    throw std::invalid_argument("tensor data size does not match shape " + shape.str());
  Tensor t;
  t.shape_ = shape;
  t.value_ = std::make_shared<const ArrayXd>(std::move(data));
  return t;
}

Tensor Tensor::full(const Shape& shape, double value) {
  return constant(shape, ArrayXd::Constant(shape.numel(), value));
}

const ArrayXd& Tensor::value() const {
  if (!value_) throw std::logic_error("tensor has no value");
  return *value_;
}

double Tensor::scalar() const {
  if (shape_.numel() != 1) throw std::invalid_argument("tensor is not a scalar");
  return value()(0);
}

Tensor Tape::variable(const Shape& shape, ArrayXd data) {
  if (data.size() != shape.numel())
    throw std::invalid_argument("variable data size does not match shape " + shape.str());
  return emit(shape, std::move(data), {}, nullptr);
}

Tensor Tape::emit(const Shape& shape, ArrayXd value, std::vector<int> parents, BackwardFn fn) {
  Node node;
  node.shape = shape;
  node.parents = std::move(parents);
  node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  ran_backward_ = false;

  Tensor t;
  t.shape_ = shape;
  t.value_ = std::make_shared<const ArrayXd>(std::move(value));
  t.tape_ = this;
  t.node_ = static_cast<int>(nodes_.size()) - 1;
  return t;
}

int Tape::node_index(const Tensor& t, Tape* tape, const char* op) {
  if (!t.tracked()) return -1;
  if (t.tape() != tape)
    throw std::invalid_argument(std::string(op) + ": operand lives on a different tape");
  return t.node();
}

void Tape::backward(const Tensor& output) {
  if (output.tape_ != this || output.node_ < 0)
    throw std::invalid_argument("backward: output is not tracked on this tape");
  if (output.shape_.numel() != 1)
    throw std::invalid_argument("backward: output must be a scalar");

  grads_.assign(nodes_.size(), ArrayXd());
  for (size_t i = 0; i < nodes_.size(); ++i)
    grads_[i] = ArrayXd::Zero(nodes_[i].shape.numel());
  grads_[static_cast<size_t>(output.node_)](0) = 1.0;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    const Node& node = nodes_[static_cast<size_t>(i)];
    if (!node.backward) continue;
    std::vector<ArrayXd*> parent_grads;
    parent_grads.reserve(node.parents.size());
    for (int p : node.parents)
      parent_grads.push_back(p >= 0 ? &grads_[static_cast<size_t>(p)] : nullptr);
    node.backward(grads_[static_cast<size_t>(i)], parent_grads);
  }
  ran_backward_ = true;
}

const ArrayXd& Tape::grad(const Tensor& t) const {
  if (t.tape_ != this || t.node_ < 0)
    throw std::invalid_argument("grad: tensor is not tracked on this tape");
  if (!ran_backward_) throw std::logic_error("grad: backward has not run");
  return grads_[static_cast<size_t>(t.node_)];
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int padding) {
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  if (is.rank() != 3) shape_error("conv2d", "input must be [C,H,W], got " + is.str());
  if (ws.rank() != 4) shape_error("conv2d", "weight must be [O,C,kh,kw], got " + ws.str());
  const int ci = is.dim(0), h = is.dim(1), w = is.dim(2);
  const int co = ws.dim(0), kh = ws.dim(2), kw = ws.dim(3);
  if (ws.dim(1) != ci)
    shape_error("conv2d", "weight expects " + std::to_string(ws.dim(1)) + " input channels, got " +
                              std::to_string(ci));
  if (kh != kw || (kh != 1 && kh != 3))
    shape_error("conv2d", "kernel must be square with side 1 or 3, got " + ws.str());
  if (padding != (kh - 1) / 2)
    shape_error("conv2d", "padding must equal (k-1)/2 = " + std::to_string((kh - 1) / 2));
  if (bias.shape() != Shape{co})
    shape_error("conv2d", "bias must be [" + std::to_string(co) + "], got " + bias.shape().str());

  Tape* tape = common_tape({&input, &weight, &bias}, "conv2d");
  const ArrayXd& x = input.value();
  const ArrayXd& k = weight.value();
  const ArrayXd& b = bias.value();

  ArrayXd y(static_cast<long>(co) * h * w);
  const int pad = padding;
  for (int o = 0; o < co; ++o) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        double acc = b(o);
        for (int ch = 0; ch < ci; ++ch) {
          for (int u = 0; u < kh; ++u) {
            const int rr = r + u - pad;
            if (rr < 0 || rr >= h) continue;
            for (int v = 0; v < kw; ++v) {
              const int cc = c + v - pad;
              if (cc < 0 || cc >= w) continue;
              acc += x((static_cast<long>(ch) * h + rr) * w + cc) *
                     k(((static_cast<long>(o) * ci + ch) * kh + u) * kw + v);
            }
          }
        }
        y((static_cast<long>(o) * h + r) * w + c) = acc;
      }
    }
  }

  auto xv = share_value(input);
  auto kv = share_value(weight);
  auto fn = [=](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    ArrayXd* dx = pg[0];
    ArrayXd* dk = pg[1];
    ArrayXd* db = pg[2];
    for (int o = 0; o < co; ++o) {
      for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
          const double g = up((static_cast<long>(o) * h + r) * w + c);
          if (db != nullptr) (*db)(o) += g;
          for (int ch = 0; ch < ci; ++ch) {
            for (int u = 0; u < kh; ++u) {
              const int rr = r + u - pad;
              if (rr < 0 || rr >= h) continue;
              for (int v = 0; v < kw; ++v) {
                const int cc = c + v - pad;
                if (cc < 0 || cc >= w) continue;
                const long xi = (static_cast<long>(ch) * h + rr) * w + cc;
                const long ki = ((static_cast<long>(o) * ci + ch) * kh + u) * kw + v;
                if (dx != nullptr) (*dx)(xi) += g * (*kv)(ki);
                if (dk != nullptr) (*dk)(ki) += g * (*xv)(xi);
              }
            }
          }
        }
      }
    }
  };
  return make_result(tape, Shape{co, h, w}, std::move(y),
                     {Tape::node_index(input, tape, "conv2d"),
                      Tape::node_index(weight, tape, "conv2d"),
                      Tape::node_index(bias, tape, "conv2d")},
                     std::move(fn));
}

Tensor sigmoid(const Tensor& t) {
  Tape* tape = common_tape({&t}, "sigmoid");
  ArrayXd y(t.value().size());
  for (long i = 0; i < y.size(); ++i) y(i) = sigmoid(t.value()(i));
  auto yv = std::make_shared<const ArrayXd>(y);
  auto fn = [yv](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    if (pg[0] != nullptr) *pg[0] += up * *yv * (1.0 - *yv);
  };
  return make_result(tape, t.shape(), std::move(y), {Tape::node_index(t, tape, "sigmoid")},
                     std::move(fn));
}

Tensor relu(const Tensor& t) {
  Tape* tape = common_tape({&t}, "relu");
  ArrayXd y = t.value().max(0.0);
  auto xv = share_value(t);
  auto fn = [xv](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    if (pg[0] != nullptr) *pg[0] += up * (*xv > 0.0).cast<double>();
  };
  return make_result(tape, t.shape(), std::move(y), {Tape::node_index(t, tape, "relu")},
                     std::move(fn));
}

namespace {

// Layout for the broadcast binary ops: [batch, channels, plane], where one
// side may have a single channel spanning the other's.
struct BinLayout {
  long batch, ca, cb, cout, plane;
};

BinLayout binary_layout(const Shape& a, const Shape& b, const char* op) {
  if (a == b) {
    long plane = 1, batch = 1, ch = 1;
    if (a.rank() >= 1) ch = a.dim(0);
    if (a.rank() >= 2) plane = a.numel() / ch;
    if (a.rank() == 4) {
      batch = a.dim(0);
      ch = a.dim(1);
      plane = static_cast<long>(a.dim(2)) * a.dim(3);
    }
    if (a.rank() <= 1) {
      ch = 1;
      plane = a.numel();
    }
    return {batch, ch, ch, ch, plane};
  }
  if (a.rank() == 3 && b.rank() == 3 && a.dim(1) == b.dim(1) && a.dim(2) == b.dim(2) &&
      (a.dim(0) == 1 || b.dim(0) == 1)) {
    const long plane = static_cast<long>(a.dim(1)) * a.dim(2);
    return {1, a.dim(0), b.dim(0), std::max(a.dim(0), b.dim(0)), plane};
  }
  if (a.rank() == 4 && b.rank() == 4 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2) &&
      a.dim(3) == b.dim(3) && (a.dim(1) == 1 || b.dim(1) == 1)) {
    const long plane = static_cast<long>(a.dim(2)) * a.dim(3);
    return {a.dim(0), a.dim(1), b.dim(1), std::max(a.dim(1), b.dim(1)), plane};
  }
  shape_error(op, "incompatible shapes " + a.str() + " and " + b.str());
}

Shape broadcast_shape(const Shape& a, const Shape& b) {
  if (a == b) return a;
  return a.numel() >= b.numel() ? a : b;
}

inline long bin_index(const BinLayout& l, long side_channels, long n, long c, long p) {
  const long cc = side_channels == 1 ? 0 : c;
  return (n * side_channels + cc) * l.plane + p;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const BinLayout l = binary_layout(a.shape(), b.shape(), "add");
  Tape* tape = common_tape({&a, &b}, "add");
  const ArrayXd& av = a.value();
  const ArrayXd& bv = b.value();
  ArrayXd y(l.batch * l.cout * l.plane);
  for (long n = 0; n < l.batch; ++n)
    for (long c = 0; c < l.cout; ++c)
      for (long p = 0; p < l.plane; ++p)
        y((n * l.cout + c) * l.plane + p) =
            av(bin_index(l, l.ca, n, c, p)) + bv(bin_index(l, l.cb, n, c, p));
  auto fn = [l](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    for (long n = 0; n < l.batch; ++n)
      for (long c = 0; c < l.cout; ++c)
        for (long p = 0; p < l.plane; ++p) {
          const double g = up((n * l.cout + c) * l.plane + p);
          if (pg[0] != nullptr) (*pg[0])(bin_index(l, l.ca, n, c, p)) += g;
          if (pg[1] != nullptr) (*pg[1])(bin_index(l, l.cb, n, c, p)) += g;
        }
  };
  return make_result(tape, broadcast_shape(a.shape(), b.shape()), std::move(y),
                     {Tape::node_index(a, tape, "add"), Tape::node_index(b, tape, "add")},
                     std::move(fn));
}

Tensor mul_broadcast(const Tensor& a, const Tensor& b) {
  const BinLayout l = binary_layout(a.shape(), b.shape(), "mul_broadcast");
  Tape* tape = common_tape({&a, &b}, "mul_broadcast");
  const ArrayXd& av = a.value();
  const ArrayXd& bv = b.value();
  ArrayXd y(l.batch * l.cout * l.plane);
  for (long n = 0; n < l.batch; ++n)
    for (long c = 0; c < l.cout; ++c)
      for (long p = 0; p < l.plane; ++p)
        y((n * l.cout + c) * l.plane + p) =
            av(bin_index(l, l.ca, n, c, p)) * bv(bin_index(l, l.cb, n, c, p));
  auto avp = share_value(a);
  auto bvp = share_value(b);
  auto fn = [l, avp, bvp](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    for (long n = 0; n < l.batch; ++n)
      for (long c = 0; c < l.cout; ++c)
        for (long p = 0; p < l.plane; ++p) {
          const double g = up((n * l.cout + c) * l.plane + p);
          const long ia = bin_index(l, l.ca, n, c, p);
          const long ib = bin_index(l, l.cb, n, c, p);
          if (pg[0] != nullptr) (*pg[0])(ia) += g * (*bvp)(ib);
          if (pg[1] != nullptr) (*pg[1])(ib) += g * (*avp)(ia);
        }
  };
  return make_result(tape, broadcast_shape(a.shape(), b.shape()), std::move(y),
                     {Tape::node_index(a, tape, "mul_broadcast"),
                      Tape::node_index(b, tape, "mul_broadcast")},
                     std::move(fn));
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  const Shape& first = parts[0].shape();
  if (first.rank() != 3) shape_error("concat_channels", "inputs must be [C,H,W]");
  const int h = first.dim(1), w = first.dim(2);
  long c_total = 0;
  std::vector<const Tensor*> ptrs;
  for (const Tensor& p : parts) {
    if (p.shape().rank() != 3 || p.shape().dim(1) != h || p.shape().dim(2) != w)
      shape_error("concat_channels", "inputs must share [*,H,W], got " + p.shape().str());
    c_total += p.shape().dim(0);
    ptrs.push_back(&p);
  }
  Tape* tape = nullptr;
  for (const Tensor* p : ptrs) {
    Tape* t = common_tape({p}, "concat_channels");
    if (t != nullptr) {
      if (tape != nullptr && tape != t)
        throw std::invalid_argument("concat_channels: operands live on different tapes");
      tape = t;
    }
  }
  const long plane = static_cast<long>(h) * w;
  ArrayXd y(c_total * plane);
  std::vector<int> parents;
  std::vector<long> part_channels;
  long offset = 0;
  for (const Tensor& p : parts) {
    const long sz = p.value().size();
    y.segment(offset, sz) = p.value();
    offset += sz;
    parents.push_back(Tape::node_index(p, tape, "concat_channels"));
    part_channels.push_back(p.shape().dim(0));
  }
  auto fn = [part_channels, plane](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    long off = 0;
    for (size_t i = 0; i < part_channels.size(); ++i) {
      const long sz = part_channels[i] * plane;
      if (pg[i] != nullptr) *pg[i] += up.segment(off, sz);
      off += sz;
    }
  };
  return make_result(tape, Shape{static_cast<int>(c_total), h, w}, std::move(y),
                     std::move(parents), std::move(fn));
}

Tensor slice_channels(const Tensor& t, int begin, int count) {
  const Shape& s = t.shape();
  if (s.rank() != 3) shape_error("slice_channels", "input must be [C,H,W], got " + s.str());
  if (begin < 0 || count <= 0 || begin + count > s.dim(0))
    shape_error("slice_channels", "slice [" + std::to_string(begin) + ", " +
                                      std::to_string(begin + count) + ") out of " +
                                      std::to_string(s.dim(0)) + " channels");
  Tape* tape = common_tape({&t}, "slice_channels");
  const long plane = static_cast<long>(s.dim(1)) * s.dim(2);
  ArrayXd y = t.value().segment(begin * plane, static_cast<long>(count) * plane);
  auto fn = [begin, count, plane](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    if (pg[0] != nullptr)
      pg[0]->segment(begin * plane, static_cast<long>(count) * plane) += up;
  };
  return make_result(tape, Shape{count, s.dim(1), s.dim(2)}, std::move(y),
                     {Tape::node_index(t, tape, "slice_channels")}, std::move(fn));
}

Tensor channel_mean(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.rank() != 3) shape_error("channel_mean", "input must be [C,H,W], got " + s.str());
  const int ch = s.dim(0);
  const long plane = static_cast<long>(s.dim(1)) * s.dim(2);
  Tape* tape = common_tape({&t}, "channel_mean");
  ArrayXd y = ArrayXd::Zero(plane);
  for (int c = 0; c < ch; ++c) y += t.value().segment(static_cast<long>(c) * plane, plane);
  y /= static_cast<double>(ch);
  auto fn = [ch, plane](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    if (pg[0] == nullptr) return;
    for (int c = 0; c < ch; ++c)
      pg[0]->segment(static_cast<long>(c) * plane, plane) += up / static_cast<double>(ch);
  };
  return make_result(tape, Shape{1, s.dim(1), s.dim(2)}, std::move(y),
                     {Tape::node_index(t, tape, "channel_mean")}, std::move(fn));
}

Tensor upsample_nearest(const Tensor& t, int factor) {
  const Shape& s = t.shape();
  if (s.rank() != 3) shape_error("upsample_nearest", "input must be [C,H,W], got " + s.str());
  if (factor < 1) shape_error("upsample_nearest", "factor must be >= 1");
  const int ch = s.dim(0), h = s.dim(1), w = s.dim(2);
  const int ho = h * factor, wo = w * factor;
  Tape* tape = common_tape({&t}, "upsample_nearest");
  ArrayXd y(static_cast<long>(ch) * ho * wo);
  for (int c = 0; c < ch; ++c)
    for (int r = 0; r < ho; ++r)
      for (int x = 0; x < wo; ++x)
        y((static_cast<long>(c) * ho + r) * wo + x) =
            t.value()((static_cast<long>(c) * h + r / factor) * w + x / factor);
  auto fn = [ch, h, w, ho, wo, factor](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    if (pg[0] == nullptr) return;
    for (int c = 0; c < ch; ++c)
      for (int r = 0; r < ho; ++r)
        for (int x = 0; x < wo; ++x)
          (*pg[0])((static_cast<long>(c) * h + r / factor) * w + x / factor) +=
              up((static_cast<long>(c) * ho + r) * wo + x);
  };
  return make_result(tape, Shape{ch, ho, wo}, std::move(y),
                     {Tape::node_index(t, tape, "upsample_nearest")}, std::move(fn));
}

Tensor sum(const Tensor& t) {
  Tape* tape = common_tape({&t}, "sum");
  ArrayXd y(1);
  y(0) = t.value().sum();
  auto fn = [](const ArrayXd& up, const std::vector<ArrayXd*>& pg) {
    if (pg[0] != nullptr) *pg[0] += up(0);
  };
  return make_result(tape, Shape{}, std::move(y), {Tape::node_index(t, tape, "sum")},
                     std::move(fn));
}

double grad_check(const TensorFn& fn, const std::vector<std::pair<Shape, ArrayXd>>& inputs,
                  double eps) {
  if (eps <= 0.0) throw std::invalid_argument("grad_check: eps must be positive");
  Tape tape;
  std::vector<Tensor> vars;
  vars.reserve(inputs.size());
  for (const auto& [shape, data] : inputs) vars.push_back(tape.variable(shape, data));
  Tensor out = fn(tape, vars);
  if (out.shape().numel() != 1)
    throw std::invalid_argument("grad_check: function output must be a scalar");
  tape.backward(out);
  std::vector<ArrayXd> analytic;
  analytic.reserve(vars.size());
  for (const Tensor& v : vars) analytic.push_back(tape.grad(v));

  auto eval = [&fn](const std::vector<std::pair<Shape, ArrayXd>>& pts) {
    Tape t;
    std::vector<Tensor> vs;
    vs.reserve(pts.size());
    for (const auto& [shape, data] : pts) vs.push_back(t.variable(shape, data));
    return fn(t, vs).scalar();
  };

  double worst = 0.0;
  std::vector<std::pair<Shape, ArrayXd>> probe = inputs;
  for (size_t i = 0; i < inputs.size(); ++i) {
    for (long j = 0; j < inputs[i].second.size(); ++j) {
      const double base = inputs[i].second(j);
      probe[i].second(j) = base + eps;
      const double hi = eval(probe);
      probe[i].second(j) = base - eps;
      const double lo = eval(probe);
      probe[i].second(j) = base;
      const double fd = (hi - lo) / (2.0 * eps);
      const double err = std::abs(analytic[i](j) - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace dbcore
