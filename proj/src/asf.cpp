#include "dbcore/asf.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dbcore/io.hpp"
#include "dbcore/rng.hpp"

namespace dbcore {
namespace {

Tensor uniform_tensor(const Shape& shape, int fan_in, Xoshiro256pp& rng) {
  const double half_width = 1.0 / std::sqrt(static_cast<double>(fan_in));
  ArrayXd data(shape.numel());
  for (long i = 0; i < data.size(); ++i) data(i) = rng.uniform(-half_width, half_width);
  return Tensor::constant(shape, std::move(data));
}

std::vector<std::pair<std::string, const Tensor*>> named_tensors(const AsfParams& p) {
  return {{"reduce_w", &p.reduce_w},     {"reduce_b", &p.reduce_b},
          {"spatial1_w", &p.spatial1_w}, {"spatial1_b", &p.spatial1_b},
          {"spatial2_w", &p.spatial2_w}, {"spatial2_b", &p.spatial2_b},
          {"scale_w", &p.scale_w},       {"scale_b", &p.scale_b}};
}

}  // namespace

AsfParams init_asf_params(int n_stages, int channels, std::uint64_t seed) {
  if (n_stages < 1) throw std::invalid_argument("init_asf_params: need at least one stage");
  if (channels < 4 || channels % 4 != 0)
    throw std::invalid_argument("init_asf_params: channels must be a positive multiple of 4");
  const int mid = channels / 4;
  Xoshiro256pp rng(seed);
  AsfParams p;
  p.n_stages = n_stages;
  p.channels = channels;
  // Weight draw order is part of the reproducibility contract.
  p.reduce_w = uniform_tensor(Shape{channels, n_stages * channels, 3, 3},
                              n_stages * channels * 9, rng);
  p.spatial1_w = uniform_tensor(Shape{mid, 1, 1, 1}, 1, rng);
  p.spatial2_w = uniform_tensor(Shape{1, mid, 3, 3}, mid * 9, rng);
  p.scale_w = uniform_tensor(Shape{n_stages, channels, 3, 3}, channels * 9, rng);
  p.reduce_b = Tensor::full(Shape{channels}, 0.0);
  p.spatial1_b = Tensor::full(Shape{mid}, 0.0);
  p.spatial2_b = Tensor::full(Shape{1}, 0.0);
  p.scale_b = Tensor::full(Shape{n_stages}, 0.0);
  return p;
}

AsfParams asf_params_on_tape(const AsfParams& params, Tape& tape) {
  AsfParams p = params;
  for (Tensor* t : {&p.reduce_w, &p.reduce_b, &p.spatial1_w, &p.spatial1_b, &p.spatial2_w,
                    &p.spatial2_b, &p.scale_w, &p.scale_b})
    *t = tape.variable(t->shape(), t->value());
  return p;
}

Tensor spatial_attention(const Tensor& s, const AsfParams& params) {
  const Tensor m = channel_mean(s);
  const Tensor hidden = relu(conv2d(m, params.spatial1_w, params.spatial1_b, 0));
  const Tensor prior = sigmoid(conv2d(hidden, params.spatial2_w, params.spatial2_b, 1));
  const Tensor enhanced = add(s, prior);
  return sigmoid(conv2d(enhanced, params.scale_w, params.scale_b, 1));
}

Tensor asf_forward(const std::vector<Tensor>& stages, const AsfParams& params,
                   std::optional<double> forced_attention) {
  if (static_cast<int>(stages.size()) != params.n_stages)
    throw std::invalid_argument("asf_forward: expected " + std::to_string(params.n_stages) +
                                " stages, got " + std::to_string(stages.size()));
  const Shape want{params.channels, stages[0].shape().dim(1), stages[0].shape().dim(2)};
  for (const Tensor& st : stages)
    if (st.shape() != want)
      throw std::invalid_argument("asf_forward: stage shape " + st.shape().str() +
                                  " does not match " + want.str());

  const Tensor x = concat_channels(stages);
  const Tensor s = conv2d(x, params.reduce_w, params.reduce_b, 1);
  const Tensor attention =
      forced_attention.has_value()
          ? Tensor::full(Shape{params.n_stages, want.dim(1), want.dim(2)}, *forced_attention)
          : spatial_attention(s, params);

  std::vector<Tensor> weighted;
  weighted.reserve(stages.size());
  for (int i = 0; i < params.n_stages; ++i)
    weighted.push_back(mul_broadcast(slice_channels(attention, i, 1), stages[static_cast<size_t>(i)]));
  return concat_channels(weighted);
}

void save_asf_params(const std::string& dir, const AsfParams& params) {
  std::filesystem::create_directories(dir);
  std::string manifest;
  for (const auto& [name, tensor] : named_tensors(params)) {
    manifest += name;
    for (int i = 0; i < tensor->shape().rank(); ++i)
      manifest += ' ' + std::to_string(tensor->shape().dim(i));
    manifest += '\n';
    const ArrayXd& v = tensor->value();
    FloatMap row(1, v.size());
    for (long i = 0; i < v.size(); ++i) row(0, i) = v(i);
    write_float_map(dir + "/" + name + ".f32map", row);
  }
  write_text_file(dir + "/manifest.txt", manifest);
}

AsfParams load_asf_params(const std::string& dir) {
  const std::string manifest = read_text_file(dir + "/manifest.txt");
  std::istringstream lines(manifest);
  std::string line;
  AsfParams p;
  std::vector<std::pair<std::string, Tensor*>> slots = {
      {"reduce_w", &p.reduce_w},     {"reduce_b", &p.reduce_b},
      {"spatial1_w", &p.spatial1_w}, {"spatial1_b", &p.spatial1_b},
      {"spatial2_w", &p.spatial2_w}, {"spatial2_b", &p.spatial2_b},
      {"scale_w", &p.scale_w},       {"scale_b", &p.scale_b}};
  size_t next = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string name;
    fields >> name;
    std::vector<int> dims;
    int d = 0;
    while (fields >> d) dims.push_back(d);
    if (next >= slots.size() || name != slots[next].first)
      throw std::runtime_error(dir + "/manifest.txt: unexpected tensor '" + name + "'");
    const Shape shape(dims);
    const FloatMap row = read_float_map(dir + "/" + name + ".f32map");
    if (row.size() != shape.numel())
      throw std::runtime_error(dir + "/" + name + ".f32map: size does not match manifest shape");
    ArrayXd data(row.size());
    for (long i = 0; i < row.size(); ++i) data(i) = row.data()[i];
    *slots[next].second = Tensor::constant(shape, std::move(data));
    ++next;
  }
  if (next != slots.size())
    throw std::runtime_error(dir + "/manifest.txt: missing tensors");
  p.channels = p.reduce_w.shape().dim(0);
  p.n_stages = p.scale_w.shape().dim(0);
  return p;
}

}  // namespace dbcore
