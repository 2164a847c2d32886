#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dbcore/tensor.hpp"

namespace dbcore {

// Convolution weights for the adaptive scale fusion block. Tensors here are
// plain constants; move them onto a tape with asf_params_on_tape when
// gradients w.r.t. the parameters are needed.
struct AsfParams {
  int n_stages = 0;
  int channels = 0;
  Tensor reduce_w, reduce_b;      // [C, N*C, 3, 3], [C]
  Tensor spatial1_w, spatial1_b;  // [C/4, 1, 1, 1], [C/4]
  Tensor spatial2_w, spatial2_b;  // [1, C/4, 3, 3], [1]
  Tensor scale_w, scale_b;        // [N, C, 3, 3], [N]
};

// Uniform init in +-1/sqrt(fan_in) per conv, biases zero, reproducible for a
// fixed seed. channels must be a positive multiple of 4.
AsfParams init_asf_params(int n_stages, int channels, std::uint64_t seed);

AsfParams asf_params_on_tape(const AsfParams& params, Tape& tape);

// Per-stage spatial attention from the reduced feature map s [C,H,W]:
// channel mean -> 1x1 conv -> relu -> 3x3 conv -> sigmoid gives a spatial
// prior that is added back onto s before the 3x3 scale conv + sigmoid that
// yields one attention plane per stage, each value in (0, 1).
Tensor spatial_attention(const Tensor& s, const AsfParams& params);

// Fuses n_stages same-size [C,H,W] stage tensors: reduces their channel
// concat with a 3x3 conv, computes per-stage attention, and concatenates the
// attention-weighted stages into [N*C,H,W]. forced_attention, when set,
// replaces the whole attention map with that constant (bypass for tests).
Tensor asf_forward(const std::vector<Tensor>& stages, const AsfParams& params,
                   std::optional<double> forced_attention = std::nullopt);

// One FloatMap container per tensor plus an ASCII manifest of
// "name dim0 dim1 ..." lines in a directory.
void save_asf_params(const std::string& dir, const AsfParams& params);
AsfParams load_asf_params(const std::string& dir);

}  // namespace dbcore
