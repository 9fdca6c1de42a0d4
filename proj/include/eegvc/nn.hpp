#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "eegvc/rng.hpp"
#include "eegvc/tensor.hpp"
#include "eegvc/types.hpp"

namespace eegvc {

enum class Padding { kSame, kValid };

struct Activation {
  enum class Kind { kNone, kLeakyRelu };
  Kind kind = Kind::kNone;
  double slope = 0.2;

  static Activation none() { return {Kind::kNone, 0.0}; }
  static Activation leaky_relu(double slope) { return {Kind::kLeakyRelu, slope}; }
};

struct ConvSpec {
  std::size_t filters = 1;
  std::size_t kh = 1, kw = 1;  // kernel over (rows, time)
  std::size_t sh = 1, sw = 1;
  Padding padding = Padding::kValid;
  Activation act;
};

// Output extent and low-side pad of one convolution axis.
//   Same:  out = ceil(in / s), total pad = max((out-1)*s + k - in, 0),
//          pad_lo = floor(total / 2)
//   Valid: out = floor((in - k) / s) + 1, no padding (requires in >= k)
struct AxisGeom {
  std::size_t out = 0;
  std::size_t pad_lo = 0;
};
AxisGeom conv_axis(std::size_t in, std::size_t k, std::size_t s, Padding p);

// Transposed convolution output extent: the adjoint of conv_axis, i.e. the
// input extent of the forward convolution that produces `in`.
//   Valid: out = (in - 1) * s + k
//   Same:  out = in * s
AxisGeom conv_transpose_axis(std::size_t in, std::size_t k, std::size_t s, Padding p);

// Weight layouts (row-major):
//   conv2d:            w[(kh, kw, in_features, filters)]
//   conv_transpose2d:  w[(kh, kw, filters, in_features)]
// bias[filters] in both cases.
struct ConvParams {
  std::vector<double> w;
  std::vector<double> b;
  void zero();
};

struct ConvCache {
  std::array<std::size_t, 4> in_dims{};
  AxisGeom gr, gt;       // geometry actually used on (rows, time)
  Tensor4 preact;        // stored only when the layer has an activation
};

// Cross-correlation (no kernel flip) + bias + activation.
Tensor4 conv2d_forward(const Tensor4& in, const ConvParams& p, const ConvSpec& s,
                       ConvCache* cache = nullptr);

// upstream = dL/d(output). Returns dL/d(input); accumulates into *pg when given.
Tensor4 conv2d_backward(const Tensor4& in, const ConvCache& c, const ConvParams& p,
                        const ConvSpec& s, const Tensor4& upstream, ConvParams* pg);

// Exact adjoint of conv2d_forward's linear map (gradient-of-convolution
// semantics), then bias + activation.
Tensor4 conv_transpose2d_forward(const Tensor4& in, const ConvParams& p,
                                 const ConvSpec& s, ConvCache* cache = nullptr);

Tensor4 conv_transpose2d_backward(const Tensor4& in, const ConvCache& c,
                                  const ConvParams& p, const ConvSpec& s,
                                  const Tensor4& upstream, ConvParams* pg);

Tensor4 leaky_relu(const Tensor4& x, double slope);
Tensor4 leaky_relu_backward(const Tensor4& preact, const Tensor4& upstream, double slope);

// ---- bidirectional LSTM ----

// Packed per-direction parameters, gate order [input, forget, cell, output]:
//   wx: input_dim x 4*hidden, wh: hidden x 4*hidden, b: 4*hidden
struct LstmDirParams {
  std::vector<double> wx, wh, b;
};

struct BiLstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  LstmDirParams fwd, bwd;
  void zero();
};

struct LstmDirCache {
  Mat gates;   // T x 4H, post-nonlinearity
  Mat c;       // T x H
  Mat tanh_c;  // T x H
  Mat h;       // T x H (processing order)
};

struct BiLstmCache {
  LstmDirCache fwd, bwd;
};

// seq is T x D; output is T x 2H, forward half first, both halves aligned to
// the original time axis.
Mat bilstm_forward(const Mat& seq, const BiLstmParams& p, BiLstmCache* cache = nullptr);

Mat bilstm_backward(const Mat& seq, const BiLstmCache& c, const BiLstmParams& p,
                    const Mat& upstream, BiLstmParams* pg);

// ---- initialization ----

// Convolution weights ~ N(0, 2/fan_in) with fan_in = kh*kw*in_features; biases 0.
ConvParams init_conv(const ConvSpec& s, std::size_t in_features, Rng& rng);
ConvParams init_conv_transpose(const ConvSpec& s, std::size_t in_features, Rng& rng);

// LSTM weights ~ N(0, 1/fan_in) per matrix; forget-gate bias 1, others 0.
BiLstmParams init_bilstm(std::size_t input_dim, std::size_t hidden, Rng& rng);

}  // namespace eegvc
