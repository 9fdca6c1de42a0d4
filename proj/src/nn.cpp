#include "eegvc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "eegvc/la.hpp"

namespace eegvc {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_spec(const ConvSpec& s) {
  if (s.filters < 1 || s.kh < 1 || s.kw < 1 || s.sh < 1 || s.sw < 1) {
    throw Error("conv spec: filters and kernel/stride extents must be >= 1");
  }
}

// Gather/scatter geometry shared by convolution and its adjoint. `grid_*` is
// the lattice of kernel placements (the conv output), `src_*` the extent of
// the array being gathered from (the conv input).
struct Geom {
  std::size_t kh, kw, sh, sw;
  std::size_t pr, pt;
  std::size_t grid_r, grid_t;
  std::size_t src_r, src_t;
  std::size_t ch;
};

// cols is (B * grid_r * grid_t) x (kh * kw * ch), zero-filled out of bounds.
void im2col(const Tensor4& src, const Geom& g, std::vector<double>& cols) {
  const std::size_t B = src.dims[0];
  const std::size_t patch = g.kh * g.kw * g.ch;
  cols.assign(B * g.grid_r * g.grid_t * patch, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t gr = 0; gr < g.grid_r; ++gr) {
      for (std::size_t u = 0; u < g.kh; ++u) {
        const std::ptrdiff_t ir =
            static_cast<std::ptrdiff_t>(gr * g.sh + u) - static_cast<std::ptrdiff_t>(g.pr);
        if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(g.src_r)) continue;
        for (std::size_t gt = 0; gt < g.grid_t; ++gt) {
          double* dst = cols.data() +
                        (((b * g.grid_r + gr) * g.grid_t + gt) * g.kh + u) * g.kw * g.ch;
          for (std::size_t v = 0; v < g.kw; ++v) {
            const std::ptrdiff_t it = static_cast<std::ptrdiff_t>(gt * g.sw + v) -
                                      static_cast<std::ptrdiff_t>(g.pt);
            if (it < 0 || it >= static_cast<std::ptrdiff_t>(g.src_t)) continue;
            const double* s = src.data.data() +
                              src.index(b, static_cast<std::size_t>(ir),
                                        static_cast<std::size_t>(it), 0);
            std::memcpy(dst + v * g.ch, s, g.ch * sizeof(double));
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds cols back into dst.
void col2im_add(const std::vector<double>& cols, const Geom& g, Tensor4& dst) {
  const std::size_t B = dst.dims[0];
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t gr = 0; gr < g.grid_r; ++gr) {
      for (std::size_t u = 0; u < g.kh; ++u) {
        const std::ptrdiff_t ir =
            static_cast<std::ptrdiff_t>(gr * g.sh + u) - static_cast<std::ptrdiff_t>(g.pr);
        if (ir < 0 || ir >= static_cast<std::ptrdiff_t>(g.src_r)) continue;
        for (std::size_t gt = 0; gt < g.grid_t; ++gt) {
          const double* src = cols.data() +
                              (((b * g.grid_r + gr) * g.grid_t + gt) * g.kh + u) * g.kw * g.ch;
          for (std::size_t v = 0; v < g.kw; ++v) {
            const std::ptrdiff_t it = static_cast<std::ptrdiff_t>(gt * g.sw + v) -
                                      static_cast<std::ptrdiff_t>(g.pt);
            if (it < 0 || it >= static_cast<std::ptrdiff_t>(g.src_t)) continue;
            double* d = dst.data.data() +
                        dst.index(b, static_cast<std::size_t>(ir),
                                  static_cast<std::size_t>(it), 0);
            const double* s = src + v * g.ch;
            for (std::size_t c = 0; c < g.ch; ++c) d[c] += s[c];
          }
        }
      }
    }
  }
}

void add_bias(Tensor4& t, const std::vector<double>& bias) {
  const std::size_t f = t.dims[3];
  for (std::size_t i = 0; i < t.data.size(); i += f) {
    for (std::size_t c = 0; c < f; ++c) t.data[i + c] += bias[c];
  }
}

void apply_activation(Tensor4& t, const Activation& act, ConvCache* cache) {
  if (act.kind == Activation::Kind::kNone) return;
  if (cache) cache->preact = t;
  for (double& x : t.data) {
    if (x < 0.0) x *= act.slope;
  }
}

// dL/d(preact) given upstream = dL/d(output); identity when there is no activation.
Tensor4 activation_backward(const Activation& act, const ConvCache& c,
                            const Tensor4& upstream) {
  if (act.kind == Activation::Kind::kNone) return upstream;
  return leaky_relu_backward(c.preact, upstream, act.slope);
}

void bias_grad(const Tensor4& d_pre, std::vector<double>& db) {
  const std::size_t f = d_pre.dims[3];
  for (std::size_t i = 0; i < d_pre.data.size(); i += f) {
    for (std::size_t c = 0; c < f; ++c) db[c] += d_pre.data[i + c];
  }
}

}  // namespace

void ConvParams::zero() {
  std::fill(w.begin(), w.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
}

void BiLstmParams::zero() {
  for (LstmDirParams* d : {&fwd, &bwd}) {
    std::fill(d->wx.begin(), d->wx.end(), 0.0);
    std::fill(d->wh.begin(), d->wh.end(), 0.0);
    std::fill(d->b.begin(), d->b.end(), 0.0);
  }
}

AxisGeom conv_axis(std::size_t in, std::size_t k, std::size_t s, Padding p) {
  if (p == Padding::kSame) {
    const std::size_t out = (in + s - 1) / s;
    const std::size_t span = (out - 1) * s + k;
    const std::size_t total = span > in ? span - in : 0;
    return {out, total / 2};
  }
  if (in < k) {
    throw ShapeError("valid convolution: input extent " + std::to_string(in) +
                     " smaller than kernel " + std::to_string(k));
  }
  return {(in - k) / s + 1, 0};
}

AxisGeom conv_transpose_axis(std::size_t in, std::size_t k, std::size_t s, Padding p) {
  if (p == Padding::kSame) {
    const std::size_t out = in * s;
    const std::size_t total = k > s ? k - s : 0;
    return {out, total / 2};
  }
  return {(in - 1) * s + k, 0};
}

Tensor4 conv2d_forward(const Tensor4& in, const ConvParams& p, const ConvSpec& s,
                       ConvCache* cache) {
  check_spec(s);
  const std::size_t cin = in.dims[3];
  if (p.w.size() != s.kh * s.kw * cin * s.filters || p.b.size() != s.filters) {
    throw ShapeError("conv2d: input " + dims_str(in.dims) + " needs weights (" +
                     std::to_string(s.kh) + "," + std::to_string(s.kw) + "," +
                     std::to_string(cin) + "," + std::to_string(s.filters) +
                     "), got a buffer of " + std::to_string(p.w.size()));
  }
  const AxisGeom gr = conv_axis(in.dims[1], s.kh, s.sh, s.padding);
  const AxisGeom gt = conv_axis(in.dims[2], s.kw, s.sw, s.padding);
  const Geom g{s.kh, s.kw, s.sh, s.sw, gr.pad_lo, gt.pad_lo,
               gr.out, gt.out, in.dims[1], in.dims[2], cin};

  std::vector<double> cols;
  im2col(in, g, cols);
  Tensor4 out(in.dims[0], gr.out, gt.out, s.filters);
  const std::size_t n = in.dims[0] * gr.out * gt.out;
  const std::size_t k = s.kh * s.kw * cin;
  la::gemm(false, false, n, s.filters, k, 1.0, cols.data(), k, p.w.data(), s.filters,
           0.0, out.data.data(), s.filters);
  add_bias(out, p.b);
  if (cache) {
    cache->in_dims = in.dims;
    cache->gr = gr;
    cache->gt = gt;
  }
  apply_activation(out, s.act, cache);
  return out;
}

Tensor4 conv2d_backward(const Tensor4& in, const ConvCache& c, const ConvParams& p,
                        const ConvSpec& s, const Tensor4& upstream, ConvParams* pg) {
  const std::size_t cin = in.dims[3];
  const Geom g{s.kh, s.kw, s.sh, s.sw, c.gr.pad_lo, c.gt.pad_lo,
               c.gr.out, c.gt.out, in.dims[1], in.dims[2], cin};
  const Tensor4 d_pre = activation_backward(s.act, c, upstream);

  const std::size_t n = in.dims[0] * c.gr.out * c.gt.out;
  const std::size_t k = s.kh * s.kw * cin;
  std::vector<double> cols;
  im2col(in, g, cols);
  if (pg) {
    bias_grad(d_pre, pg->b);
    la::gemm(true, false, k, s.filters, n, 1.0, cols.data(), k, d_pre.data.data(),
             s.filters, 1.0, pg->w.data(), s.filters);
  }
  std::vector<double> dcols(n * k);
  la::gemm(false, true, n, k, s.filters, 1.0, d_pre.data.data(), s.filters,
           p.w.data(), s.filters, 0.0, dcols.data(), k);
  Tensor4 d_in(in.dims[0], in.dims[1], in.dims[2], in.dims[3]);
  col2im_add(dcols, g, d_in);
  return d_in;
}

Tensor4 conv_transpose2d_forward(const Tensor4& in, const ConvParams& p,
                                 const ConvSpec& s, ConvCache* cache) {
  check_spec(s);
  const std::size_t cin = in.dims[3];
  if (p.w.size() != s.kh * s.kw * s.filters * cin || p.b.size() != s.filters) {
    throw ShapeError("conv_transpose2d: input " + dims_str(in.dims) +
                     " needs weights (" + std::to_string(s.kh) + "," +
                     std::to_string(s.kw) + "," + std::to_string(s.filters) + "," +
                     std::to_string(cin) + "), got a buffer of " +
                     std::to_string(p.w.size()));
  }
  const AxisGeom gr = conv_transpose_axis(in.dims[1], s.kh, s.sh, s.padding);
  const AxisGeom gt = conv_transpose_axis(in.dims[2], s.kw, s.sw, s.padding);
  // Kernel placements live on the input grid; scatter targets the output.
  const Geom g{s.kh, s.kw, s.sh, s.sw, gr.pad_lo, gt.pad_lo,
               in.dims[1], in.dims[2], gr.out, gt.out, s.filters};

  const std::size_t n = in.dims[0] * in.dims[1] * in.dims[2];
  const std::size_t patch = s.kh * s.kw * s.filters;
  std::vector<double> cols(n * patch);
  la::gemm(false, true, n, patch, cin, 1.0, in.data.data(), cin, p.w.data(), cin, 0.0,
           cols.data(), patch);
  Tensor4 out(in.dims[0], gr.out, gt.out, s.filters);
  col2im_add(cols, g, out);
  add_bias(out, p.b);
  if (cache) {
    cache->in_dims = in.dims;
    cache->gr = gr;
    cache->gt = gt;
  }
  apply_activation(out, s.act, cache);
  return out;
}

Tensor4 conv_transpose2d_backward(const Tensor4& in, const ConvCache& c,
                                  const ConvParams& p, const ConvSpec& s,
                                  const Tensor4& upstream, ConvParams* pg) {
  const std::size_t cin = in.dims[3];
  const Geom g{s.kh, s.kw, s.sh, s.sw, c.gr.pad_lo, c.gt.pad_lo,
               in.dims[1], in.dims[2], c.gr.out, c.gt.out, s.filters};
  const Tensor4 d_pre = activation_backward(s.act, c, upstream);

  const std::size_t n = in.dims[0] * in.dims[1] * in.dims[2];
  const std::size_t patch = s.kh * s.kw * s.filters;
  std::vector<double> cols;
  im2col(d_pre, g, cols);  // gathers from the output grid back onto placements
  if (pg) {
    bias_grad(d_pre, pg->b);
    la::gemm(true, false, patch, cin, n, 1.0, cols.data(), patch, in.data.data(), cin,
             1.0, pg->w.data(), cin);
  }
  Tensor4 d_in(in.dims[0], in.dims[1], in.dims[2], cin);
  la::gemm(false, false, n, cin, patch, 1.0, cols.data(), patch, p.w.data(), cin, 0.0,
           d_in.data.data(), cin);
  return d_in;
}

Tensor4 leaky_relu(const Tensor4& x, double slope) {
  Tensor4 y = x;
  for (double& v : y.data) {
    if (v < 0.0) v *= slope;
  }
  return y;
}

Tensor4 leaky_relu_backward(const Tensor4& preact, const Tensor4& upstream,
                            double slope) {
  require_same_dims(preact, upstream, "leaky_relu_backward");
  Tensor4 d = upstream;
  for (std::size_t i = 0; i < d.data.size(); ++i) {
    if (preact.data[i] < 0.0) d.data[i] *= slope;
  }
  return d;
}

namespace {

// One direction of the LSTM. Outputs land in out_half aligned to the original
// time axis; the cache stays in processing order.
void lstm_run_dir(const Mat& seq, const LstmDirParams& p, std::size_t hidden,
                  bool reverse, LstmDirCache* cache, Mat& out_half) {
  const std::size_t T = seq.rows;
  const std::size_t D = seq.cols;
  const std::size_t H = hidden;

  Mat proc = seq;
  if (reverse) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy_n(seq.row(T - 1 - t), D, proc.row(t));
    }
  }

  Mat gates(T, 4 * H);
  for (std::size_t t = 0; t < T; ++t) std::copy_n(p.b.data(), 4 * H, gates.row(t));
  la::gemm(false, false, T, 4 * H, D, 1.0, proc.v.data(), D, p.wx.data(), 4 * H, 1.0,
           gates.v.data(), 4 * H);

  Mat cell(T, H), tanh_c(T, H), hid(T, H);
  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double* g = gates.row(t);
    if (t > 0) la::gemv(true, H, 4 * H, 1.0, p.wh.data(), 4 * H, h_prev.data(), 1.0, g);
    double* i = g;
    double* f = g + H;
    double* cc = g + 2 * H;
    double* o = g + 3 * H;
    for (std::size_t j = 0; j < H; ++j) {
      i[j] = sigmoid(i[j]);
      f[j] = sigmoid(f[j]);
      cc[j] = std::tanh(cc[j]);
      o[j] = sigmoid(o[j]);
      const double cv = f[j] * c_prev[j] + i[j] * cc[j];
      const double tc = std::tanh(cv);
      cell.at(t, j) = cv;
      tanh_c.at(t, j) = tc;
      hid.at(t, j) = o[j] * tc;
    }
    std::copy_n(hid.row(t), H, h_prev.data());
    std::copy_n(cell.row(t), H, c_prev.data());
    const std::size_t t_out = reverse ? T - 1 - t : t;
    std::copy_n(hid.row(t), H, out_half.row(t_out));
  }
  if (cache) {
    cache->gates = std::move(gates);
    cache->c = std::move(cell);
    cache->tanh_c = std::move(tanh_c);
    cache->h = std::move(hid);
  }
}

void lstm_backward_dir(const Mat& seq, const LstmDirParams& p, std::size_t hidden,
                       bool reverse, const LstmDirCache& c, const Mat& d_half,
                       LstmDirParams* pg, Mat& d_seq) {
  const std::size_t T = seq.rows;
  const std::size_t D = seq.cols;
  const std::size_t H = hidden;

  Mat proc = seq;
  if (reverse) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy_n(seq.row(T - 1 - t), D, proc.row(t));
    }
  }

  Mat dgates(T, 4 * H);
  std::vector<double> dh(H, 0.0), dc(H, 0.0);
  for (std::size_t t = T; t-- > 0;) {
    const std::size_t t_orig = reverse ? T - 1 - t : t;
    for (std::size_t j = 0; j < H; ++j) dh[j] += d_half.at(t_orig, j);

    const double* g = c.gates.row(t);
    const double* i = g;
    const double* f = g + H;
    const double* cc = g + 2 * H;
    const double* o = g + 3 * H;
    double* dg = dgates.row(t);
    for (std::size_t j = 0; j < H; ++j) {
      const double tc = c.tanh_c.at(t, j);
      const double c_prev = t > 0 ? c.c.at(t - 1, j) : 0.0;
      const double do_ = dh[j] * tc;
      const double dcj = dc[j] + dh[j] * o[j] * (1.0 - tc * tc);
      const double di = dcj * cc[j];
      const double dcc = dcj * i[j];
      const double df = dcj * c_prev;
      dc[j] = dcj * f[j];
      dg[j] = di * i[j] * (1.0 - i[j]);
      dg[H + j] = df * f[j] * (1.0 - f[j]);
      dg[2 * H + j] = dcc * (1.0 - cc[j] * cc[j]);
      dg[3 * H + j] = do_ * o[j] * (1.0 - o[j]);
    }
    if (t > 0) {
      la::gemv(false, H, 4 * H, 1.0, p.wh.data(), 4 * H, dg, 0.0, dh.data());
    }
  }

  if (pg) {
    la::gemm(true, false, D, 4 * H, T, 1.0, proc.v.data(), D, dgates.v.data(), 4 * H,
             1.0, pg->wx.data(), 4 * H);
    Mat h_prev(T, H);
    for (std::size_t t = 1; t < T; ++t) std::copy_n(c.h.row(t - 1), H, h_prev.row(t));
    la::gemm(true, false, H, 4 * H, T, 1.0, h_prev.v.data(), H, dgates.v.data(), 4 * H,
             1.0, pg->wh.data(), 4 * H);
    for (std::size_t t = 0; t < T; ++t) {
      const double* dg = dgates.row(t);
      for (std::size_t j = 0; j < 4 * H; ++j) pg->b[j] += dg[j];
    }
  }

  Mat d_proc(T, D);
  la::gemm(false, true, T, D, 4 * H, 1.0, dgates.v.data(), 4 * H, p.wx.data(), 4 * H,
           0.0, d_proc.v.data(), D);
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t t_orig = reverse ? T - 1 - t : t;
    double* dst = d_seq.row(t_orig);
    const double* src = d_proc.row(t);
    for (std::size_t j = 0; j < D; ++j) dst[j] += src[j];
  }
}

void check_bilstm_shapes(const Mat& seq, const BiLstmParams& p) {
  const std::size_t H = p.hidden;
  const std::size_t D = p.input_dim;
  if (seq.rows < 1 || seq.cols != D) {
    throw ShapeError("bilstm: sequence " + std::to_string(seq.rows) + "x" +
                     std::to_string(seq.cols) + " does not match input_dim " +
                     std::to_string(D));
  }
  for (const LstmDirParams* d : {&p.fwd, &p.bwd}) {
    if (d->wx.size() != D * 4 * H || d->wh.size() != H * 4 * H || d->b.size() != 4 * H) {
      throw ShapeError("bilstm: parameter buffers inconsistent with D=" +
                       std::to_string(D) + ", H=" + std::to_string(H));
    }
  }
}

}  // namespace

Mat bilstm_forward(const Mat& seq, const BiLstmParams& p, BiLstmCache* cache) {
  check_bilstm_shapes(seq, p);
  const std::size_t T = seq.rows;
  const std::size_t H = p.hidden;
  Mat half_f(T, H), half_b(T, H);
  lstm_run_dir(seq, p.fwd, H, false, cache ? &cache->fwd : nullptr, half_f);
  lstm_run_dir(seq, p.bwd, H, true, cache ? &cache->bwd : nullptr, half_b);
  Mat out(T, 2 * H);
  for (std::size_t t = 0; t < T; ++t) {
    std::copy_n(half_f.row(t), H, out.row(t));
    std::copy_n(half_b.row(t), H, out.row(t) + H);
  }
  return out;
}

Mat bilstm_backward(const Mat& seq, const BiLstmCache& c, const BiLstmParams& p,
                    const Mat& upstream, BiLstmParams* pg) {
  check_bilstm_shapes(seq, p);
  const std::size_t T = seq.rows;
  const std::size_t H = p.hidden;
  if (upstream.rows != T || upstream.cols != 2 * H) {
    throw ShapeError("bilstm_backward: upstream " + std::to_string(upstream.rows) +
                     "x" + std::to_string(upstream.cols) + " vs expected " +
                     std::to_string(T) + "x" + std::to_string(2 * H));
  }
  Mat d_f(T, H), d_b(T, H);
  for (std::size_t t = 0; t < T; ++t) {
    std::copy_n(upstream.row(t), H, d_f.row(t));
    std::copy_n(upstream.row(t) + H, H, d_b.row(t));
  }
  Mat d_seq(T, seq.cols);
  lstm_backward_dir(seq, p.fwd, H, false, c.fwd, d_f, pg ? &pg->fwd : nullptr, d_seq);
  lstm_backward_dir(seq, p.bwd, H, true, c.bwd, d_b, pg ? &pg->bwd : nullptr, d_seq);
  return d_seq;
}

ConvParams init_conv(const ConvSpec& s, std::size_t in_features, Rng& rng) {
  ConvParams p;
  const std::size_t fan_in = s.kh * s.kw * in_features;
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  p.w.resize(s.kh * s.kw * in_features * s.filters);
  for (double& w : p.w) w = rng.normal(0.0, sd);
  p.b.assign(s.filters, 0.0);
  return p;
}

ConvParams init_conv_transpose(const ConvSpec& s, std::size_t in_features, Rng& rng) {
  ConvParams p;
  const std::size_t fan_in = s.kh * s.kw * in_features;
  const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  p.w.resize(s.kh * s.kw * s.filters * in_features);
  for (double& w : p.w) w = rng.normal(0.0, sd);
  p.b.assign(s.filters, 0.0);
  return p;
}

BiLstmParams init_bilstm(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  BiLstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  const double sdx = std::sqrt(1.0 / static_cast<double>(input_dim));
  const double sdh = std::sqrt(1.0 / static_cast<double>(hidden));
  for (LstmDirParams* d : {&p.fwd, &p.bwd}) {
    d->wx.resize(input_dim * 4 * hidden);
    d->wh.resize(hidden * 4 * hidden);
    d->b.assign(4 * hidden, 0.0);
    for (double& w : d->wx) w = rng.normal(0.0, sdx);
    for (double& w : d->wh) w = rng.normal(0.0, sdh);
    // forget gate opens at init
    for (std::size_t j = 0; j < hidden; ++j) d->b[hidden + j] = 1.0;
  }
  return p;
}

}  // namespace eegvc
