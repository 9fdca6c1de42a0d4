#include "eegvc/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "eegvc/dsp.hpp"

namespace eegvc {

void NetConfig::validate() const {
  if (seg_len < 8 || seg_len % 8 != 0) {
    throw Error("net config: seg_len must be a positive multiple of 8 (three "
                "stride-2 stages), got " + std::to_string(seg_len));
  }
  if (in_rows < 1 || out_rows < 1 || f1 < 1 || f2 < 1 || f3 < 1 || hidden < 1) {
    throw Error("net config: sizes must be >= 1");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
    throw Error("net config: leaky slope must lie in (0, 1)");
  }
  if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0)) {
    throw Error("net config: loss weights must be >= 0 and not both zero");
  }
  if (epochs < 1 || batch_size < 1) {
    throw Error("net config: epochs and batch_size must be >= 1");
  }
}

NetConfig NetConfig::shrunken(std::uint64_t seed) {
  NetConfig c;
  c.seg_len = 64;
  c.f1 = 4;
  c.f2 = 8;
  c.f3 = 16;
  c.hidden = 8;
  c.seed = seed;
  return c;
}

void NetParams::zero() {
  for (ConvParams& p : temporal) p.zero();
  lstm.zero();
  for (ConvParams& p : spatial) p.zero();
  for (ConvParams& p : fusion) p.zero();
  head.zero();
}

Generator::Generator(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const Activation act = Activation::leaky_relu(cfg.leaky_slope);
  t_spec_ = {ConvSpec{cfg.f1, 1, 7, 1, 2, Padding::kSame, act},
             ConvSpec{cfg.f2, 1, 5, 1, 2, Padding::kSame, act},
             ConvSpec{cfg.f3, 1, 3, 1, 2, Padding::kSame, act}};
  s_spec_ = {ConvSpec{cfg.f1, 3, 7, 1, 2, Padding::kSame, act},
             ConvSpec{cfg.f2, 3, 5, 1, 2, Padding::kSame, act},
             ConvSpec{cfg.f3, 3, 3, 1, 2, Padding::kSame, act},
             ConvSpec{2 * cfg.f3, cfg.in_rows, 1, 1, 1, Padding::kValid, act}};
  fu_spec_ = {ConvSpec{4 * cfg.f3, cfg.out_rows, 1, 1, 1, Padding::kValid, act},
              ConvSpec{cfg.f3, 1, 3, 1, 2, Padding::kSame, act},
              ConvSpec{cfg.f2, 1, 5, 1, 2, Padding::kSame, act},
              ConvSpec{cfg.f1, 1, 7, 1, 2, Padding::kSame, act}};
  head_spec_ = ConvSpec{1, 1, 1, 1, 1, Padding::kValid, Activation::none()};

  Rng rng(cfg.seed);
  const std::size_t t_in[3] = {1, cfg.f1, cfg.f2};
  for (std::size_t i = 0; i < 3; ++i) {
    params_.temporal[i] = init_conv(t_spec_[i], t_in[i], rng);
  }
  params_.lstm = init_bilstm(cfg.in_rows * cfg.f3, cfg.hidden, rng);
  const std::size_t s_in[4] = {1, cfg.f1, cfg.f2, cfg.f3};
  for (std::size_t i = 0; i < 4; ++i) {
    params_.spatial[i] = init_conv(s_spec_[i], s_in[i], rng);
  }
  const std::size_t fu_in[4] = {2 * cfg.hidden + 2 * cfg.f3, 4 * cfg.f3, cfg.f3,
                                cfg.f2};
  for (std::size_t i = 0; i < 4; ++i) {
    params_.fusion[i] = init_conv_transpose(fu_spec_[i], fu_in[i], rng);
  }
  params_.head = init_conv(head_spec_, cfg.f1, rng);
}

std::vector<ParamView> param_views(NetParams& p, const NetConfig& cfg) {
  std::vector<ParamView> v;
  auto conv = [&](const std::string& name, ConvParams& cp, const ConvSpec& s,
                  std::size_t cin, bool transpose) {
    if (transpose) {
      v.push_back({name + ".w", {s.kh, s.kw, s.filters, cin}, &cp.w});
    } else {
      v.push_back({name + ".w", {s.kh, s.kw, cin, s.filters}, &cp.w});
    }
    v.push_back({name + ".b", {s.filters}, &cp.b});
  };
  const Activation act = Activation::leaky_relu(cfg.leaky_slope);
  const ConvSpec t0{cfg.f1, 1, 7, 1, 2, Padding::kSame, act};
  const ConvSpec t1{cfg.f2, 1, 5, 1, 2, Padding::kSame, act};
  const ConvSpec t2{cfg.f3, 1, 3, 1, 2, Padding::kSame, act};
  conv("temporal.conv1", p.temporal[0], t0, 1, false);
  conv("temporal.conv2", p.temporal[1], t1, cfg.f1, false);
  conv("temporal.conv3", p.temporal[2], t2, cfg.f2, false);

  const std::size_t D = cfg.in_rows * cfg.f3;
  const std::size_t H = cfg.hidden;
  v.push_back({"temporal.bilstm.fwd.wx", {D, 4 * H}, &p.lstm.fwd.wx});
  v.push_back({"temporal.bilstm.fwd.wh", {H, 4 * H}, &p.lstm.fwd.wh});
  v.push_back({"temporal.bilstm.fwd.b", {4 * H}, &p.lstm.fwd.b});
  v.push_back({"temporal.bilstm.bwd.wx", {D, 4 * H}, &p.lstm.bwd.wx});
  v.push_back({"temporal.bilstm.bwd.wh", {H, 4 * H}, &p.lstm.bwd.wh});
  v.push_back({"temporal.bilstm.bwd.b", {4 * H}, &p.lstm.bwd.b});

  const ConvSpec s0{cfg.f1, 3, 7, 1, 2, Padding::kSame, act};
  const ConvSpec s1{cfg.f2, 3, 5, 1, 2, Padding::kSame, act};
  const ConvSpec s2{cfg.f3, 3, 3, 1, 2, Padding::kSame, act};
  const ConvSpec s3{2 * cfg.f3, cfg.in_rows, 1, 1, 1, Padding::kValid, act};
  conv("spatial.conv1", p.spatial[0], s0, 1, false);
  conv("spatial.conv2", p.spatial[1], s1, cfg.f1, false);
  conv("spatial.conv3", p.spatial[2], s2, cfg.f2, false);
  conv("spatial.conv4", p.spatial[3], s3, cfg.f3, false);

  const ConvSpec f0{4 * cfg.f3, cfg.out_rows, 1, 1, 1, Padding::kValid, act};
  const ConvSpec f1s{cfg.f3, 1, 3, 1, 2, Padding::kSame, act};
  const ConvSpec f2s{cfg.f2, 1, 5, 1, 2, Padding::kSame, act};
  const ConvSpec f3s{cfg.f1, 1, 7, 1, 2, Padding::kSame, act};
  conv("fusion.deconv1", p.fusion[0], f0, 2 * cfg.hidden + 2 * cfg.f3, true);
  conv("fusion.deconv2", p.fusion[1], f1s, 4 * cfg.f3, true);
  conv("fusion.deconv3", p.fusion[2], f2s, cfg.f3, true);
  conv("fusion.deconv4", p.fusion[3], f3s, cfg.f2, true);

  const ConvSpec hs{1, 1, 1, 1, 1, Padding::kValid, Activation::none()};
  conv("head.conv", p.head, hs, cfg.f1, false);
  return v;
}

NetParams Generator::zero_grads() const {
  NetParams g = params_;
  g.zero();
  return g;
}

std::size_t Generator::param_count() const {
  NetParams copy = params_;
  std::size_t n = 0;
  for (const ParamView& pv : param_views(copy, cfg_)) n += pv.data->size();
  return n;
}

Tensor4 Generator::forward(const Tensor4& in, ForwardCache* cache) const {
  if (in.dims[1] != cfg_.in_rows || in.dims[2] != cfg_.seg_len || in.dims[3] != 1) {
    throw ShapeError("generator input " + dims_str(in.dims) + " vs expected (B," +
                     std::to_string(cfg_.in_rows) + "," +
                     std::to_string(cfg_.seg_len) + ",1)");
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.input = in;

  // temporal branch
  const Tensor4* cur = &c.input;
  for (std::size_t i = 0; i < 3; ++i) {
    c.t_out[i] = conv2d_forward(*cur, params_.temporal[i], t_spec_[i], &c.t_cc[i]);
    cur = &c.t_out[i];
  }
  const Tensor4& t3 = c.t_out[2];
  const std::size_t B = t3.dims[0];
  const std::size_t R = t3.dims[1];
  const std::size_t T = t3.dims[2];
  const std::size_t F = t3.dims[3];
  const std::size_t D = R * F;

  // per time step, flatten rows x features into the sequence dimension
  c.seq.assign(B, Mat(T, D));
  c.lstm_cc.assign(B, BiLstmCache{});
  c.lstm_out = Tensor4(B, 1, T, 2 * cfg_.hidden);
  for (std::size_t b = 0; b < B; ++b) {
    Mat& seq = c.seq[b];
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t t = 0; t < T; ++t) {
        std::copy_n(&t3.data[t3.index(b, r, t, 0)], F, seq.row(t) + r * F);
      }
    }
    Mat out = bilstm_forward(seq, params_.lstm, &c.lstm_cc[b]);
    std::copy(out.v.begin(), out.v.end(),
              c.lstm_out.data.begin() + static_cast<std::ptrdiff_t>(
                                            c.lstm_out.index(b, 0, 0, 0)));
  }

  // spatial branch
  cur = &c.input;
  for (std::size_t i = 0; i < 4; ++i) {
    c.s_out[i] = conv2d_forward(*cur, params_.spatial[i], s_spec_[i], &c.s_cc[i]);
    cur = &c.s_out[i];
  }
  const Tensor4& s4 = c.s_out[3];

  // fuse on the feature axis, temporal features first
  const std::size_t ft = c.lstm_out.dims[3];
  const std::size_t fs = s4.dims[3];
  c.concat = Tensor4(B, 1, T, ft + fs);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy_n(&c.lstm_out.data[c.lstm_out.index(b, 0, t, 0)], ft,
                  &c.concat.data[c.concat.index(b, 0, t, 0)]);
      std::copy_n(&s4.data[s4.index(b, 0, t, 0)], fs,
                  &c.concat.data[c.concat.index(b, 0, t, ft)]);
    }
  }

  cur = &c.concat;
  for (std::size_t i = 0; i < 4; ++i) {
    c.fu_out[i] =
        conv_transpose2d_forward(*cur, params_.fusion[i], fu_spec_[i], &c.fu_cc[i]);
    cur = &c.fu_out[i];
  }
  return conv2d_forward(*cur, params_.head, head_spec_, &c.head_cc);
}

Tensor4 Generator::backward(const ForwardCache& c, const Tensor4& d_out,
                            NetParams& grads) const {
  Tensor4 d = conv2d_backward(c.fu_out[3], c.head_cc, params_.head, head_spec_, d_out,
                              &grads.head);
  for (std::size_t i = 4; i-- > 1;) {
    d = conv_transpose2d_backward(c.fu_out[i - 1], c.fu_cc[i], params_.fusion[i],
                                  fu_spec_[i], d, &grads.fusion[i]);
  }
  d = conv_transpose2d_backward(c.concat, c.fu_cc[0], params_.fusion[0], fu_spec_[0],
                                d, &grads.fusion[0]);

  // split the fused features
  const std::size_t B = c.concat.dims[0];
  const std::size_t T = c.concat.dims[2];
  const std::size_t ft = c.lstm_out.dims[3];
  const std::size_t fs = c.s_out[3].dims[3];
  Tensor4 d_lstm_out(B, 1, T, ft);
  Tensor4 d_s4(B, 1, T, fs);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < T; ++t) {
      std::copy_n(&d.data[d.index(b, 0, t, 0)], ft,
                  &d_lstm_out.data[d_lstm_out.index(b, 0, t, 0)]);
      std::copy_n(&d.data[d.index(b, 0, t, ft)], fs,
                  &d_s4.data[d_s4.index(b, 0, t, 0)]);
    }
  }

  // spatial branch
  Tensor4 d_spatial = d_s4;
  for (std::size_t i = 4; i-- > 1;) {
    d_spatial = conv2d_backward(c.s_out[i - 1], c.s_cc[i], params_.spatial[i],
                                s_spec_[i], d_spatial, &grads.spatial[i]);
  }
  Tensor4 d_input = conv2d_backward(c.input, c.s_cc[0], params_.spatial[0], s_spec_[0],
                                    d_spatial, &grads.spatial[0]);

  // temporal branch through the BiLSTM
  const Tensor4& t3 = c.t_out[2];
  const std::size_t R = t3.dims[1];
  const std::size_t F = t3.dims[3];
  Tensor4 d_t3(t3.dims[0], R, t3.dims[2], F);
  for (std::size_t b = 0; b < B; ++b) {
    Mat up(T, ft);
    std::copy_n(&d_lstm_out.data[d_lstm_out.index(b, 0, 0, 0)], T * ft, up.v.data());
    Mat d_seq = bilstm_backward(c.seq[b], c.lstm_cc[b], params_.lstm, up, &grads.lstm);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t t = 0; t < T; ++t) {
        std::copy_n(d_seq.row(t) + r * F, F, &d_t3.data[d_t3.index(b, r, t, 0)]);
      }
    }
  }
  Tensor4 d_temporal = d_t3;
  for (std::size_t i = 3; i-- > 1;) {
    d_temporal = conv2d_backward(c.t_out[i - 1], c.t_cc[i], params_.temporal[i],
                                 t_spec_[i], d_temporal, &grads.temporal[i]);
  }
  Tensor4 d_in_t = conv2d_backward(c.input, c.t_cc[0], params_.temporal[0], t_spec_[0],
                                   d_temporal, &grads.temporal[0]);
  for (std::size_t i = 0; i < d_input.data.size(); ++i) {
    d_input.data[i] += d_in_t.data[i];
  }
  return d_input;
}

// ---- composite loss ---------------------------------------------------------

LossValue composite_loss(const Tensor4& gen, const Tensor4& target, double alpha,
                         double beta) {
  require_same_dims(gen, target, "composite_loss");
  if (alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0)) {
    throw Error("composite_loss: weights must be >= 0 and not both zero");
  }
  const std::size_t N = gen.dims[2];
  const std::size_t C = gen.dims[0] * gen.dims[1] * gen.dims[3];
  const double total_samples = static_cast<double>(C) * static_cast<double>(N);

  LossValue lv;
  lv.grad = Tensor4(gen.dims[0], gen.dims[1], gen.dims[2], gen.dims[3]);

  double tmse = 0.0;
  for (std::size_t i = 0; i < gen.data.size(); ++i) {
    const double dlt = gen.data[i] - target.data[i];
    tmse += dlt * dlt;
  }
  tmse /= total_samples;
  for (std::size_t i = 0; i < gen.data.size(); ++i) {
    lv.grad.data[i] =
        alpha * 2.0 * (gen.data[i] - target.data[i]) / total_samples;
  }

  const std::size_t M = N / 2;
  double fmse = 0.0;
  if (M >= 1) {
    const std::size_t B = gen.dims[0];
    const std::size_t R = gen.dims[1];
    const std::size_t F = gen.dims[3];
    std::vector<double> gline(N), tline(N);
    std::vector<std::complex<double>> w(N);
    const double nn = static_cast<double>(N);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t f = 0; f < F; ++f) {
          for (std::size_t t = 0; t < N; ++t) {
            gline[t] = gen.at(b, r, t, f);
            tline[t] = target.at(b, r, t, f);
          }
          const auto gbins = dsp::fft_r2c(gline);
          const auto tbins = dsp::fft_r2c(tline);
          std::fill(w.begin(), w.end(), std::complex<double>(0.0, 0.0));
          double acc = 0.0;
          for (std::size_t k = 1; k <= M; ++k) {
            const double gm = std::abs(gbins[k]);
            const double tm = std::abs(tbins[k]);
            const double diff = (gm - tm) / nn;
            acc += diff * diff;
            if (gm > 0.0) {
              const double wk = 2.0 * diff /
                                (static_cast<double>(M) * static_cast<double>(C) *
                                 nn * gm);
              w[k] = wk * gbins[k];
            }
          }
          fmse += acc / static_cast<double>(M);
          if (beta != 0.0) {
            const std::vector<double> gback = dsp::ifft_real(w);
            for (std::size_t t = 0; t < N; ++t) {
              lv.grad.data[lv.grad.index(b, r, t, f)] += beta * gback[t];
            }
          }
        }
      }
    }
    fmse /= static_cast<double>(C);
  }

  lv.tmse = tmse;
  lv.fmse = fmse;
  lv.total = alpha * tmse + beta * fmse;
  return lv;
}

// ---- training ---------------------------------------------------------------

Tensor4 sources_to_tensor(const std::vector<const Mat*>& blocks) {
  if (blocks.empty()) throw Error("sources_to_tensor: no blocks");
  const std::size_t R = blocks[0]->rows;
  const std::size_t L = blocks[0]->cols;
  Tensor4 t(blocks.size(), R, L, 1);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b]->rows != R || blocks[b]->cols != L) {
      throw ShapeError("sources_to_tensor: block " + std::to_string(b) +
                       " shape differs");
    }
    std::copy(blocks[b]->v.begin(), blocks[b]->v.end(),
              t.data.begin() + static_cast<std::ptrdiff_t>(b * R * L));
  }
  return t;
}

Tensor4 targets_to_tensor(const std::vector<const Mat*>& blocks) {
  return sources_to_tensor(blocks);
}

Trainer::Trainer(const NetConfig& cfg)
    : net_(cfg),
      opt_([&] {
        std::vector<std::size_t> sizes;
        for (const ParamView& pv : param_views(net_.params(), cfg)) {
          sizes.push_back(pv.data->size());
        }
        return AdamState::init(sizes, cfg.adam);
      }()),
      shuffle_rng_(splitmix64(cfg.seed ^ 0x5eedfeedULL)) {}

bool Trainer::capped() const {
  return net_.config().max_updates > 0 && updates_ >= net_.config().max_updates;
}

double Trainer::run_epoch(const std::vector<SegmentPair>& train) {
  if (train.empty()) throw Error("train: empty dataset");
  const NetConfig& cfg = net_.config();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng_.shuffle(order);

  std::vector<ParamView> pviews = param_views(net_.params(), cfg);
  NetParams grads = net_.zero_grads();
  std::vector<ParamView> gviews = param_views(grads, cfg);

  double loss_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t pos = 0; pos < order.size() && !capped();) {
    const std::size_t bsz = std::min(cfg.batch_size, order.size() - pos);
    std::vector<const Mat*> src, tgt;
    for (std::size_t i = 0; i < bsz; ++i) {
      src.push_back(&train[order[pos + i]].source);
      tgt.push_back(&train[order[pos + i]].target);
    }
    pos += bsz;

    ForwardCache cache;
    const Tensor4 out = net_.forward(sources_to_tensor(src), &cache);
    const LossValue lv = composite_loss(out, targets_to_tensor(tgt), cfg.alpha,
                                        cfg.beta);
    if (!std::isfinite(lv.total)) {
      throw Error("train: non-finite loss (" + std::to_string(lv.total) +
                  ") at update " + std::to_string(updates_));
    }
    grads.zero();
    net_.backward(cache, lv.grad, grads);

    std::vector<std::span<double>> ps;
    std::vector<std::span<const double>> gs;
    for (std::size_t i = 0; i < pviews.size(); ++i) {
      ps.emplace_back(*pviews[i].data);
      gs.emplace_back(*gviews[i].data);
    }
    adam_step(ps, gs, opt_);
    ++updates_;
    loss_sum += lv.total;
    ++batches;
  }
  return batches ? loss_sum / static_cast<double>(batches) : 0.0;
}

double Trainer::evaluate_loss(const std::vector<SegmentPair>& pairs) const {
  if (pairs.empty()) return 0.0;
  const NetConfig& cfg = net_.config();
  double acc = 0.0;
  for (const SegmentPair& p : pairs) {
    const Tensor4 out = net_.forward(sources_to_tensor({&p.source}));
    acc += composite_loss(out, targets_to_tensor({&p.target}), cfg.alpha, cfg.beta)
               .total;
  }
  return acc / static_cast<double>(pairs.size());
}

namespace {

std::vector<Mat> generate_for(const Generator& net,
                              const std::vector<SegmentPair>& pairs) {
  std::vector<Mat> srcs;
  srcs.reserve(pairs.size());
  for (const SegmentPair& p : pairs) srcs.push_back(p.source);
  return generate(net, srcs);
}

}  // namespace

std::pair<Generator, TrainingReport> train(const std::vector<SegmentPair>& train_pairs,
                                           const std::vector<SegmentPair>& val_pairs,
                                           const NetConfig& cfg) {
  if (train_pairs.empty()) throw Error("train: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();

  Trainer tr(cfg);
  TrainingReport report;
  report.seed = cfg.seed;

  NetParams best = tr.net().params();
  double best_score = std::numeric_limits<double>::infinity();

  for (std::size_t e = 0; e < cfg.epochs && !tr.capped(); ++e) {
    EpochLog log;
    log.train_loss = tr.run_epoch(train_pairs);

    const bool have_val = !val_pairs.empty();
    log.val_loss = have_val ? tr.evaluate_loss(val_pairs) : log.train_loss;
    if (have_val) {
      std::vector<Mat> gen = generate_for(tr.net(), val_pairs);
      std::vector<Mat> tgts;
      for (const SegmentPair& p : val_pairs) tgts.push_back(p.target);
      const EvalSummary s = evaluate_channels(gen, tgts);
      log.val_cc_mean = s.all_cc_mean;
      log.val_mae_mean = s.all_mae_mean;
    }
    report.epochs.push_back(log);

    if (log.val_loss < best_score) {
      best_score = log.val_loss;
      best = tr.net().params();
    }
  }

  tr.net().params() = best;
  report.updates = tr.updates();

  if (!val_pairs.empty()) {
    std::vector<Mat> gen = generate_for(tr.net(), val_pairs);
    std::vector<Mat> tgts;
    for (const SegmentPair& p : val_pairs) tgts.push_back(p.target);
    report.val_channels = evaluate_channels(gen, tgts).channels;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(tr.net()), std::move(report)};
}

std::vector<Mat> generate(const Generator& net, const std::vector<Mat>& sources) {
  std::vector<Mat> out;
  out.reserve(sources.size());
  const std::size_t L = net.config().seg_len;
  const std::size_t R = net.config().out_rows;
  for (const Mat& s : sources) {
    const Tensor4 y = net.forward(sources_to_tensor({&s}));
    Mat block(R, L);
    std::copy(y.data.begin(), y.data.end(), block.v.begin());
    out.push_back(std::move(block));
  }
  return out;
}

}  // namespace eegvc
